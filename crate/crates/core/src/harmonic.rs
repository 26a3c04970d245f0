//! Discrete maximal functions, BMO/bmo norms and inequality audits.
//!
//! Nodes are treated as cells of area `h^2`. A cube of level `j` spans
//! `s = n >> j` cells per axis; anchors lie on a lattice of stride
//! `max(s / stride_div, 1)` (half-side by default). In the periodic geometry
//! cubes wrap around the torus; in the clipped geometry they start at `-s/2`
//! and are intersected with `[-1/2, 1/2]^2`, the measure being `|Q ∩ Ω|`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::field::ScalarField;
use crate::spectral::gradient;
use crate::spectral::biot_savart;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    Periodic,
    Clipped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BmoMode {
    /// Periodic cubes, mean oscillation about the cube mean.
    BmoTorus,
    /// Clipped cubes, oscillation about the best constant, plus the average
    /// of `|f|` over unit balls (which all cover the domain).
    BmoLocal,
}

/// Half-open index ranges `[r0, r1) x [c0, c1)`; periodic ranges may run
/// past `n` and are read modulo `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cube {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
}

impl Cube {
    pub fn cells(&self) -> usize {
        (self.rows.1 - self.rows.0) * (self.cols.1 - self.cols.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CubeFamily {
    n: usize,
    geometry: Geometry,
    stride_div: usize,
}

impl CubeFamily {
    pub fn new(n: usize, geometry: Geometry) -> Self {
        Self { n, geometry, stride_div: 2 }
    }

    /// A finer anchor lattice containing this family.
    pub fn refined(self) -> Self {
        Self { stride_div: self.stride_div * 2, ..self }
    }

    pub fn levels(&self) -> usize {
        self.n.trailing_zeros() as usize + 1
    }

    pub fn side(&self, level: usize) -> usize {
        self.n >> level
    }

    fn stride(&self, s: usize) -> usize {
        (s / self.stride_div).max(1)
    }

    fn axis_ranges(&self, s: usize) -> Vec<(usize, usize)> {
        let n = self.n;
        let st = self.stride(s);
        match self.geometry {
            Geometry::Periodic => (0..n).step_by(st).map(|a| (a, a + s)).collect(),
            Geometry::Clipped => {
                let mut out = Vec::new();
                let mut a = -((s / 2) as i64);
                while a < n as i64 {
                    let lo = a.max(0) as usize;
                    let hi = ((a + s as i64).min(n as i64)) as usize;
                    if hi > lo {
                        out.push((lo, hi));
                    }
                    a += st as i64;
                }
                out
            }
        }
    }

    pub fn cubes(&self, level: usize) -> Vec<Cube> {
        let r = self.axis_ranges(self.side(level));
        let mut out = Vec::with_capacity(r.len() * r.len());
        for &rows in &r {
            for &cols in &r {
                out.push(Cube { rows, cols });
            }
        }
        out
    }

    pub fn all_cubes(&self) -> Vec<Cube> {
        (0..self.levels()).flat_map(|l| self.cubes(l)).collect()
    }
}

/// Summed-area table of the 2x periodic extension of a field.
struct Sat {
    n: usize,
    table: Vec<f64>,
}

impl Sat {
    fn new(f: &ScalarField) -> Self {
        let n = f.grid().n();
        let m = 2 * n + 1;
        let mut table = vec![0.0; m * m];
        for i in 0..2 * n {
            let mut row = 0.0;
            for j in 0..2 * n {
                row += f.get(i % n, j % n);
                table[(i + 1) * m + j + 1] = table[i * m + j + 1] + row;
            }
        }
        Self { n, table }
    }

    fn sum(&self, c: &Cube) -> f64 {
        let m = 2 * self.n + 1;
        let t = |i: usize, j: usize| self.table[i * m + j];
        let (r0, r1) = c.rows;
        let (c0, c1) = c.cols;
        t(r1, c1) - t(r0, c1) - t(r1, c0) + t(r0, c0)
    }
}

fn for_cells(c: &Cube, n: usize, mut f: impl FnMut(usize)) {
    for i in c.rows.0..c.rows.1 {
        let row = (i % n) * n;
        for j in c.cols.0..c.cols.1 {
            f(row + j % n);
        }
    }
}

/// Square maximal function `Mf(x) = sup_{Q ∋ x} |avg_Q f|` over a family.
pub fn maximal_with(f: &ScalarField, family: &CubeFamily) -> ScalarField {
    let n = f.grid().n();
    let sat = Sat::new(f);
    let per_level: Vec<Vec<f64>> = (0..family.levels())
        .into_par_iter()
        .map(|l| {
            let mut m = vec![0.0_f64; n * n];
            for c in family.cubes(l) {
                let avg = (sat.sum(&c) / c.cells() as f64).abs();
                for_cells(&c, n, |k| m[k] = m[k].max(avg));
            }
            m
        })
        .collect();
    let mut out = vec![0.0_f64; n * n];
    for m in &per_level {
        for (o, v) in out.iter_mut().zip(m) {
            *o = o.max(*v);
        }
    }
    ScalarField::from_raw(f.grid(), out)
}

/// Periodic maximal function.
pub fn maximal(f: &ScalarField) -> ScalarField {
    maximal_with(f, &CubeFamily::new(f.grid().n(), Geometry::Periodic))
}

/// Maximal function of the clipped domain with measure `|Q ∩ Ω|`.
pub fn maximal_local(f: &ScalarField) -> ScalarField {
    maximal_with(f, &CubeFamily::new(f.grid().n(), Geometry::Clipped))
}

fn oscillation(f: &ScalarField, c: &Cube, median: bool, buf: &mut Vec<f64>) -> f64 {
    let n = f.grid().n();
    let v = f.values();
    buf.clear();
    for_cells(c, n, |k| buf.push(v[k]));
    let centre = if median {
        let mid = buf.len() / 2;
        *buf.select_nth_unstable_by(mid, f64::total_cmp).1
    } else {
        buf.iter().sum::<f64>() / buf.len() as f64
    };
    buf.iter().map(|x| (x - centre).abs()).sum::<f64>() / buf.len() as f64
}

pub fn bmo_norm_with(f: &ScalarField, mode: BmoMode, family: &CubeFamily) -> f64 {
    let median = mode == BmoMode::BmoLocal;
    let osc = (0..family.levels())
        .into_par_iter()
        .map(|l| {
            let mut buf = Vec::new();
            family.cubes(l).iter().map(|c| oscillation(f, c, median, &mut buf)).fold(0.0, f64::max)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    match mode {
        BmoMode::BmoTorus => osc,
        BmoMode::BmoLocal => osc + f.lp_norm(1.0),
    }
}

pub fn bmo_norm(f: &ScalarField, mode: BmoMode) -> f64 {
    let geometry = match mode {
        BmoMode::BmoTorus => Geometry::Periodic,
        BmoMode::BmoLocal => Geometry::Clipped,
    };
    bmo_norm_with(f, mode, &CubeFamily::new(f.grid().n(), geometry))
}

/// `lhs <= constant * rhs`, with a relative slack of `1e-9`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub lhs: f64,
    pub rhs: f64,
    #[serde(rename = "constant")]
    pub fitted_constant: f64,
    pub pass: bool,
}

impl NormReport {
    pub fn new(lhs: f64, rhs: f64, fitted_constant: f64) -> Self {
        let pass = lhs <= fitted_constant * rhs * (1.0 + 1e-9);
        Self { lhs, rhs, fitted_constant, pass }
    }

    /// Smallest constant that would make this report pass.
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain record serialises")
    }
}

/// Largest BMO(T^2) seminorm among the components of `grad u`, `u` the
/// Biot–Savart velocity of `omega`.
pub fn cz_lhs(omega: &ScalarField) -> Result<f64> {
    let u = biot_savart(omega)?;
    let mut best = 0.0_f64;
    for comp in [&u.x1, &u.x2] {
        let g = gradient(comp);
        best = best.max(bmo_norm(&g.x1, BmoMode::BmoTorus)).max(bmo_norm(&g.x2, BmoMode::BmoTorus));
    }
    Ok(best)
}

pub fn cz_bound_check(omega: &ScalarField, constant: f64) -> Result<NormReport> {
    Ok(NormReport::new(cz_lhs(omega)?, omega.lp_norm(f64::INFINITY), constant))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    /// Periodic variant; `None` when `g` does not have zero mean.
    pub torus: Option<NormReport>,
    pub local: NormReport,
}

/// `|int f g| <= C ||Mf||_1 ||g||_BMO` (mean-zero `g`) and the clipped
/// `bmo` variant, which needs no mean condition.
pub fn duality_check(f: &ScalarField, g: &ScalarField, c_torus: f64, c_local: f64) -> DualityReport {
    let lhs = f.zip_map(g, |a, b| a * b).integral().abs();
    let torus = (g.mean().abs() <= crate::spectral::ZERO_MEAN_TOL).then(|| {
        let rhs = maximal(f).lp_norm(1.0) * bmo_norm(g, BmoMode::BmoTorus);
        NormReport::new(lhs, rhs, c_torus)
    });
    let rhs = maximal_local(f).lp_norm(1.0) * bmo_norm(g, BmoMode::BmoLocal);
    DualityReport { torus, local: NormReport::new(lhs, rhs, c_local) }
}

/// Right-hand side `eta + int |g| log+ |g| + log(1/eta) ||g||_1`.
pub fn wiener_rhs(g: &ScalarField, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(param(format!("eta must lie in (0, 1], got {eta}")));
    }
    let llog = g.map(|v| {
        let a = v.abs();
        if a > 1.0 {
            a * a.ln()
        } else {
            0.0
        }
    });
    Ok(eta + llog.integral() + (1.0 / eta).ln() * g.lp_norm(1.0))
}

pub fn wiener_check(g: &ScalarField, eta: f64, constant: f64) -> Result<NormReport> {
    let rhs = wiener_rhs(g, eta)?;
    Ok(NormReport::new(maximal(g).integral(), rhs, constant))
}
