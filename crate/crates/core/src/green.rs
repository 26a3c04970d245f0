//! Zero-mean Green function of `-Delta` on the unit torus and its split into
//! a logarithmic singular part and a bounded remainder.
//!
//! `V(x) = sum_{k != 0} e^{2 pi i k.x} / (4 pi^2 |k|^2)`. Summing one lattice
//! direction in closed form leaves a series in the other direction whose
//! slowly decaying part is a logarithm, so `V` is evaluated to machine
//! precision with a handful of exponentially small correction terms.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::min_image;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenValues {
    pub v: f64,
    pub v0: f64,
    pub v1: f64,
}

/// Evaluator for `V = V0 + V1` with `V1(x) = -(1/2pi) log|x|`.
#[derive(Clone, Copy, Debug)]
pub struct GreenSplit {
    /// Coefficient of `log|x|` in the singular part.
    pub log_prefactor: f64,
    /// Relative size below which the correction series is truncated.
    pub series_tol: f64,
}

impl Default for GreenSplit {
    fn default() -> Self {
        Self { log_prefactor: -1.0 / (2.0 * PI), series_tol: 1e-18 }
    }
}

/// `log |1 - e^{-s + i phi}|^2`, accurate for small `s` and `phi`.
fn log_abs2(s: f64, phi: f64) -> f64 {
    let a = -(-s).exp_m1();
    let sh = (0.5 * phi).sin();
    (a * a + 4.0 * (-s).exp() * sh * sh).ln()
}

impl GreenSplit {
    /// Value of `V` at `x` (any representative; the kernel is periodic).
    pub fn v(&self, x: [f64; 2]) -> Result<f64> {
        let [x1, x2] = min_image(x);
        let (a, b) = if x1.abs() >= x2.abs() { (x1.abs(), x2.abs()) } else { (x2.abs(), x1.abs()) };
        if a == 0.0 {
            return Err(Error::SingularPoint);
        }
        let tp = 2.0 * PI;
        let mut v = 1.0 / 12.0 - 0.5 * a + 0.5 * a * a;
        v -= (log_abs2(tp * a, tp * b) + log_abs2(tp * (1.0 - a), tp * b)) / (4.0 * PI);
        let mut tail = 0.0;
        for m in 1..200 {
            let mf = m as f64;
            let q = (-tp * mf).exp();
            let term = (tp * mf * b).cos()
                * ((-tp * mf * a).exp() + (-tp * mf * (1.0 - a)).exp())
                * q
                / (mf * (1.0 - q));
            tail += term;
            if q < self.series_tol {
                break;
            }
        }
        Ok(v + tail / tp)
    }

    pub fn eval(&self, x: [f64; 2]) -> Result<GreenValues> {
        let v = self.v(x)?;
        let [x1, x2] = min_image(x);
        let v1 = self.log_prefactor * x1.hypot(x2).ln();
        Ok(GreenValues { v, v0: v - v1, v1 })
    }

    /// Symmetric truncated lattice sum over `|k|_inf <= cutoff`; slow and
    /// only accurate for `cutoff * |x| >> 1`. Kept as an independent oracle.
    pub fn v_truncated(&self, x: [f64; 2], cutoff: i64) -> f64 {
        let mut acc = 0.0;
        for k1 in -cutoff..=cutoff {
            for k2 in -cutoff..=cutoff {
                if k1 == 0 && k2 == 0 {
                    continue;
                }
                let kk = (k1 * k1 + k2 * k2) as f64;
                acc += (2.0 * PI * (k1 as f64 * x[0] + k2 as f64 * x[1])).cos() / kk;
            }
        }
        acc / (4.0 * PI * PI)
    }

    /// `sup |grad V0|` over the fundamental cell, by central differences at
    /// the cell centres of a 512 grid (one octant suffices by symmetry).
    /// Computed once per process.
    pub fn grad_v0_sup(&self) -> f64 {
        static SUP: OnceLock<f64> = OnceLock::new();
        *SUP.get_or_init(|| grad_v0_sup_on(512))
    }
}

pub(crate) fn grad_v0_sup_on(n: usize) -> f64 {
    let g = GreenSplit::default();
    let h = 1.0 / n as f64;
    let d: f64 = 1e-5;
    let v0 = |x: [f64; 2]| g.eval(x).map(|r| r.v0).unwrap_or(f64::NAN);
    let mut sup = 0.0_f64;
    for i in 0..n / 2 {
        let a = (i as f64 + 0.5) * h;
        for j in 0..=i {
            let b = (j as f64 + 0.5) * h;
            // stay inside the fundamental cell so min_image does not jump
            let da = d.min(0.5 - a);
            let g1 = (v0([a + da, b]) - v0([a - da, b])) / (2.0 * da);
            let g2 = (v0([a, b + d]) - v0([a, b - d])) / (2.0 * d);
            sup = sup.max(g1.hypot(g2));
        }
    }
    sup
}

/// Convenience wrapper around [`GreenSplit::eval`].
pub fn green_split_eval(x: [f64; 2]) -> Result<GreenValues> {
    GreenSplit::default().eval(x)
}
