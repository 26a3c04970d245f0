use std::ops::{Add, Mul, Sub};

use crate::error::{param, Error, Result};
use crate::grid::TorusGrid;

/// Real node values on a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn from_values(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(param(format!(
                "field needs {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite field value at index {k}")));
        }
        Ok(Self { grid, values })
    }

    /// Unchecked constructor for values produced by our own kernels.
    pub(crate) fn from_raw(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    /// Sample `f(x1, x2)` at every node.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            let x1 = grid.coord(i);
            for j in 0..n {
                values.push(f(x1, grid.coord(j)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid quadrature `h^2 * sum f`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().sum::<f64>()
    }

    /// `(h^2 sum |f|^p)^(1/p)`, or the max norm for `p = inf`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let s: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        (self.grid.cell_area() * s).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v * v).sum();
        (self.grid.cell_area() * s).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid, values }
    }

    pub fn minus_mean(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// Bilinear interpolation at a wrapped point (adjoint of CIC deposition).
    #[inline]
    pub fn interpolate(&self, x: [f64; 2]) -> f64 {
        self.grid
            .cic(x)
            .nodes(&self.grid)
            .iter()
            .map(|&(k, w)| w * self.values[k])
            .sum()
    }

    /// Largest pointwise difference to `other`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: Self) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: Self) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, s: f64) -> ScalarField {
        self.map(|v| v * s)
    }
}

/// Two scalar components on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub x1: ScalarField,
    pub x2: ScalarField,
}

impl VectorField {
    pub fn new(x1: ScalarField, x2: ScalarField) -> Result<Self> {
        if x1.grid() != x2.grid() {
            return Err(param("vector components on different grids"));
        }
        Ok(Self { x1, x2 })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self { x1: ScalarField::zeros(grid), x2: ScalarField::zeros(grid) }
    }

    pub fn grid(&self) -> TorusGrid {
        self.x1.grid()
    }

    pub fn component(&self, a: usize) -> &ScalarField {
        match a {
            0 => &self.x1,
            1 => &self.x2,
            _ => panic!("vector component {a} out of range"),
        }
    }

    #[inline]
    pub fn interpolate(&self, x: [f64; 2]) -> [f64; 2] {
        let grid = self.grid();
        let mut out = [0.0; 2];
        for (k, w) in grid.cic(x).nodes(&grid) {
            out[0] += w * self.x1.values()[k];
            out[1] += w * self.x2.values()[k];
        }
        out
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        self.x1.zip_map(&self.x2, |a, b| a.hypot(b))
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude().max_abs()
    }

    /// `h^2 sum |v|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        let s: f64 = self
            .x1
            .values()
            .iter()
            .zip(self.x2.values())
            .map(|(a, b)| a * a + b * b)
            .sum();
        self.grid().cell_area() * s
    }

    /// `(h^2 sum |v|^p)^(1/p)` of the magnitude.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.magnitude().lp_norm(p)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { x1: &self.x1 * s, x2: &self.x2 * s }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { x1: &self.x1 - &other.x1, x2: &self.x2 - &other.x2 }
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.x1.max_diff(&other.x1).max(self.x2.max_diff(&other.x2))
    }
}

/// 2x2 tensor per node, components `t[i][j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    pub t: [[ScalarField; 2]; 2],
    symmetric: bool,
}

/// Pointwise tolerance of the symmetry flag.
pub const SYMMETRY_TOL: f64 = 1e-12;

impl TensorField {
    pub fn new(t: [[ScalarField; 2]; 2]) -> Result<Self> {
        let g = t[0][0].grid();
        if t.iter().flatten().any(|c| c.grid() != g) {
            return Err(param("tensor components on different grids"));
        }
        Ok(Self { t, symmetric: false })
    }

    /// Builds a symmetric tensor, checking `|t12 - t21| <= 1e-12` pointwise.
    pub fn new_symmetric(t: [[ScalarField; 2]; 2]) -> Result<Self> {
        let mut out = Self::new(t)?;
        let asym = out.t[0][1].max_diff(&out.t[1][0]);
        if asym > SYMMETRY_TOL {
            return Err(Error::Data(format!("tensor flagged symmetric but |t12 - t21| = {asym:e}")));
        }
        out.symmetric = true;
        Ok(out)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn grid(&self) -> TorusGrid {
        self.t[0][0].grid()
    }

    pub fn component(&self, i: usize, j: usize) -> &ScalarField {
        &self.t[i][j]
    }

    pub fn trace(&self) -> ScalarField {
        &self.t[0][0] + &self.t[1][1]
    }

    /// Pointwise `T : (a ⊗ b)` for node vectors `a`, `b`.
    pub fn contract(&self, a: &VectorField, b: &VectorField) -> ScalarField {
        let g = self.grid();
        let values = (0..g.len())
            .map(|k| {
                let av = [a.x1.values()[k], a.x2.values()[k]];
                let bv = [b.x1.values()[k], b.x2.values()[k]];
                let mut s = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        s += self.t[i][j].values()[k] * av[i] * bv[j];
                    }
                }
                s
            })
            .collect();
        ScalarField::from_raw(g, values)
    }

    /// Bilinear interpolation of all four components.
    pub fn interpolate(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let g = self.grid();
        let mut out = [[0.0; 2]; 2];
        for (k, w) in g.cic(x).nodes(&g) {
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] += w * self.t[i][j].values()[k];
                }
            }
        }
        out
    }

    /// Smallest eigenvalue over all nodes, using the symmetric part.
    pub fn min_eigenvalue(&self) -> f64 {
        let g = self.grid();
        (0..g.len())
            .map(|k| {
                let a = self.t[0][0].values()[k];
                let d = self.t[1][1].values()[k];
                let b = 0.5 * (self.t[0][1].values()[k] + self.t[1][0].values()[k]);
                let m = 0.5 * (a + d);
                let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
                m - r
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> TorusGrid {
        TorusGrid::new(16).unwrap()
    }

    #[test]
    fn norms_of_a_sine() {
        let g = TorusGrid::new(64).unwrap();
        let f = ScalarField::from_fn(g, |x, _| (2.0 * PI * x).sin());
        assert!(f.mean().abs() < 1e-15);
        assert!((f.max_abs() - 1.0).abs() < 1e-12);
        assert!((f.l2_norm() - 0.5_f64.sqrt()).abs() < 1e-12);
        assert!((f.lp_norm(2.0) - f.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite_values() {
        let mut v = vec![0.0; grid().len()];
        v[3] = f64::NAN;
        assert!(ScalarField::from_values(grid(), v).is_err());
        assert!(ScalarField::from_values(grid(), vec![0.0; 3]).is_err());
    }

    #[test]
    fn interpolation_is_exact_for_linear_data_between_nodes() {
        let g = grid();
        let f = ScalarField::from_fn(g, |x, y| 2.0 * x + y);
        let v = f.interpolate([-0.5 + 0.3 * g.h(), -0.5 + 2.25 * g.h()]);
        assert!((v - (2.0 * (-0.5 + 0.3 * g.h()) + (-0.5 + 2.25 * g.h()))).abs() < 1e-14);
    }

    #[test]
    fn symmetric_flag_is_checked() {
        let g = grid();
        let a = ScalarField::constant(g, 1.0);
        let b = ScalarField::constant(g, 2.0);
        assert!(TensorField::new_symmetric([[a.clone(), a.clone()], [b.clone(), a.clone()]]).is_err());
        let t = TensorField::new_symmetric([[a.clone(), b.clone()], [b.clone(), a.clone()]]).unwrap();
        assert!(t.is_symmetric());
        assert!((t.min_eigenvalue() + 1.0).abs() < 1e-14);
    }
}
