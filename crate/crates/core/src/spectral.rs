//! FFT-based differential operators on the torus.
//!
//! Fourier coefficients are normalised so that `f_j = sum_k fhat_k e^{2 pi i k j / n}`
//! (forward transform divided by `n^2`); with this convention `fhat_k` equals the
//! continuum coefficient `<f, e^{2 pi i k x}>` up to a unit-modulus phase fixed
//! by the grid origin. Multipliers and moduli are unaffected by that phase.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{param, Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::TorusGrid;

/// Mean tolerance for sources of periodic inversions.
pub const ZERO_MEAN_TOL: f64 = 1e-10;

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

fn fft2(data: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(data, &mut scratch);
    transpose(data, n);
    fft.process_with_scratch(data, &mut scratch);
    transpose(data, n);
}

/// Fourier coefficients of a field on a [`TorusGrid`].
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn forward(f: &ScalarField) -> Self {
        let grid = f.grid();
        let n = grid.n();
        let mut coeffs: Vec<Complex64> =
            f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft2(&mut coeffs, n, &plans(n).0);
        let scale = 1.0 / grid.len() as f64;
        coeffs.iter_mut().for_each(|c| *c *= scale);
        Self { grid, coeffs }
    }

    /// Inverse transform; the imaginary part is dropped.
    pub fn inverse(&self) -> ScalarField {
        let n = self.grid.n();
        let mut data = self.coeffs.clone();
        fft2(&mut data, n, &plans(n).1);
        ScalarField::from_raw(self.grid, data.into_iter().map(|c| c.re).collect())
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + y * a).collect();
        Self { grid: self.grid, coeffs }
    }

    /// Coefficient of the signed mode `(k1, k2)`.
    pub fn mode(&self, k1: i64, k2: i64) -> Complex64 {
        let n = self.grid.n() as i64;
        let m1 = k1.rem_euclid(n) as usize;
        let m2 = k2.rem_euclid(n) as usize;
        self.coeffs[self.grid.idx(m1, m2)]
    }

    /// Multiply every coefficient by `mult(k1, k2, nyquist1, nyquist2)`.
    pub fn apply(&self, mult: impl Fn(i64, i64, bool, bool) -> Complex64) -> Self {
        let g = self.grid;
        let n = g.n();
        let mut coeffs = self.coeffs.clone();
        for m1 in 0..n {
            let k1 = g.wavenumber(m1);
            let ny1 = g.is_nyquist(m1);
            for m2 in 0..n {
                let k2 = g.wavenumber(m2);
                coeffs[m1 * n + m2] *= mult(k1, k2, ny1, g.is_nyquist(m2));
            }
        }
        Self { grid: g, coeffs }
    }

    /// Spectral partial derivative along `axis`; the Nyquist mode of that
    /// axis is zeroed so the discrete operator stays real and antisymmetric.
    pub fn derivative(&self, axis: usize) -> Self {
        self.apply(|k1, k2, ny1, ny2| {
            let (k, ny) = if axis == 0 { (k1, ny1) } else { (k2, ny2) };
            if ny {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, 2.0 * PI * k as f64)
            }
        })
    }

    /// Zero all modes with `|k_i| > n/3` on either axis (2/3 rule).
    pub fn dealias(&self) -> Self {
        let cut = (self.grid.n() / 3) as i64;
        self.apply(|k1, k2, _, _| {
            if k1.abs() > cut || k2.abs() > cut {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
    }

    /// Inverse of the positive operator `-Delta` on mean-zero data.
    fn inverse_neg_laplacian(&self, scale: f64) -> Self {
        self.apply(|k1, k2, _, _| {
            let k2sum = (k1 * k1 + k2 * k2) as f64;
            if k2sum == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(scale / (4.0 * PI * PI * k2sum), 0.0)
            }
        })
    }
}

fn check_zero_mean(f: &ScalarField) -> Result<()> {
    let mean = f.mean();
    if mean.abs() > ZERO_MEAN_TOL {
        return Err(Error::IncompatibleSource { mean, tol: ZERO_MEAN_TOL });
    }
    Ok(())
}

/// Solves `-eps * Delta(phi) = rhs` with `int phi = 0`.
pub fn poisson_neg(rhs: &ScalarField, eps: f64) -> Result<ScalarField> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(param(format!("eps must be positive, got {eps}")));
    }
    check_zero_mean(rhs)?;
    Ok(Spectrum::forward(rhs).inverse_neg_laplacian(1.0 / eps).inverse())
}

/// Spectral `-eps * Delta f`.
pub fn neg_laplacian(f: &ScalarField, eps: f64) -> ScalarField {
    Spectrum::forward(f)
        .apply(|k1, k2, _, _| Complex64::new(eps * 4.0 * PI * PI * (k1 * k1 + k2 * k2) as f64, 0.0))
        .inverse()
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let s = Spectrum::forward(f);
    VectorField { x1: s.derivative(0).inverse(), x2: s.derivative(1).inverse() }
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let a = Spectrum::forward(&v.x1).derivative(0).inverse();
    let b = Spectrum::forward(&v.x2).derivative(1).inverse();
    &a + &b
}

/// `d1 v2 - d2 v1`.
pub fn curl(v: &VectorField) -> ScalarField {
    let a = Spectrum::forward(&v.x2).derivative(0).inverse();
    let b = Spectrum::forward(&v.x1).derivative(1).inverse();
    &a - &b
}

/// Stream function `psi` with `Delta psi = omega`, zero mean.
pub fn stream_function(omega: &ScalarField) -> Result<ScalarField> {
    check_zero_mean(omega)?;
    Ok(Spectrum::forward(omega).inverse_neg_laplacian(-1.0).inverse())
}

/// Velocity `u = (grad psi)^perp = (-d2 psi, d1 psi)` with `Delta psi = omega`.
pub fn biot_savart(omega: &ScalarField) -> Result<VectorField> {
    check_zero_mean(omega)?;
    Ok(biot_savart_spectrum(&Spectrum::forward(omega)))
}

pub(crate) fn biot_savart_spectrum(omega_hat: &Spectrum) -> VectorField {
    let psi = omega_hat.inverse_neg_laplacian(-1.0);
    let u1 = psi.derivative(1).inverse().map(|v| -v);
    let u2 = psi.derivative(0).inverse();
    VectorField { x1: u1, x2: u2 }
}

/// `sqrt( sum_{k != 0} |fhat_k|^2 / (4 pi^2 |k|^2) )`.
pub fn h_minus1_norm(f: &ScalarField) -> f64 {
    let s = Spectrum::forward(f);
    let g = s.grid();
    let n = g.n();
    let mut acc = 0.0;
    for m1 in 0..n {
        let k1 = g.wavenumber(m1);
        for m2 in 0..n {
            let k2 = g.wavenumber(m2);
            let kk = (k1 * k1 + k2 * k2) as f64;
            if kk > 0.0 {
                acc += s.coeffs[m1 * n + m2].norm_sqr() / (4.0 * PI * PI * kk);
            }
        }
    }
    acc.sqrt()
}

/// H^-1 norm of a vector field, summed over components in quadrature.
pub fn h_minus1_norm_vec(v: &VectorField) -> f64 {
    h_minus1_norm(&v.x1).hypot(h_minus1_norm(&v.x2))
}

/// `max_{|k|_inf <= kmax} |<f, e^{2 pi i k x}>|`.
pub fn weak_gap(f: &ScalarField, kmax: usize) -> Result<f64> {
    let g = f.grid();
    if kmax == 0 || 3 * kmax > g.n() {
        return Err(param(format!("kmax must lie in 1..={}, got {kmax}", g.n() / 3)));
    }
    let s = Spectrum::forward(f);
    let k = kmax as i64;
    let mut best = 0.0_f64;
    for k1 in -k..=k {
        for k2 in -k..=k {
            best = best.max(s.mode(k1, k2).norm());
        }
    }
    Ok(best)
}

/// Component-wise maximum of [`weak_gap`].
pub fn weak_gap_vec(v: &VectorField, kmax: usize) -> Result<f64> {
    Ok(weak_gap(&v.x1, kmax)?.max(weak_gap(&v.x2, kmax)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(n).unwrap()
    }

    fn rel_max(a: &ScalarField, b: &ScalarField) -> f64 {
        a.max_diff(b) / b.max_abs().max(1e-300)
    }

    #[test]
    fn poisson_single_mode_quarter_eps() {
        let g = grid(64);
        let rhs = ScalarField::from_fn(g, |x, _| (2.0 * PI * x).cos());
        let phi = poisson_neg(&rhs, 0.25).unwrap();
        let expected = ScalarField::from_fn(g, |x, _| (2.0 * PI * x).cos() / (PI * PI));
        assert!(rel_max(&phi, &expected) < 1e-12);
        assert!(phi.mean().abs() < 1e-15);
    }

    #[test]
    fn poisson_two_modes_unit_eps() {
        let g = grid(32);
        let f = |x: f64, y: f64| (2.0 * PI * x).cos() + (2.0 * PI * y).cos();
        let phi = poisson_neg(&ScalarField::from_fn(g, f), 1.0).unwrap();
        let expected = ScalarField::from_fn(g, |x, y| f(x, y) / (4.0 * PI * PI));
        assert!(rel_max(&phi, &expected) < 1e-12);
    }

    #[test]
    fn poisson_zero_source_and_errors() {
        let g = grid(16);
        let phi = poisson_neg(&ScalarField::zeros(g), 3.0).unwrap();
        assert_eq!(phi.max_abs(), 0.0);
        let bad = ScalarField::constant(g, 1e-6);
        assert!(matches!(poisson_neg(&bad, 1.0), Err(Error::IncompatibleSource { .. })));
        assert!(matches!(poisson_neg(&ScalarField::zeros(g), 0.0), Err(Error::Parameter(_))));
        assert!(matches!(poisson_neg(&ScalarField::zeros(g), -1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn gradient_examples() {
        let g = grid(32);
        let f = ScalarField::from_fn(g, |x, _| (2.0 * PI * x).sin());
        let d = gradient(&f);
        let e1 = ScalarField::from_fn(g, |x, _| 2.0 * PI * (2.0 * PI * x).cos());
        assert!(d.x1.max_diff(&e1) < 1e-12);
        assert!(d.x2.max_abs() < 1e-12);

        let c = gradient(&ScalarField::constant(g, 3.0));
        assert!(c.x1.max_abs() < 1e-13 && c.x2.max_abs() < 1e-13);

        let f = ScalarField::from_fn(g, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin());
        let d = gradient(&f);
        let p1 = ScalarField::from_fn(g, |x, y| 2.0 * PI * (2.0 * PI * x).cos() * (2.0 * PI * y).sin());
        let p2 = ScalarField::from_fn(g, |x, y| 2.0 * PI * (2.0 * PI * x).sin() * (2.0 * PI * y).cos());
        assert!(d.x1.max_diff(&p1) < 1e-12);
        assert!(d.x2.max_diff(&p2) < 1e-12);
    }

    #[test]
    fn biot_savart_shear() {
        let g = grid(64);
        let w = ScalarField::from_fn(g, |x, _| (2.0 * PI * x).sin());
        let u = biot_savart(&w).unwrap();
        let u2 = ScalarField::from_fn(g, |x, _| -(2.0 * PI * x).cos() / (2.0 * PI));
        assert!(u.x1.max_abs() < 1e-14);
        assert!(rel_max(&u.x2, &u2) < 1e-12);
        assert!(divergence(&u).max_abs() < 1e-12);
        assert!(curl(&u).max_diff(&w) < 1e-10);
    }

    #[test]
    fn biot_savart_zero_and_roundtrip() {
        let g = grid(32);
        let u = biot_savart(&ScalarField::zeros(g)).unwrap();
        assert_eq!(u.max_magnitude(), 0.0);
        let w = ScalarField::from_fn(g, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin());
        let u = biot_savart(&w).unwrap();
        assert!(curl(&u).max_diff(&w) < 1e-10);
        assert!(biot_savart(&ScalarField::constant(g, 0.5)).is_err());
    }

    #[test]
    fn h_minus1_examples() {
        let g = grid(32);
        let a = 0.7;
        let f = ScalarField::from_fn(g, |x, _| a * (2.0 * PI * x).cos());
        let expected = a / (2.0 * 2f64.sqrt() * PI);
        assert!((h_minus1_norm(&f) - expected).abs() < 1e-14);
        assert!(h_minus1_norm(&ScalarField::constant(g, 4.0)) < 1e-15);
        let f = ScalarField::from_fn(g, |x, _| (2.0 * PI * x).cos() + (4.0 * PI * x).cos());
        let expected = (1.0 / (8.0 * PI * PI) + 1.0 / (32.0 * PI * PI)).sqrt();
        assert!((h_minus1_norm(&f) - expected).abs() < 1e-14);
    }

    #[test]
    fn weak_gap_examples() {
        let g = grid(32);
        assert_eq!(weak_gap(&ScalarField::zeros(g), 4).unwrap(), 0.0);
        let f = ScalarField::from_fn(g, |x, _| (2.0 * PI * x).cos());
        assert!((weak_gap(&f, 4).unwrap() - 0.5).abs() < 1e-14);
        let f = ScalarField::from_fn(g, |x, _| (2.0 * PI * 5.0 * x).cos());
        assert!(weak_gap(&f, 4).unwrap() < 1e-14);
        assert!(weak_gap(&f, 11).is_err());
        assert!(weak_gap(&f, 0).is_err());
    }

    #[test]
    fn dealias_keeps_low_modes() {
        let g = grid(32);
        let f = ScalarField::from_fn(g, |x, y| (2.0 * PI * x).sin() + (2.0 * PI * 12.0 * y).cos());
        let d = Spectrum::forward(&f).dealias().inverse();
        let low = ScalarField::from_fn(g, |x, _| (2.0 * PI * x).sin());
        assert!(d.max_diff(&low) < 1e-13);
    }
}
