//! Pseudo-spectral 2D incompressible Euler in vorticity form.
//!
//! RK4 in time on the Fourier coefficients of `omega`, with the advection
//! term `-u . grad omega` evaluated in physical space and truncated by the
//! 2/3 rule. The truncated system conserves energy and enstrophy exactly in
//! semi-discrete form, so drifts measure the time integrator alone.

use crate::error::{Error, Result};
use crate::field::{ScalarField, TensorField, VectorField};
use crate::harmonic::NormReport;
use crate::spectral::{biot_savart, biot_savart_spectrum, gradient, poisson_neg, Spectrum, ZERO_MEAN_TOL};

/// Tolerance on the stored vorticity mean.
pub const MEAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct EulerState {
    omega: ScalarField,
    time: f64,
    u: VectorField,
}

impl EulerState {
    /// Accepts vorticity with `|mean| <= 1e-10` and removes the residual mean.
    pub fn new(omega: ScalarField, time: f64) -> Result<Self> {
        let mean = omega.mean();
        if mean.abs() > ZERO_MEAN_TOL {
            return Err(Error::IncompatibleSource { mean, tol: ZERO_MEAN_TOL });
        }
        let omega = omega.map(|w| w - mean);
        let u = biot_savart(&omega)?;
        Ok(Self { omega, time, u })
    }

    fn from_spectrum(w: &Spectrum, time: f64) -> Self {
        Self { omega: w.inverse(), time, u: biot_savart_spectrum(w) }
    }

    pub fn omega(&self) -> &ScalarField {
        &self.omega
    }

    pub fn u(&self) -> &VectorField {
        &self.u
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn max_speed(&self) -> f64 {
        self.u.max_magnitude()
    }

    /// Largest step allowed by the advective CFL rule `dt <= h / (2 max|u|)`.
    pub fn cfl_limit(&self) -> f64 {
        let s = self.max_speed();
        if s == 0.0 {
            f64::INFINITY
        } else {
            self.omega.grid().h() / (2.0 * s)
        }
    }

    /// Kinetic energy `1/2 int |u|^2`.
    pub fn energy(&self) -> f64 {
        0.5 * self.u.l2_norm_sq()
    }

    /// `int omega^2`.
    pub fn enstrophy(&self) -> f64 {
        let l2 = self.omega.l2_norm();
        l2 * l2
    }

    /// One RK4 step. Negative `dt` integrates backwards.
    pub fn advance(&mut self, dt: f64) -> Result<()> {
        let limit = self.cfl_limit();
        if !dt.is_finite() || dt.abs() > limit * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "Euler step {dt} violates the CFL limit h/(2 max|u|) = {limit}"
            )));
        }
        let w0 = Spectrum::forward(&self.omega);
        let k1 = advection(&w0);
        let k2 = advection(&w0.axpy(0.5 * dt, &k1));
        let k3 = advection(&w0.axpy(0.5 * dt, &k2));
        let k4 = advection(&w0.axpy(dt, &k3));
        let w1 = w0
            .axpy(dt / 6.0, &k1)
            .axpy(dt / 3.0, &k2)
            .axpy(dt / 3.0, &k3)
            .axpy(dt / 6.0, &k4);
        *self = Self::from_spectrum(&w1, self.time + dt);
        Ok(())
    }

    /// Advance by `dt` in the fewest equal sub-steps that respect the CFL
    /// rule at the start of each sub-step; returns the number used.
    pub fn advance_substepped(&mut self, dt: f64) -> Result<usize> {
        let mut remaining = dt;
        let mut count = 0;
        while remaining > 1e-14 * dt.abs().max(1.0) {
            let k = (remaining / self.cfl_limit()).ceil().max(1.0);
            let h = remaining / k;
            self.advance(h)?;
            remaining -= h;
            count += 1;
        }
        Ok(count)
    }
}

/// Spectrum of `-P(u . grad omega)` with `P` the 2/3-rule projection.
fn advection(w: &Spectrum) -> Spectrum {
    let u = biot_savart_spectrum(w);
    let d1 = w.derivative(0).inverse();
    let d2 = w.derivative(1).inverse();
    let prod = u.x1.zip_map(&d1, |a, b| a * b).zip_map(&u.x2.zip_map(&d2, |a, b| a * b), |a, b| -(a + b));
    Spectrum::forward(&prod).dealias()
}

/// Free-function form of [`EulerState::advance`].
pub fn step_euler(mut state: EulerState, dt: f64) -> Result<EulerState> {
    state.advance(dt)?;
    Ok(state)
}

/// `(grad u)_{ij} = d_i u_j`.
pub fn grad_tensor(u: &VectorField) -> TensorField {
    let g1 = gradient(&u.x1);
    let g2 = gradient(&u.x2);
    TensorField::new([[g1.x1, g2.x1], [g1.x2, g2.x2]]).expect("components share one grid")
}

/// Symmetric part `d(u) = (grad u + grad u^T) / 2`.
#[derive(Clone, Debug)]
pub struct StrainField {
    pub d: TensorField,
}

impl StrainField {
    pub const FACTOR: f64 = 0.5;

    pub fn trace(&self) -> ScalarField {
        self.d.trace()
    }

    pub fn component(&self, i: usize, j: usize) -> &ScalarField {
        self.d.component(i, j)
    }
}

pub fn strain(u: &VectorField) -> StrainField {
    let g = grad_tensor(u);
    let off = g.component(0, 1).zip_map(g.component(1, 0), |a, b| StrainField::FACTOR * (a + b));
    let d = TensorField::new_symmetric([
        [g.component(0, 0).clone(), off.clone()],
        [off, g.component(1, 1).clone()],
    ])
    .expect("symmetric by construction");
    StrainField { d }
}

/// Material acceleration `A = -grad p` with `-Delta p = sum_ij d_i u_j d_j u_i`.
pub fn material_accel_of(u: &VectorField) -> Result<VectorField> {
    let g = grad_tensor(u);
    let n = g.grid();
    let mut src = ScalarField::zeros(n);
    for i in 0..2 {
        for j in 0..2 {
            src = &src + &g.component(i, j).zip_map(g.component(j, i), |a, b| a * b);
        }
    }
    let src = src.minus_mean();
    let p = poisson_neg(&src, 1.0)?;
    Ok(gradient(&p).scale(-1.0))
}

pub fn material_accel(state: &EulerState) -> Result<VectorField> {
    material_accel_of(state.u())
}

/// `L^p` norm of the vorticity, `p` in `{1, 2, 4, inf}`.
pub fn lp_norm(omega: &ScalarField, p: f64) -> Result<f64> {
    if ![1.0, 2.0, 4.0, f64::INFINITY].contains(&p) {
        return Err(crate::error::param(format!("unsupported exponent {p}")));
    }
    Ok(omega.lp_norm(p))
}

/// `sup_t max|u| <= C ||omega_0||_inf` with a frozen `C`.
pub fn yudovich_velocity_bound_check(sup_speed: f64, omega0_inf: f64, constant: f64) -> NormReport {
    NormReport::new(sup_speed, omega0_inf, constant)
}
