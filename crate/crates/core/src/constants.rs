//! Frozen constants of the inequality audits.
//!
//! Each "≲" inequality is turned into `lhs <= C rhs` with `C` calibrated once
//! on the suite in [`crate::calibration`] (seeds `CALIBRATION_SEEDS`) and then
//! frozen here. Audits on fresh seeds (`AUDIT_SEEDS`) must pass at these
//! values; `tests/calibration.rs` checks that every frozen value still
//! dominates a fresh calibration and is not excessively loose.

use crate::modulated::DensityConstants;

pub const CALIBRATION_SEEDS: std::ops::Range<u64> = 1000..1010;
pub const AUDIT_SEEDS: std::ops::Range<u64> = 2000..2010;

/// Calibrated maxima are multiplied by this margin before freezing.
pub const MARGIN: f64 = 1.5;

/// `||grad u||_BMO <= A ||omega||_inf`.
pub const CZ_A: f64 = 0.955;
/// `|int f g| <= C ||Mf||_1 ||g||_BMO` on mean-zero `g`.
pub const DUALITY_TORUS: f64 = 1.22;
/// Clipped-domain variant with the `bmo` norm.
pub const DUALITY_LOCAL: f64 = 0.605;
/// `int Mg <= C (eta + int |g| log+ |g| + log(1/eta) ||g||_1)`.
pub const WIENER: f64 = 1.34;
/// `bmo(f) <= C BMO(f)` for mean-zero `f`.
pub const BMO_LOCAL_VS_TORUS: f64 = 3.07;
/// `sup_t max|u| <= C ||omega_0||_inf`.
pub const YUDOVICH: f64 = 0.239;

/// `||rho||_{1+k/2} <= C ||f||_inf^{k/(2+k)} M_k^{2/(2+k)}` for `k = 2, 3`.
pub const MOMENT_INTERP: [f64; 2] = [2.71, 2.74];
/// `|dM_k/dt| <= k C ||grad phi||_{k+2} M_k^{(k+1)/(k+2)}` for `k = 2, 3`.
pub const MOMENT_ODE: [f64; 2] = [0.173, 0.152];

pub const DENSITY: DensityConstants =
    DensityConstants { rho_gamma: 0.0575, rho_qstar: 0.998, m2_gamma: 0.00104, m2_qstar: 0.344, rho_l2: 2.34 };

/// `dE/dt <= C (eps + eta + L(Gamma, eta) E)` with `eta = eps`.
pub const GRONWALL: f64 = 0.0259;

/// The force bound is audited with the printed constant.
pub const FORCE: f64 = 1.0;
