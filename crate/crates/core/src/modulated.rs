//! Modulated energy, its derivative decomposition and the quantitative
//! bounds used to close the Grönwall argument.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::euler::{material_accel, strain, EulerState};
use crate::field::{TensorField, VectorField};
use crate::green::GreenSplit;
use crate::harmonic::NormReport;
use crate::pic::{chunked_sum, deposit_current, deposit_modulated_tensor, ParticleEnsemble, VlasovState};

/// Largest admissible time offset between the kinetic and fluid states.
pub const SYNC_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub field: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(kinetic: f64, field: f64) -> Self {
        Self { kinetic, field, total: kinetic + field }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBreakdown {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    /// `i1 + i2 + i3`.
    pub sum: f64,
    /// `-int A(u) . J`. The exact derivative of the modulated energy is
    /// `sum + current_defect`; the defect vanishes when `A(u) = 0`.
    pub current_defect: f64,
}

impl DerivativeBreakdown {
    pub fn exact(&self) -> f64 {
        self.sum + self.current_defect
    }
}

fn check_sync(vp: &VlasovState, eu: &EulerState) -> Result<()> {
    if (vp.time - eu.time()).abs() > SYNC_TOL || vp.grid != eu.u().grid() {
        return Err(Error::Synchronization { vlasov: vp.time, euler: eu.time(), tol: SYNC_TOL });
    }
    Ok(())
}

/// `1/2 sum_p w_p |xi_p - u(x_p)|^2`.
pub fn modulated_kinetic(ens: &ParticleEnsemble, u: &VectorField) -> f64 {
    0.5 * chunked_sum(ens.particles(), |p| {
        let uu = u.interpolate(p.x);
        let d0 = p.xi[0] - uu[0];
        let d1 = p.xi[1] - uu[1];
        p.w * (d0 * d0 + d1 * d1)
    })
}

pub fn modulated_energy(vp: &VlasovState, eu: &EulerState) -> Result<EnergyBreakdown> {
    check_sync(vp, eu)?;
    Ok(EnergyBreakdown::new(modulated_kinetic(&vp.ensemble, eu.u()), vp.field_energy()))
}

/// `F = int (xi - u)(xi - u) f dxi`, deposited on the grid.
pub fn f_tensor(vp: &VlasovState, eu: &EulerState) -> Result<TensorField> {
    check_sync(vp, eu)?;
    deposit_modulated_tensor(&vp.ensemble, eu.u())
}

pub fn i_terms(vp: &VlasovState, eu: &EulerState) -> Result<DerivativeBreakdown> {
    check_sync(vp, eu)?;
    let u = eu.u();
    let d = strain(u).d;
    let accel = material_accel(eu)?;

    let i1 = -chunked_sum(vp.ensemble.particles(), |p| {
        let uu = u.interpolate(p.x);
        let r = [p.xi[0] - uu[0], p.xi[1] - uu[1]];
        let dd = d.interpolate(p.x);
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                acc += dd[i][j] * r[i] * r[j];
            }
        }
        p.w * acc
    });

    // grad phi = -E; the quadratic form is insensitive to the sign
    let i2 = vp.eps * d.contract(&vp.efield, &vp.efield).integral();

    let au = accel.x1.zip_map(&u.x1, |a, b| a * b).zip_map(&accel.x2.zip_map(&u.x2, |a, b| a * b), |a, b| a + b);
    let i3 = au.zip_map(&vp.rho, |a, r| a * (r - 1.0)).integral();

    let j = deposit_current(&vp.ensemble, vp.grid);
    let aj = accel.x1.zip_map(&j.x1, |a, b| a * b).integral() + accel.x2.zip_map(&j.x2, |a, b| a * b).integral();

    Ok(DerivativeBreakdown { i1, i2, i3, sum: i1 + i2 + i3, current_defect: -aj })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mbar: f64,
    /// `(1 + sqrt(mbar)) / eps`.
    pub mbold: f64,
}

impl BoundInputs {
    pub fn new(eps: f64, alpha: f64, beta: f64, mbar: f64) -> Result<Self> {
        if !(eps > 0.0) || !(mbar >= 0.0) {
            return Err(param(format!("need eps > 0 and mbar >= 0, got {eps}, {mbar}")));
        }
        Ok(Self { eps, alpha, beta, mbar, mbold: (1.0 + mbar.sqrt()) / eps })
    }
}

/// `Gamma(t) = M + M^3 t^2 (1 + log(1 + M t))` with `M` the bold constant.
pub fn gamma_bound(t: f64, inputs: &BoundInputs) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(param(format!("time must be nonnegative, got {t}")));
    }
    let m = inputs.mbold;
    Ok(m + m.powi(3) * t * t * (1.0 + (m * t).ln_1p()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForceBound {
    /// Bound at the requested `l`.
    pub value: f64,
    /// Bound at `l = 1 / (1 + rho_inf)`.
    pub optimized: f64,
}

fn force_bound_raw(rho_inf: f64, rho_l2: f64, eps: f64, l: f64, grad_v0: f64) -> f64 {
    (2.0 * grad_v0 + l * (rho_inf + 1.0) + l.ln().abs().sqrt() * (rho_l2 + 1.0)) / eps
}

/// Pointwise bound on `|grad phi|` from the split of the Green function.
pub fn force_bound(rho_inf: f64, rho_l2: f64, eps: f64, l: f64) -> Result<ForceBound> {
    if !(l > 0.0 && l < 1.0) {
        return Err(param(format!("l must lie in (0, 1), got {l}")));
    }
    if !(eps > 0.0) || !(rho_inf >= 0.0) || !(rho_l2 >= 0.0) {
        return Err(param("force bound needs eps > 0 and nonnegative norms"));
    }
    let g = GreenSplit::default().grad_v0_sup();
    Ok(ForceBound {
        value: force_bound_raw(rho_inf, rho_l2, eps, l, g),
        optimized: force_bound_raw(rho_inf, rho_l2, eps, 1.0 / (1.0 + rho_inf), g),
    })
}

/// The report at the sample where `lhs / rhs` is largest.
pub fn worst_case(lhs: &[f64], rhs: &[f64], constant: f64) -> Result<NormReport> {
    if lhs.is_empty() || lhs.len() != rhs.len() {
        return Err(Error::Data(format!(
            "audit series must be nonempty and equally long ({} vs {})",
            lhs.len(),
            rhs.len()
        )));
    }
    let mut best = NormReport::new(lhs[0], rhs[0], constant);
    for (&l, &r) in lhs.iter().zip(rhs) {
        let cand = NormReport::new(l, r, constant);
        // a NaN ratio is a violation and must surface
        if cand.ratio() > best.ratio() || cand.ratio().is_nan() {
            best = cand;
        }
    }
    Ok(best)
}

/// Time series consumed by [`density_bound_audit`].
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DensitySeries {
    pub t: Vec<f64>,
    pub rho_inf: Vec<f64>,
    pub rho_l2: Vec<f64>,
    pub m2_inf: Vec<f64>,
    pub q_star: Vec<f64>,
    /// Second velocity moment `M_2(t)`.
    pub m2_total: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityConstants {
    pub rho_gamma: f64,
    pub rho_qstar: f64,
    pub m2_gamma: f64,
    pub m2_qstar: f64,
    pub rho_l2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityAudit {
    pub rho_vs_gamma: NormReport,
    pub rho_vs_qstar: NormReport,
    pub m2_vs_gamma: NormReport,
    pub m2_vs_qstar: NormReport,
    pub rho_l2_vs_energy: NormReport,
}

impl DensityAudit {
    pub fn pass(&self) -> bool {
        [self.rho_vs_gamma, self.rho_vs_qstar, self.m2_vs_gamma, self.m2_vs_qstar, self.rho_l2_vs_energy]
            .iter()
            .all(|r| r.pass)
    }
}

pub fn density_bound_audit(
    s: &DensitySeries,
    inputs: &BoundInputs,
    c: &DensityConstants,
) -> Result<DensityAudit> {
    let len = s.t.len();
    if len == 0 {
        return Err(Error::Data("empty density series".into()));
    }
    for (name, v) in [
        ("rho_inf", &s.rho_inf),
        ("rho_l2", &s.rho_l2),
        ("m2_inf", &s.m2_inf),
        ("q_star", &s.q_star),
        ("m2_total", &s.m2_total),
    ] {
        if v.len() != len {
            return Err(Error::Data(format!("series {name} has {} samples, expected {len}", v.len())));
        }
    }
    let gamma: Vec<f64> = s.t.iter().map(|&t| gamma_bound(t, inputs)).collect::<Result<_>>()?;
    let gamma2: Vec<f64> = gamma.iter().map(|g| g * g).collect();
    let q2: Vec<f64> = s.q_star.iter().map(|q| inputs.mbar * (1.0 + q * q)).collect();
    let q4: Vec<f64> = s.q_star.iter().map(|q| inputs.mbar * (1.0 + q.powi(4))).collect();
    let energy: Vec<f64> = s.m2_total.iter().map(|m| (m * inputs.mbar).sqrt()).collect();
    Ok(DensityAudit {
        rho_vs_gamma: worst_case(&s.rho_inf, &gamma, c.rho_gamma)?,
        rho_vs_qstar: worst_case(&s.rho_inf, &q2, c.rho_qstar)?,
        m2_vs_gamma: worst_case(&s.m2_inf, &gamma2, c.m2_gamma)?,
        m2_vs_qstar: worst_case(&s.m2_inf, &q4, c.m2_qstar)?,
        rho_l2_vs_energy: worst_case(&s.rho_l2, &energy, c.rho_l2)?,
    })
}

/// Right-hand side factor of the closed Grönwall inequality,
/// `eps + eta + (log(G^2 + G) + log(1 + G^2) + log(1/eta)) E`.
pub fn gronwall_rhs(eps: f64, eta: f64, gamma: f64, energy: f64) -> f64 {
    let logs = (gamma * gamma + gamma).ln() + (gamma * gamma).ln_1p() + (1.0 / eta).ln();
    eps + eta + logs * energy
}

/// Audit `dE/dt <= C * gronwall_rhs` along a run with `eta = eps^delta`.
pub fn gronwall_audit(
    t: &[f64],
    energy: &[f64],
    de_dt: &[f64],
    inputs: &BoundInputs,
    delta: f64,
    constant: f64,
) -> Result<NormReport> {
    if t.len() != energy.len() || t.len() != de_dt.len() {
        return Err(Error::Data("Grönwall series lengths differ".into()));
    }
    let eta = inputs.eps.powf(delta);
    let rhs: Vec<f64> = t
        .iter()
        .zip(energy)
        .map(|(&t, &e)| Ok(gronwall_rhs(inputs.eps, eta, gamma_bound(t, inputs)?, e)))
        .collect::<Result<_>>()?;
    let lhs: Vec<f64> = de_dt.iter().map(|d| d.max(0.0)).collect();
    worst_case(&lhs, &rhs, constant)
}
