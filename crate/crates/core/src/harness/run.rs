//! The coupled Vlasov–Poisson / Euler time loop and its diagnostics.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::io::{write_atomic, CsvTable};
use super::RunConfig;
use crate::constants as cst;
use crate::error::{Error, Result};
use crate::euler::{strain, EulerState};
use crate::fieldio::FieldRecord;
use crate::harmonic::{cz_bound_check, duality_check, wiener_check, DualityReport, NormReport};
use crate::initdata::{
    f0_sup, mbar, sample_well_prepared, verify_hypotheses, vorticity_library, HypothesisReport, Vorticity,
    WellPreparedSpec,
};
use crate::modulated::{
    density_bound_audit, force_bound, gamma_bound, gronwall_audit, i_terms, modulated_energy, worst_case,
    BoundInputs, DensityAudit, DensitySeries,
};
use crate::pic::{deposit_current, deposit_modulated_tensor, deposit_moment, ParticleEnsemble, VlasovState};
use crate::spectral::{h_minus1_norm_vec, h_minus1_norm, weak_gap, weak_gap_vec, Spectrum};

pub const STEP_COLUMNS: &[&str] = &[
    "t", "E_total", "E_kin", "E_field", "I1", "I2", "I3", "dE_dt_fd", "rho_inf", "rho_l2", "m2_inf", "Qstar",
    "Gamma", "Hm1_rho", "Hm1_J", "weak_gap_rho", "weak_gap_J",
];

pub const EULER_COLUMNS: &[&str] = &["t", "energy", "enstrophy", "L1", "L2", "L4", "Linf"];

/// One row of the per-step CSV.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StepRow {
    pub t: f64,
    pub e_total: f64,
    pub e_kin: f64,
    pub e_field: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub de_dt_fd: f64,
    pub rho_inf: f64,
    pub rho_l2: f64,
    pub m2_inf: f64,
    pub q_star: f64,
    pub gamma: f64,
    pub hm1_rho: f64,
    pub hm1_j: f64,
    pub weak_gap_rho: f64,
    pub weak_gap_j: f64,
}

impl StepRow {
    pub fn values(&self) -> [f64; 17] {
        [
            self.t, self.e_total, self.e_kin, self.e_field, self.i1, self.i2, self.i3, self.de_dt_fd, self.rho_inf,
            self.rho_l2, self.m2_inf, self.q_star, self.gamma, self.hm1_rho, self.hm1_j, self.weak_gap_rho,
            self.weak_gap_j,
        ]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EulerRow {
    pub t: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub l1: f64,
    pub l2: f64,
    pub l4: f64,
    pub linf: f64,
}

impl EulerRow {
    pub fn values(&self) -> [f64; 7] {
        [self.t, self.energy, self.enstrophy, self.l1, self.l2, self.l4, self.linf]
    }
}

/// Quantities that feed the audits but are not part of the CSV schema.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct AuditRow {
    pub t: f64,
    /// Conserved Vlasov–Poisson energy.
    pub vp_energy: f64,
    pub m2: f64,
    pub m3: f64,
    pub grad_phi_inf: f64,
    pub grad_phi_4: f64,
    pub grad_phi_5: f64,
    pub rho_25: f64,
    pub force_bound: f64,
    pub max_speed: f64,
    pub current_defect: f64,
}

/// Everything the loop produces, before anything is written.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub config: RunConfig,
    pub dt: f64,
    pub steps: usize,
    pub rows: Vec<StepRow>,
    pub euler_rows: Vec<EulerRow>,
    pub audit_rows: Vec<AuditRow>,
    pub summary: RunSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct Drifts {
    /// `max_t |E(t) - E(0)| / E(0)` of the Vlasov–Poisson energy.
    pub vp_energy: f64,
    pub euler_energy: f64,
    pub euler_enstrophy: f64,
    pub euler_l1: f64,
    pub euler_l4: f64,
    pub euler_linf: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    /// `||dE/dt_fd - (I1 + I2 + I3)||_2 / ||I1 + I2 + I3||_2` over interior steps.
    pub rel_l2_terms: f64,
    /// Same with the current term `-int A . J` added.
    pub rel_l2_exact: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Audits {
    pub density: Option<DensityAudit>,
    pub force: NormReport,
    pub gronwall: Option<NormReport>,
    pub moment_interp: Option<[NormReport; 2]>,
    pub moment_ode: Option<[NormReport; 2]>,
    pub yudovich: NormReport,
    pub cz: NormReport,
    pub duality: DualityReport,
    pub wiener: Vec<NormReport>,
}

impl Audits {
    pub fn all_pass(&self) -> bool {
        let mut ok = self.force.pass && self.yudovich.pass && self.cz.pass && self.duality.local.pass;
        ok &= self.duality.torus.is_none_or(|r| r.pass);
        ok &= self.density.as_ref().is_none_or(|d| d.pass());
        ok &= self.gronwall.is_none_or(|r| r.pass);
        ok &= self.moment_interp.is_none_or(|r| r.iter().all(|x| x.pass));
        ok &= self.moment_ode.is_none_or(|r| r.iter().all(|x| x.pass));
        ok && self.wiener.iter().all(|r| r.pass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub eps: f64,
    pub dt: f64,
    pub steps: usize,
    pub particles: usize,
    pub omega0_sup: f64,
    pub mbar: Option<f64>,
    pub sup_e: f64,
    pub sup_hm1_rho: f64,
    pub sup_hm1_j: f64,
    pub sup_weak_gap_rho: f64,
    pub sup_weak_gap_j: f64,
    pub initial_energy: f64,
    pub drifts: Drifts,
    pub identity: IdentityCheck,
    pub hypotheses: Option<HypothesisReport>,
    pub audits: Audits,
    pub audits_pass: bool,
}

/// Initial fluid and kinetic states for a configuration.
pub struct InitialData {
    pub vorticity: Vorticity,
    pub spec: WellPreparedSpec,
    pub ensemble: ParticleEnsemble,
}

pub fn initial_data(c: &RunConfig) -> Result<InitialData> {
    let grid = c.grid();
    let raw = vorticity_library(c.omega0, &c.vorticity_params(), grid)?;
    // the spectral solver evolves the 2/3-truncated field
    let omega = Spectrum::forward(&raw.omega).dealias().inverse().minus_mean();
    let sup = raw.sup_bound.max(omega.max_abs());
    let vorticity = Vorticity { omega, sup_bound: sup };
    let mut spec = WellPreparedSpec::new(c.eps, c.beta, &vorticity, c.ppc, c.seed)?;
    spec.jitter = c.jitter;
    spec.thermal = c.thermal;
    let mut ensemble = sample_well_prepared(&spec)?;
    if c.perturb_amplitude != 0.0 {
        let k = 2.0 * PI * c.perturb_mode as f64;
        let d = c.perturb_amplitude / k;
        for p in ensemble.particles_mut() {
            p.x[0] = crate::grid::wrap(p.x[0] + d * (k * p.x[0]).sin());
        }
    }
    Ok(InitialData { vorticity, spec, ensemble })
}

/// `min(dt_factor sqrt(eps), h / (2 max|u0| + 1))` unless given explicitly,
/// then shrunk so that an integer number of steps reaches `t_end`.
pub fn time_step(c: &RunConfig, max_u0: f64) -> (f64, usize) {
    let dt = c.dt.unwrap_or_else(|| (c.dt_factor * c.eps.sqrt()).min(1.0 / (c.n as f64 * (2.0 * max_u0 + 1.0))));
    let steps = ((c.t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    (c.t_end / steps as f64, steps)
}

struct Loop<'a> {
    c: &'a RunConfig,
    inputs: Option<BoundInputs>,
}

impl Loop<'_> {
    fn diagnose(&self, vp: &VlasovState, eu: &EulerState) -> Result<(StepRow, EulerRow, AuditRow)> {
        let t = vp.time;
        let e = modulated_energy(vp, eu)?;
        let d = i_terms(vp, eu)?;
        let grid = vp.grid;
        let j = deposit_current(&vp.ensemble, grid);
        let u = eu.u();
        let j_minus_u = j.sub(u);
        let rho_m1 = vp.rho.map(|r| r - 1.0);
        let m2 = deposit_moment(&vp.ensemble, grid, 2)?;
        let rho_inf = vp.rho.max_abs();
        let rho_l2 = vp.rho.l2_norm();
        let gamma = self.inputs.as_ref().map_or(Ok(f64::NAN), |i| gamma_bound(t, i))?;
        let row = StepRow {
            t,
            e_total: e.total,
            e_kin: e.kinetic,
            e_field: e.field,
            i1: d.i1,
            i2: d.i2,
            i3: d.i3,
            de_dt_fd: 0.0,
            rho_inf,
            rho_l2,
            m2_inf: m2.max_abs(),
            q_star: vp.q_star(),
            gamma,
            hm1_rho: h_minus1_norm(&rho_m1),
            hm1_j: h_minus1_norm_vec(&j_minus_u),
            weak_gap_rho: weak_gap(&rho_m1, self.c.kmax)?,
            weak_gap_j: weak_gap_vec(&j_minus_u, self.c.kmax)?,
        };
        let w = eu.omega();
        let erow = EulerRow {
            t: eu.time(),
            energy: eu.energy(),
            enstrophy: eu.enstrophy(),
            l1: w.lp_norm(1.0),
            l2: w.lp_norm(2.0),
            l4: w.lp_norm(4.0),
            linf: w.lp_norm(f64::INFINITY),
        };
        let fb = force_bound(rho_inf, rho_l2, vp.eps, 0.5)?.optimized;
        let arow = AuditRow {
            t,
            vp_energy: vp.total_energy().total,
            m2: vp.velocity_moment(2)?,
            m3: vp.velocity_moment(3)?,
            grad_phi_inf: vp.efield.max_magnitude(),
            grad_phi_4: vp.efield.lp_norm(4.0),
            grad_phi_5: vp.efield.lp_norm(5.0),
            rho_25: vp.rho.lp_norm(2.5),
            force_bound: fb,
            max_speed: eu.max_speed(),
            current_defect: d.current_defect,
        };
        Ok((row, erow, arow))
    }
}

/// Second-order finite-difference derivative of a uniformly sampled series.
pub fn fd_derivative(v: &[f64], dt: f64) -> Vec<f64> {
    let n = v.len();
    if n < 3 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|k| {
            if k == 0 {
                (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt)
            } else if k == n - 1 {
                (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dt)
            } else {
                (v[k + 1] - v[k - 1]) / (2.0 * dt)
            }
        })
        .collect()
}

fn rel_drift(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut it = v.clone();
    let v0 = it.next().unwrap_or(0.0);
    let dev = v.map(|x| (x - v0).abs()).fold(0.0, f64::max);
    if v0 == 0.0 {
        dev
    } else {
        dev / v0.abs()
    }
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Per-step checkpoint sink.
pub type CheckpointSink<'a> = &'a mut dyn FnMut(usize, &VlasovState, &EulerState) -> Result<()>;

/// Run the coupled evolution in memory.
pub fn simulate(c: &RunConfig, mut checkpoint: Option<CheckpointSink<'_>>) -> Result<RunResult> {
    c.validate()?;
    let data = initial_data(c)?;
    let grid = c.grid();
    let mut eu = EulerState::new(data.vorticity.omega.clone(), 0.0)?;
    let (dt, steps) = time_step(c, eu.max_speed());
    let mbar_value = c.thermal.then(|| mbar(c.eps, c.beta, c.k0, &data.spec.u0));
    let inputs = mbar_value.map(|m| BoundInputs::new(c.eps, c.alpha, c.beta, m)).transpose()?;
    let hypotheses = if c.thermal && c.perturb_amplitude == 0.0 {
        Some(verify_hypotheses(&data.ensemble, &data.spec, c.k0, c.alpha)?)
    } else {
        None
    };
    let mut vp = VlasovState::new(data.ensemble, grid, c.eps, 0.0)?;
    let lp = Loop { c, inputs };

    let mut rows = Vec::with_capacity(steps + 1);
    let mut euler_rows = Vec::with_capacity(steps + 1);
    let mut audit_rows = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        if k > 0 {
            vp.advance(dt)?;
            eu.advance_substepped(dt)?;
            // both clocks accumulate the same increments; pin them together
            let t = k as f64 * dt;
            vp.time = t;
            if (eu.time() - t).abs() > crate::modulated::SYNC_TOL {
                return Err(Error::Synchronization { vlasov: t, euler: eu.time(), tol: crate::modulated::SYNC_TOL });
            }
        }
        let (r, e, a) = lp.diagnose(&vp, &eu)?;
        rows.push(r);
        euler_rows.push(e);
        audit_rows.push(a);
        if let Some(sink) = checkpoint.as_mut() {
            if c.checkpoint_every > 0 && k % c.checkpoint_every == 0 {
                sink(k, &vp, &eu)?;
            }
        }
    }

    let energies: Vec<f64> = rows.iter().map(|r| r.e_total).collect();
    for (r, d) in rows.iter_mut().zip(fd_derivative(&energies, dt)) {
        r.de_dt_fd = d;
    }

    let summary = summarize(c, &lp, &vp, &eu, &data.vorticity, dt, steps, &rows, &euler_rows, &audit_rows, hypotheses, mbar_value)?;
    Ok(RunResult { config: c.clone(), dt, steps, rows, euler_rows, audit_rows, summary })
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    c: &RunConfig,
    lp: &Loop<'_>,
    vp: &VlasovState,
    eu: &EulerState,
    vort: &Vorticity,
    dt: f64,
    steps: usize,
    rows: &[StepRow],
    euler_rows: &[EulerRow],
    audit_rows: &[AuditRow],
    hypotheses: Option<HypothesisReport>,
    mbar_value: Option<f64>,
) -> Result<RunSummary> {
    let sup = |f: fn(&StepRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();

    let drifts = Drifts {
        vp_energy: rel_drift(audit_rows.iter().map(|a| a.vp_energy)),
        euler_energy: rel_drift(euler_rows.iter().map(|e| e.energy)),
        euler_enstrophy: rel_drift(euler_rows.iter().map(|e| e.enstrophy)),
        euler_l1: rel_drift(euler_rows.iter().map(|e| e.l1)),
        euler_l4: rel_drift(euler_rows.iter().map(|e| e.l4)),
        euler_linf: rel_drift(euler_rows.iter().map(|e| e.linf)),
    };

    let inner = 1..rows.len().saturating_sub(1);
    let fd: Vec<f64> = rows[inner.clone()].iter().map(|r| r.de_dt_fd).collect();
    let terms: Vec<f64> = rows[inner.clone()].iter().map(|r| r.i1 + r.i2 + r.i3).collect();
    let exact: Vec<f64> = rows[inner.clone()]
        .iter()
        .zip(&audit_rows[inner])
        .map(|(r, a)| r.i1 + r.i2 + r.i3 + a.current_defect)
        .collect();
    let identity = IdentityCheck { rel_l2_terms: rel_l2(&fd, &terms), rel_l2_exact: rel_l2(&fd, &exact) };

    let audits = run_audits(c, lp, vp, eu, vort, dt, &t, rows, audit_rows)?;
    let audits_pass = audits.all_pass();
    Ok(RunSummary {
        eps: c.eps,
        dt,
        steps,
        particles: vp.ensemble.len(),
        omega0_sup: vort.sup_bound,
        mbar: mbar_value,
        sup_e: sup(|r| r.e_total),
        sup_hm1_rho: sup(|r| r.hm1_rho),
        sup_hm1_j: sup(|r| r.hm1_j),
        sup_weak_gap_rho: sup(|r| r.weak_gap_rho),
        sup_weak_gap_j: sup(|r| r.weak_gap_j),
        initial_energy: rows[0].e_total,
        drifts,
        identity,
        hypotheses,
        audits,
        audits_pass,
    })
}

/// Moment-ODE audit series for `k`: `(|dM_k/dt|, k ||grad phi||_{k+2} M_k^{(k+1)/(k+2)})`.
///
/// Only interior samples are returned: the one-sided difference at the
/// ends does not converge fast enough to resolve the plasma oscillation
/// at practical steps, and its error would dominate the fitted constant.
pub fn moment_ode_series(audit_rows: &[AuditRow], dt: f64, k: u32) -> (Vec<f64>, Vec<f64>) {
    let (lhs, rhs) = moment_ode_full(audit_rows, dt, k);
    if lhs.len() < 3 {
        return (lhs, rhs);
    }
    let n = lhs.len();
    (lhs[1..n - 1].to_vec(), rhs[1..n - 1].to_vec())
}

fn moment_ode_full(audit_rows: &[AuditRow], dt: f64, k: u32) -> (Vec<f64>, Vec<f64>) {
    let mk: Vec<f64> = audit_rows.iter().map(|a| if k == 2 { a.m2 } else { a.m3 }).collect();
    let lhs: Vec<f64> = fd_derivative(&mk, dt).iter().map(|d| d.abs()).collect();
    let kf = k as f64;
    let rhs = audit_rows
        .iter()
        .zip(&mk)
        .map(|(a, m)| {
            let g = if k == 2 { a.grad_phi_4 } else { a.grad_phi_5 };
            kf * g * m.powf((kf + 1.0) / (kf + 2.0))
        })
        .collect();
    (lhs, rhs)
}

/// Moment-interpolation series for `k`: `(||rho||_{1+k/2}, ||f||_inf^{k/(2+k)} M_k^{2/(2+k)})`.
pub fn moment_interp_series(rows: &[StepRow], audit_rows: &[AuditRow], f_sup: f64, k: u32) -> (Vec<f64>, Vec<f64>) {
    let kf = k as f64;
    let lhs = rows.iter().zip(audit_rows).map(|(r, a)| if k == 2 { r.rho_l2 } else { a.rho_25 }).collect();
    let rhs = audit_rows
        .iter()
        .map(|a| {
            let m = if k == 2 { a.m2 } else { a.m3 };
            f_sup.powf(kf / (2.0 + kf)) * m.powf(2.0 / (2.0 + kf))
        })
        .collect();
    (lhs, rhs)
}

/// Grönwall audit inputs: positive part of `dE/dt` against the closed right-hand side.
pub fn density_series(rows: &[StepRow], audit_rows: &[AuditRow]) -> DensitySeries {
    DensitySeries {
        t: rows.iter().map(|r| r.t).collect(),
        rho_inf: rows.iter().map(|r| r.rho_inf).collect(),
        rho_l2: rows.iter().map(|r| r.rho_l2).collect(),
        m2_inf: rows.iter().map(|r| r.m2_inf).collect(),
        q_star: rows.iter().map(|r| r.q_star).collect(),
        m2_total: audit_rows.iter().map(|a| a.m2).collect(),
    }
}

/// Wiener audit exponents.
pub const WIENER_ETAS: [f64; 3] = [1e-1, 1e-2, 1e-3];

#[allow(clippy::too_many_arguments)]
fn run_audits(
    c: &RunConfig,
    lp: &Loop<'_>,
    vp: &VlasovState,
    eu: &EulerState,
    vort: &Vorticity,
    dt: f64,
    t: &[f64],
    rows: &[StepRow],
    audit_rows: &[AuditRow],
) -> Result<Audits> {
    let density = lp
        .inputs
        .as_ref()
        .map(|inp| density_bound_audit(&density_series(rows, audit_rows), inp, &cst::DENSITY))
        .transpose()?;
    let force = worst_case(
        &audit_rows.iter().map(|a| a.grad_phi_inf).collect::<Vec<_>>(),
        &audit_rows.iter().map(|a| a.force_bound).collect::<Vec<_>>(),
        cst::FORCE,
    )?;
    let gronwall = lp
        .inputs
        .as_ref()
        .map(|inp| {
            let e: Vec<f64> = rows.iter().map(|r| r.e_total).collect();
            let d: Vec<f64> = rows.iter().map(|r| r.de_dt_fd).collect();
            gronwall_audit(t, &e, &d, inp, 1.0, cst::GRONWALL)
        })
        .transpose()?;
    let moment_interp = if c.thermal {
        let fs = f0_sup(c.eps, c.beta);
        let mut out = Vec::new();
        for (i, k) in [2, 3].into_iter().enumerate() {
            let (l, r) = moment_interp_series(rows, audit_rows, fs, k);
            out.push(worst_case(&l, &r, cst::MOMENT_INTERP[i])?);
        }
        Some([out[0], out[1]])
    } else {
        None
    };
    // both moment inequalities carry ||f||_inf in their constant, which is
    // infinite for cold data
    let moment_ode = if c.thermal {
        let mut ode = Vec::new();
        for (i, k) in [2, 3].into_iter().enumerate() {
            let (l, r) = moment_ode_series(audit_rows, dt, k);
            ode.push(worst_case(&l, &r, cst::MOMENT_ODE[i])?);
        }
        Some([ode[0], ode[1]])
    } else {
        None
    };
    let sup_speed = audit_rows.iter().map(|a| a.max_speed).fold(0.0, f64::max);
    let yudovich = crate::euler::yudovich_velocity_bound_check(sup_speed, vort.sup_bound, cst::YUDOVICH);

    let cz = cz_bound_check(eu.omega(), cst::CZ_A)?;
    let f = deposit_modulated_tensor(&vp.ensemble, eu.u())?;
    let d = strain(eu.u()).d;
    let duality = duality_check(f.component(0, 1), &d.component(0, 1).minus_mean(), cst::DUALITY_TORUS, cst::DUALITY_LOCAL);
    let mut wiener = Vec::new();
    for &eta in &WIENER_ETAS {
        for comp in [f.component(0, 0), f.component(1, 1)] {
            wiener.push(wiener_check(comp, eta, cst::WIENER)?);
        }
    }
    Ok(Audits {
        density,
        force,
        gronwall,
        moment_interp,
        moment_ode,
        yudovich,
        cz,
        duality,
        wiener,
    })
}

/// Files written by [`run_single`].
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub dir: PathBuf,
    pub steps_csv: PathBuf,
    pub euler_csv: PathBuf,
    pub summary_json: PathBuf,
    pub summary: RunSummary,
}

pub fn steps_table(rows: &[StepRow]) -> CsvTable {
    CsvTable::new(STEP_COLUMNS, rows.iter().map(|r| r.values().to_vec()).collect())
}

pub fn euler_table(rows: &[EulerRow]) -> CsvTable {
    CsvTable::new(EULER_COLUMNS, rows.iter().map(|r| r.values().to_vec()).collect())
}

fn write_checkpoint(dir: &Path, k: usize, vp: &VlasovState, eu: &EulerState) -> Result<()> {
    let mut buf = Vec::new();
    vp.ensemble.write_to(&mut buf)?;
    write_atomic(&dir.join(format!("particles_{k:06}.qnp1")), &buf)?;
    write_atomic(&dir.join(format!("omega_{k:06}.qnl1")), &FieldRecord::scalar(eu.omega()).to_bytes())?;
    write_atomic(&dir.join(format!("phi_{k:06}.qnl1")), &FieldRecord::scalar(&vp.phi).to_bytes())
}

/// Run one configuration and write `steps.csv`, `euler.csv`,
/// `summary.json`, `config.txt` and checkpoints into `dir`.
pub fn run_single_in(c: &RunConfig, dir: &Path) -> Result<RunReport> {
    std::fs::create_dir_all(dir)?;
    let ck_dir = dir.join("checkpoints");
    if c.checkpoint_every > 0 {
        std::fs::create_dir_all(&ck_dir)?;
    }
    let mut sink = |k: usize, vp: &VlasovState, eu: &EulerState| write_checkpoint(&ck_dir, k, vp, eu);
    let res = simulate(c, Some(&mut sink))?;
    let steps_csv = dir.join("steps.csv");
    let euler_csv = dir.join("euler.csv");
    let summary_json = dir.join("summary.json");
    write_atomic(&steps_csv, steps_table(&res.rows).to_csv().as_bytes())?;
    write_atomic(&euler_csv, euler_table(&res.euler_rows).to_csv().as_bytes())?;
    write_atomic(&dir.join("config.txt"), c.to_text().as_bytes())?;
    let json = serde_json::to_string_pretty(&res.summary).map_err(|e| Error::Format(e.to_string()))?;
    write_atomic(&summary_json, json.as_bytes())?;
    Ok(RunReport { dir: dir.to_path_buf(), steps_csv, euler_csv, summary_json, summary: res.summary })
}

/// [`run_single_in`] with the configured output directory.
pub fn run_single(c: &RunConfig) -> Result<RunReport> {
    run_single_in(c, &c.out)
}

/// Kinetic/field split and derivative terms at `t = 0` only; used by the
/// `verify` verb.
pub fn verify(c: &RunConfig) -> Result<HypothesisReport> {
    c.validate()?;
    let data = initial_data(c)?;
    verify_hypotheses(&data.ensemble, &data.spec, c.k0, c.alpha)
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_derivative_is_exact_on_quadratics() {
        let dt = 0.1;
        let v: Vec<f64> = (0..7).map(|k| {
            let t = k as f64 * dt;
            3.0 * t * t - t + 2.0
        })
        .collect();
        for (k, d) in fd_derivative(&v, dt).into_iter().enumerate() {
            assert!((d - (6.0 * k as f64 * dt - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn plasma_at_rest_is_an_exact_equilibrium() {
        let c = RunConfig {
            n: 16,
            ppc: 4,
            thermal: false,
            jitter: 0.0,
            omega_amplitude: 0.0,
            t_end: 0.2,
            ..RunConfig::default()
        };
        let r = simulate(&c, None).unwrap();
        assert!(r.rows.iter().all(|row| row.e_total <= 1e-10), "{:?}", r.rows.last());
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let c = RunConfig { n: 16, ppc: 4, t_end: 0.1, ..RunConfig::default() };
        let a = steps_table(&simulate(&c, None).unwrap().rows).to_csv();
        let b = steps_table(&simulate(&c, None).unwrap().rows).to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn time_step_rule() {
        let c = RunConfig { eps: 0.1, t_end: 1.0, ..RunConfig::default() };
        // the CFL-type term binds: 1 / (64 (2 u + 1)) < 0.2 sqrt(0.1)
        let (dt, steps) = time_step(&c, 0.5);
        assert_eq!(steps, 128);
        assert_eq!(dt, 1.0 / 128.0);
        let (dt, steps) = time_step(&RunConfig { dt: Some(0.25), ..c }, 0.5);
        assert_eq!((dt, steps), (0.25, 4));
    }
}
