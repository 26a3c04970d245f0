//! Calibration and audit suite for the frozen constants in [`crate::constants`].
//!
//! Each seed contributes one batch of fields (vorticity of a rotating
//! family, its velocity gradient, a positive tensor-like density) and one
//! short coupled run. For every audited inequality the largest observed
//! `lhs / rhs` is recorded. Calibration takes the maximum over a seed range
//! and multiplies it by [`MARGIN`]; the audit replays fresh seeds against the
//! frozen values.

use serde::Serialize;

use crate::constants::{self as cst, MARGIN};
use crate::error::Result;
use crate::euler::strain;
use crate::grid::TorusGrid;
use crate::harmonic::{bmo_norm, cz_bound_check, duality_check, wiener_check, BmoMode};
use crate::harness::run::{simulate, WIENER_ETAS};
use crate::harness::RunConfig;
use crate::initdata::{vorticity_library, VorticityFamily, VorticityParams};
use crate::spectral::{biot_savart, gradient};

pub const NAMES: [&str; 17] = [
    "cz",
    "duality_torus",
    "duality_local",
    "wiener",
    "bmo_local_vs_torus",
    "yudovich",
    "moment_interp_2",
    "moment_interp_3",
    "moment_ode_2",
    "moment_ode_3",
    "density_rho_gamma",
    "density_rho_qstar",
    "density_m2_gamma",
    "density_m2_qstar",
    "density_rho_l2",
    "gronwall",
    "force",
];

/// One value per entry of [`NAMES`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Ratios(pub [f64; 17]);

impl Default for Ratios {
    fn default() -> Self {
        Self([0.0; 17])
    }
}

fn slot(name: &str) -> usize {
    NAMES.iter().position(|n| *n == name).expect("known audit name")
}

impl Ratios {
    pub fn get(&self, name: &str) -> f64 {
        self.0[slot(name)]
    }

    fn bump(&mut self, name: &str, r: f64) {
        let s = &mut self.0[slot(name)];
        // NaN must not be silently absorbed by max
        *s = if r.is_nan() { f64::NAN } else { s.max(r) };
    }

    pub fn max_with(&mut self, o: &Ratios) {
        for (name, &v) in NAMES.iter().zip(&o.0) {
            self.bump(name, v);
        }
    }

    /// The values currently frozen in [`crate::constants`].
    pub fn frozen() -> Self {
        let d = cst::DENSITY;
        Self([
            cst::CZ_A,
            cst::DUALITY_TORUS,
            cst::DUALITY_LOCAL,
            cst::WIENER,
            cst::BMO_LOCAL_VS_TORUS,
            cst::YUDOVICH,
            cst::MOMENT_INTERP[0],
            cst::MOMENT_INTERP[1],
            cst::MOMENT_ODE[0],
            cst::MOMENT_ODE[1],
            d.rho_gamma,
            d.rho_qstar,
            d.m2_gamma,
            d.m2_qstar,
            d.rho_l2,
            cst::GRONWALL,
            cst::FORCE,
        ])
    }

    /// Names whose ratio exceeds the given constants.
    pub fn violations(&self, constants: &Ratios) -> Vec<String> {
        NAMES
            .iter()
            .zip(self.0.iter().zip(&constants.0))
            .filter(|(_, (r, c))| !(**r <= **c * (1.0 + 1e-9)))
            .map(|(n, (r, c))| format!("{n}: ratio {r:e} exceeds constant {c:e}"))
            .collect()
    }
}

const FAMILIES: [VorticityFamily; 4] =
    [VorticityFamily::Shear, VorticityFamily::Eigenpair, VorticityFamily::SmoothedPatch, VorticityFamily::RandomBounded];

/// Vorticity parameters assigned to a seed: the family rotates with the
/// seed, amplitude and patch radius vary on coprime cycles.
pub fn seed_params(seed: u64) -> (VorticityFamily, VorticityParams) {
    let fam = FAMILIES[(seed % 4) as usize];
    let params = VorticityParams {
        amplitude: 0.5 + 0.5 * (seed % 5) as f64,
        radius: 0.1 + 0.05 * (seed % 3) as f64,
        seed,
    };
    (fam, params)
}

/// Field-level ratios (Calderón–Zygmund, duality, Wiener, bmo vs BMO).
pub fn field_ratios(seed: u64, n: usize) -> Result<Ratios> {
    let grid = TorusGrid::new(n)?;
    let (fam, params) = seed_params(seed);
    let omega = vorticity_library(fam, &params, grid)?.omega;
    let u = biot_savart(&omega)?;
    let d = strain(&u).d;
    let du1 = gradient(&u.x1).x1;
    let noise = vorticity_library(
        VorticityFamily::RandomBounded,
        &VorticityParams { amplitude: 1.0 + (seed % 7) as f64, radius: 0.2, seed: seed.wrapping_add(7919) },
        grid,
    )?
    .omega;
    let positive = noise.map(|v| v * v);

    let mut r = Ratios::default();
    r.bump("cz", cz_bound_check(&omega, 1.0)?.ratio());
    for g in [&omega, &du1, d.component(0, 1)] {
        let torus = bmo_norm(g, BmoMode::BmoTorus);
        if torus > 0.0 {
            r.bump("bmo_local_vs_torus", bmo_norm(g, BmoMode::BmoLocal) / torus);
        }
    }
    for (f, g) in [(&positive, d.component(0, 1).minus_mean()), (&omega.map(|v| v * v), du1.minus_mean())] {
        let rep = duality_check(f, &g, 1.0, 1.0);
        if let Some(t) = rep.torus {
            r.bump("duality_torus", t.ratio());
        }
        r.bump("duality_local", rep.local.ratio());
    }
    for g in [&positive, &omega.map(|v| v * v)] {
        for &eta in &WIENER_ETAS {
            r.bump("wiener", wiener_check(g, eta, 1.0)?.ratio());
        }
    }
    Ok(r)
}

/// Configuration of the short coupled run assigned to a seed.
pub fn seed_config(seed: u64) -> RunConfig {
    let (fam, params) = seed_params(seed);
    RunConfig {
        n: 32,
        ppc: 16,
        eps: [0.1, 0.05][(seed % 2) as usize],
        omega0: fam,
        omega_amplitude: params.amplitude,
        omega_radius: params.radius,
        omega_seed: seed,
        t_end: 0.25,
        seed,
        ..RunConfig::default()
    }
}

/// Ratios measured along the coupled run of a seed, including the field
/// audits the harness applies to its final state.
pub fn run_ratios(seed: u64) -> Result<Ratios> {
    let res = simulate(&seed_config(seed), None)?;
    let a = &res.summary.audits;
    let mut r = Ratios::default();
    r.bump("cz", a.cz.ratio());
    if let Some(t) = a.duality.torus {
        r.bump("duality_torus", t.ratio());
    }
    r.bump("duality_local", a.duality.local.ratio());
    for w in &a.wiener {
        r.bump("wiener", w.ratio());
    }
    r.bump("yudovich", a.yudovich.ratio());
    if let Some(m) = a.moment_interp {
        r.bump("moment_interp_2", m[0].ratio());
        r.bump("moment_interp_3", m[1].ratio());
    }
    if let Some(m) = a.moment_ode {
        r.bump("moment_ode_2", m[0].ratio());
        r.bump("moment_ode_3", m[1].ratio());
    }
    if let Some(d) = &a.density {
        r.bump("density_rho_gamma", d.rho_vs_gamma.ratio());
        r.bump("density_rho_qstar", d.rho_vs_qstar.ratio());
        r.bump("density_m2_gamma", d.m2_vs_gamma.ratio());
        r.bump("density_m2_qstar", d.m2_vs_qstar.ratio());
        r.bump("density_rho_l2", d.rho_l2_vs_energy.ratio());
    }
    if let Some(g) = a.gronwall {
        r.bump("gronwall", g.ratio());
    }
    r.bump("force", a.force.ratio());
    Ok(r)
}

pub fn seed_ratios(seed: u64) -> Result<Ratios> {
    let mut r = field_ratios(seed, 64)?;
    r.max_with(&run_ratios(seed)?);
    Ok(r)
}

/// Maximum ratios over a seed range.
pub fn measure(seeds: impl IntoIterator<Item = u64>) -> Result<Ratios> {
    let mut all = Ratios::default();
    for s in seeds {
        all.max_with(&seed_ratios(s)?);
    }
    Ok(all)
}

/// Rounds up to three significant digits.
pub fn round_up(x: f64) -> f64 {
    if !(x > 0.0) {
        return x;
    }
    let scale = 10f64.powi(2 - x.log10().floor() as i32);
    (x * scale).ceil() / scale
}

/// Constants to freeze: calibrated maxima times [`MARGIN`], rounded up.
/// The force bound keeps its printed constant 1.
pub fn calibrate(seeds: impl IntoIterator<Item = u64>) -> Result<(Ratios, Ratios)> {
    let measured = measure(seeds)?;
    let mut frozen = Ratios(measured.0.map(|r| round_up(r * MARGIN)));
    frozen.0[slot("force")] = cst::FORCE;
    Ok((measured, frozen))
}

/// Per-seed violations of the frozen constants.
pub fn audit(seeds: impl IntoIterator<Item = u64>) -> Result<Vec<(u64, Vec<String>)>> {
    let frozen = Ratios::frozen();
    let mut out = Vec::new();
    for s in seeds {
        let v = seed_ratios(s)?.violations(&frozen);
        if !v.is_empty() {
            out.push((s, v));
        }
    }
    Ok(out)
}
