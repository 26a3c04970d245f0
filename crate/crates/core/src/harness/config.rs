//! Flat `key = value` run configuration with `#` comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::initdata::{VorticityFamily, VorticityParams};
use crate::pic::{DT_FACTOR, MIN_PPC};

/// Smallest admissible Debye parameter.
pub const EPS_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub n: usize,
    pub ppc: usize,
    pub eps: f64,
    pub beta: f64,
    pub alpha: f64,
    pub k0: f64,
    pub omega0: VorticityFamily,
    pub omega_amplitude: f64,
    pub omega_radius: f64,
    pub omega_seed: u64,
    pub t_end: f64,
    /// Explicit step; `None` selects `min(dt_factor sqrt(eps), h / (2 max|u0| + 1))`.
    pub dt: Option<f64>,
    pub dt_factor: f64,
    pub kmax: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Checkpoint cadence in steps; 0 disables checkpoints.
    pub checkpoint_every: usize,
    /// Maxwellian velocity spread of temperature `eps^beta`; cold otherwise.
    pub thermal: bool,
    pub jitter: f64,
    /// Density perturbation amplitude `a` in `rho = 1 - a cos(2 pi m x1)`.
    pub perturb_amplitude: f64,
    pub perturb_mode: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 64,
            ppc: 16,
            eps: 0.1,
            beta: 1.0,
            alpha: 1.0,
            k0: 5.0,
            omega0: VorticityFamily::Shear,
            omega_amplitude: 1.0,
            omega_radius: 0.2,
            omega_seed: 0,
            t_end: 0.5,
            dt: None,
            dt_factor: DT_FACTOR,
            kmax: 4,
            seed: 1,
            out: PathBuf::from("qnlab_out"),
            checkpoint_every: 0,
            thermal: true,
            jitter: crate::initdata::JITTER,
            perturb_amplitude: 0.0,
            perturb_mode: 1,
        }
    }
}

/// Canonical key order used by [`RunConfig::to_text`].
pub const KEYS: &[&str] = &[
    "n",
    "ppc",
    "eps",
    "beta",
    "alpha",
    "k0",
    "omega0",
    "omega_amplitude",
    "omega_radius",
    "omega_seed",
    "t_end",
    "dt",
    "dt_factor",
    "kmax",
    "seed",
    "out",
    "checkpoint_every",
    "thermal",
    "jitter",
    "perturb_amplitude",
    "perturb_mode",
];

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("invalid value '{v}' for key '{key}'")))
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key '{k}'", lineno + 1)));
            }
            if seen.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", lineno + 1)));
            }
        }
        let mut c = Self::default();
        for (k, v) in &seen {
            let v = v.as_str();
            match k.as_str() {
                "n" => c.n = parse(k, v)?,
                "ppc" => c.ppc = parse(k, v)?,
                "eps" => c.eps = parse(k, v)?,
                "beta" => c.beta = parse(k, v)?,
                "alpha" => c.alpha = parse(k, v)?,
                "k0" => c.k0 = parse(k, v)?,
                "omega0" => c.omega0 = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
                "omega_amplitude" => c.omega_amplitude = parse(k, v)?,
                "omega_radius" => c.omega_radius = parse(k, v)?,
                "omega_seed" => c.omega_seed = parse(k, v)?,
                "t_end" => c.t_end = parse(k, v)?,
                "dt" => c.dt = if v == "auto" { None } else { Some(parse(k, v)?) },
                "dt_factor" => c.dt_factor = parse(k, v)?,
                "kmax" => c.kmax = parse(k, v)?,
                "seed" => c.seed = parse(k, v)?,
                "out" => c.out = PathBuf::from(v),
                "checkpoint_every" => c.checkpoint_every = parse(k, v)?,
                "thermal" => c.thermal = parse(k, v)?,
                "jitter" => c.jitter = parse(k, v)?,
                "perturb_amplitude" => c.perturb_amplitude = parse(k, v)?,
                "perturb_mode" => c.perturb_mode = parse(k, v)?,
                _ => unreachable!("key list checked above"),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let dt = self.dt.map_or_else(|| "auto".to_string(), |d| d.to_string());
        let vals: Vec<String> = vec![
            self.n.to_string(),
            self.ppc.to_string(),
            self.eps.to_string(),
            self.beta.to_string(),
            self.alpha.to_string(),
            self.k0.to_string(),
            self.omega0.name().to_string(),
            self.omega_amplitude.to_string(),
            self.omega_radius.to_string(),
            self.omega_seed.to_string(),
            self.t_end.to_string(),
            dt,
            self.dt_factor.to_string(),
            self.kmax.to_string(),
            self.seed.to_string(),
            self.out.display().to_string(),
            self.checkpoint_every.to_string(),
            self.thermal.to_string(),
            self.jitter.to_string(),
            self.perturb_amplitude.to_string(),
            self.perturb_mode.to_string(),
        ];
        for (k, v) in KEYS.iter().zip(vals) {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    pub fn grid(&self) -> TorusGrid {
        TorusGrid::new(self.n).expect("validated at load")
    }

    pub fn vorticity_params(&self) -> VorticityParams {
        VorticityParams { amplitude: self.omega_amplitude, radius: self.omega_radius, seed: self.omega_seed }
    }

    /// Checks every module precondition that can be decided from the
    /// configuration alone.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        TorusGrid::new(self.n).map_err(|e| Error::Config(e.to_string()))?;
        let m = (self.ppc as f64).sqrt().round() as usize;
        if self.ppc < MIN_PPC || m * m != self.ppc {
            return bad(format!("ppc must be a perfect square >= {MIN_PPC}, got {}", self.ppc));
        }
        if !(self.eps >= EPS_FLOOR) || !self.eps.is_finite() {
            return bad(format!("eps must be at least {EPS_FLOOR}, got {}", self.eps));
        }
        if !(self.beta > 0.0) || !(self.alpha > 0.0) {
            return bad("alpha and beta must be positive".into());
        }
        if !(self.k0 > 4.0) {
            return bad(format!("k0 must exceed 4, got {}", self.k0));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.dt_factor > 0.0 && self.dt_factor <= DT_FACTOR) {
            return bad(format!("dt_factor must lie in (0, {DT_FACTOR}], got {}", self.dt_factor));
        }
        if let Some(dt) = self.dt {
            crate::pic::check_dt(dt, self.eps)?;
        }
        if self.kmax == 0 || 3 * self.kmax > self.n {
            return bad(format!("kmax must lie in 1..={}, got {}", self.n / 3, self.kmax));
        }
        if !(0.0..=1.0).contains(&self.jitter) {
            return bad(format!("jitter must lie in [0, 1], got {}", self.jitter));
        }
        if !(self.perturb_amplitude.abs() < 1.0) || self.perturb_mode == 0 || 3 * self.perturb_mode > self.n {
            return bad("perturbation needs |amplitude| < 1 and a resolved mode".into());
        }
        if !self.omega_amplitude.is_finite() {
            return bad("omega_amplitude must be finite".into());
        }
        if self.omega0 == VorticityFamily::SmoothedPatch && !(self.omega_radius > 0.0 && self.omega_radius < 0.5) {
            return bad(format!("omega_radius must lie in (0, 1/2), got {}", self.omega_radius));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_default_and_custom() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_text(&c.to_text()).unwrap(), c);
        let c = RunConfig {
            eps: 0.0125,
            dt: Some(0.01),
            omega0: VorticityFamily::RandomBounded,
            omega_seed: 17,
            thermal: false,
            out: PathBuf::from("/tmp/x y"),
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn comments_and_errors() {
        let c = RunConfig::from_text("# header\n eps = 0.05 # trailing\n\nn=32\n").unwrap();
        assert_eq!((c.eps, c.n), (0.05, 32));
        for bad in ["eps = -1", "n = 48", "k0 = 4", "foo = 1", "eps", "ppc = 8", "eps = 0.1\neps = 0.2", "dt = 1.0"] {
            assert!(matches!(RunConfig::from_text(bad), Err(Error::Config(_))), "{bad}");
        }
    }
}
