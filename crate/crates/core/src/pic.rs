//! Particle-in-cell discretisation of the ε-scaled Vlasov–Poisson system.
//!
//! Deposition and interpolation share the bilinear (cloud-in-cell) kernel and
//! the field is solved spectrally, so the discrete self-force vanishes and
//! total momentum is conserved to round-off. Time stepping is kick-drift-kick
//! leapfrog; stored states are always synchronised.
//!
//! All particle reductions run over fixed chunks of [`CHUNK`] particles whose
//! partial results are combined in chunk order, which makes every output
//! independent of the rayon pool size.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::field::{ScalarField, TensorField, VectorField};
use crate::grid::{wrap, TorusGrid};
use crate::spectral::{gradient, poisson_neg};

/// Particles per reduction chunk.
pub const CHUNK: usize = 4096;
pub const WEIGHT_TOL: f64 = 1e-12;
/// Largest admissible `dt / sqrt(eps)`.
pub const DT_FACTOR: f64 = 0.2;
pub const MIN_PPC: usize = 4;

pub const PARTICLE_MAGIC: &[u8; 4] = b"QNP1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Particle {
    pub x: [f64; 2],
    pub xi: [f64; 2],
    pub w: f64,
    /// Velocity at `t = 0`, the foot of the backward characteristic.
    pub xi0: [f64; 2],
}

impl Particle {
    pub fn new(x: [f64; 2], xi: [f64; 2], w: f64) -> Self {
        Self { x: [wrap(x[0]), wrap(x[1])], xi, w, xi0: xi }
    }

    #[inline]
    pub fn speed(&self) -> f64 {
        self.xi[0].hypot(self.xi[1])
    }
}

/// Sum `f` over particles in fixed chunks, combining partial sums in order.
pub fn chunked_sum<F>(parts: &[Particle], f: F) -> f64
where
    F: Fn(&Particle) -> f64 + Sync,
{
    let partial: Vec<f64> = parts.par_chunks(CHUNK).map(|c| c.iter().map(&f).sum()).collect();
    partial.iter().sum()
}

fn chunked_max<F>(parts: &[Particle], f: F) -> f64
where
    F: Fn(&Particle) -> f64 + Sync,
{
    parts
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(&f).fold(0.0_f64, f64::max))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble {
    particles: Vec<Particle>,
}

impl ParticleEnsemble {
    /// Validates weights (nonnegative, summing to one) and wraps positions.
    pub fn new(mut particles: Vec<Particle>) -> Result<Self> {
        if particles.is_empty() {
            return Err(param("ensemble needs at least one particle"));
        }
        for (k, p) in particles.iter_mut().enumerate() {
            let finite = p.x.iter().chain(&p.xi).chain(&p.xi0).all(|v| v.is_finite());
            if !finite || !(p.w >= 0.0) || !p.w.is_finite() {
                return Err(Error::Data(format!("invalid particle record at index {k}")));
            }
            p.x = [wrap(p.x[0]), wrap(p.x[1])];
        }
        let total = chunked_sum(&particles, |p| p.w);
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(param(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { particles })
    }

    /// Equal weights `1/N`, at rest.
    pub fn at_rest(positions: &[[f64; 2]]) -> Result<Self> {
        let w = 1.0 / positions.len().max(1) as f64;
        Self::new(positions.iter().map(|&x| Particle::new(x, [0.0, 0.0], w)).collect())
    }

    /// `m * m` particles per cell on a regular sub-lattice, equal weights,
    /// velocities from `xi(x)`.
    pub fn lattice(grid: TorusGrid, m: usize, xi: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Self> {
        if m == 0 {
            return Err(param("sub-lattice size must be positive"));
        }
        let k = grid.n() * m;
        let step = 1.0 / k as f64;
        let w = 1.0 / (k * k) as f64;
        let mut parts = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                let x = [-0.5 + (i as f64 + 0.5) * step, -0.5 + (j as f64 + 0.5) * step];
                parts.push(Particle::new(x, xi(x), w));
            }
        }
        Self::new(parts)
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn particles_mut(&mut self) -> &mut [Particle] {
        &mut self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        chunked_sum(&self.particles, |p| p.w)
    }

    /// `sum_p w_p xi_p`.
    pub fn momentum(&self) -> [f64; 2] {
        [
            chunked_sum(&self.particles, |p| p.w * p.xi[0]),
            chunked_sum(&self.particles, |p| p.w * p.xi[1]),
        ]
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * chunked_sum(&self.particles, |p| p.w * (p.xi[0] * p.xi[0] + p.xi[1] * p.xi[1]))
    }

    /// `M_k = sum_p w_p |xi_p|^k` for `k` in `0..=6`.
    pub fn velocity_moment(&self, k: u32) -> Result<f64> {
        if k > 6 {
            return Err(param(format!("velocity moment order must be 0..=6, got {k}")));
        }
        Ok(chunked_sum(&self.particles, |p| p.w * p.speed().powi(k as i32)))
    }

    /// Ensemble maximum of `|xi_p(t) - xi_p(0)|`: a lower estimate of the
    /// phase-space supremum.
    pub fn q_star(&self) -> f64 {
        chunked_max(&self.particles, |p| (p.xi[0] - p.xi0[0]).hypot(p.xi[1] - p.xi0[1]))
    }

    /// Write the QNP1 checkpoint.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(PARTICLE_MAGIC)?;
        w.write_all(&(self.particles.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(56 * CHUNK);
        for chunk in self.particles.chunks(CHUNK) {
            buf.clear();
            for p in chunk {
                for v in [p.x[0], p.x[1], p.xi[0], p.xi[1], p.w, p.xi0[0], p.xi0[1]] {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let truncated = |e: std::io::Error| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Format("truncated particle checkpoint".into())
            } else {
                Error::Io(e)
            }
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != PARTICLE_MAGIC {
            return Err(Error::Format(format!("bad particle magic {magic:?}")));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8).map_err(truncated)?;
        let count = u64::from_le_bytes(b8) as usize;
        let mut parts = Vec::with_capacity(count.min(1 << 24));
        let mut rec = [0u8; 56];
        for _ in 0..count {
            r.read_exact(&mut rec).map_err(truncated)?;
            let f = |k: usize| f64::from_le_bytes(rec[8 * k..8 * k + 8].try_into().unwrap());
            parts.push(Particle { x: [f(0), f(1)], xi: [f(2), f(3)], w: f(4), xi0: [f(5), f(6)] });
        }
        Self::new(parts).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Deposit `K` particle quantities with the bilinear kernel, scaled by
/// `1/h^2` so that each component integrates to `sum_p q_p`.
pub fn deposit_with<const K: usize, F>(parts: &[Particle], grid: TorusGrid, q: F) -> [Vec<f64>; K]
where
    F: Fn(&Particle) -> [f64; K] + Sync,
{
    let len = grid.len();
    let partial: Vec<Vec<f64>> = parts
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; K * len];
            for p in chunk {
                let vals = q(p);
                for (node, wt) in grid.cic(p.x).nodes(&grid) {
                    for (c, v) in vals.iter().enumerate() {
                        acc[c * len + node] += wt * v;
                    }
                }
            }
            acc
        })
        .collect();
    let scale = (grid.n() * grid.n()) as f64;
    std::array::from_fn(|c| {
        let mut out = vec![0.0; len];
        for acc in &partial {
            for (o, a) in out.iter_mut().zip(&acc[c * len..(c + 1) * len]) {
                *o += a;
            }
        }
        out.iter_mut().for_each(|v| *v *= scale);
        out
    })
}

pub fn deposit_density(ens: &ParticleEnsemble, grid: TorusGrid) -> ScalarField {
    let [rho] = deposit_with(ens.particles(), grid, |p| [p.w]);
    ScalarField::from_raw(grid, rho)
}

pub fn deposit_current(ens: &ParticleEnsemble, grid: TorusGrid) -> VectorField {
    let [j1, j2] = deposit_with(ens.particles(), grid, |p| [p.w * p.xi[0], p.w * p.xi[1]]);
    VectorField { x1: ScalarField::from_raw(grid, j1), x2: ScalarField::from_raw(grid, j2) }
}

/// `m_k(x) = int |xi|^k f dxi` for `k` in `0..=4`.
pub fn deposit_moment(ens: &ParticleEnsemble, grid: TorusGrid, k: u32) -> Result<ScalarField> {
    if k > 4 {
        return Err(param(format!("moment order must be 0..=4, got {k}")));
    }
    if k == 0 {
        return Ok(deposit_density(ens, grid));
    }
    let [m] = deposit_with(ens.particles(), grid, |p| [p.w * p.speed().powi(k as i32)]);
    Ok(ScalarField::from_raw(grid, m))
}

/// Second-moment tensor `int (xi - u(x)) (xi - u(x)) f dxi` with `u`
/// interpolated to the particles.
pub fn deposit_modulated_tensor(ens: &ParticleEnsemble, u: &VectorField) -> Result<TensorField> {
    let grid = u.grid();
    let [a, b, c] = deposit_with(ens.particles(), grid, |p| {
        let uu = u.interpolate(p.x);
        let d = [p.xi[0] - uu[0], p.xi[1] - uu[1]];
        [p.w * d[0] * d[0], p.w * d[0] * d[1], p.w * d[1] * d[1]]
    });
    let off = ScalarField::from_raw(grid, b);
    TensorField::new_symmetric([
        [ScalarField::from_raw(grid, a), off.clone()],
        [off, ScalarField::from_raw(grid, c)],
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PicConfig {
    pub n: usize,
    pub ppc: usize,
    pub dt: f64,
    pub seed: u64,
}

impl PicConfig {
    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.n)
    }

    pub fn validate(&self, eps: f64) -> Result<()> {
        TorusGrid::new(self.n).map_err(|e| Error::Config(e.to_string()))?;
        if self.ppc < MIN_PPC {
            return Err(Error::Config(format!("ppc must be at least {MIN_PPC}, got {}", self.ppc)));
        }
        check_dt(self.dt, eps)
    }
}

/// `dt <= 0.2 sqrt(eps)`, the plasma-period resolution rule.
pub fn check_dt(dt: f64, eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let max = DT_FACTOR * eps.sqrt();
    if !(dt > 0.0) || dt > max * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "dt = {dt} violates 0 < dt <= 0.2 sqrt(eps) = {max}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyScalar {
    pub kinetic: f64,
    pub field: f64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct VlasovState {
    pub ensemble: ParticleEnsemble,
    pub time: f64,
    pub eps: f64,
    pub grid: TorusGrid,
    pub rho: ScalarField,
    pub phi: ScalarField,
    /// `-grad phi`.
    pub efield: VectorField,
    pub synchronized: bool,
}

impl VlasovState {
    /// Builds the state at `time` and solves the field.
    pub fn new(ensemble: ParticleEnsemble, grid: TorusGrid, eps: f64, time: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(param(format!("eps must be positive, got {eps}")));
        }
        let zero = ScalarField::zeros(grid);
        let mut state = Self {
            ensemble,
            time,
            eps,
            grid,
            rho: zero.clone(),
            phi: zero,
            efield: VectorField::zeros(grid),
            synchronized: true,
        };
        state.solve_field()?;
        Ok(state)
    }

    /// Deposit `rho`, solve `-eps Delta phi = rho - 1` and cache `-grad phi`.
    pub fn solve_field(&mut self) -> Result<()> {
        self.rho = deposit_density(&self.ensemble, self.grid);
        let src = self.rho.map(|r| r - 1.0);
        self.phi = poisson_neg(&src, self.eps)?;
        self.efield = gradient(&self.phi).scale(-1.0);
        Ok(())
    }

    fn kick(&mut self, tau: f64) {
        let e = &self.efield;
        self.ensemble.particles.par_iter_mut().for_each(|p| {
            let f = e.interpolate(p.x);
            p.xi[0] += tau * f[0];
            p.xi[1] += tau * f[1];
        });
    }

    fn drift(&mut self, tau: f64) {
        self.ensemble.particles.par_iter_mut().for_each(|p| {
            p.x = [wrap(p.x[0] + tau * p.xi[0]), wrap(p.x[1] + tau * p.xi[1])];
        });
    }

    /// One kick-drift-kick step with force `-grad phi`.
    pub fn advance(&mut self, dt: f64) -> Result<()> {
        check_dt(dt, self.eps)?;
        self.synchronized = false;
        self.kick(0.5 * dt);
        self.drift(dt);
        self.solve_field()?;
        self.kick(0.5 * dt);
        self.time += dt;
        self.synchronized = true;
        Ok(())
    }

    pub fn step(mut self, dt: f64) -> Result<Self> {
        self.advance(dt)?;
        Ok(self)
    }

    pub fn q_star(&self) -> f64 {
        self.ensemble.q_star()
    }

    /// `(eps/2) int |grad phi|^2`.
    pub fn field_energy(&self) -> f64 {
        0.5 * self.eps * self.efield.l2_norm_sq()
    }

    pub fn total_energy(&self) -> EnergyScalar {
        let kinetic = self.ensemble.kinetic_energy();
        let field = self.field_energy();
        EnergyScalar { kinetic, field, total: kinetic + field }
    }

    pub fn velocity_moment(&self, k: u32) -> Result<f64> {
        self.ensemble.velocity_moment(k)
    }

    /// `sum_p w_p E(x_p)`; zero up to round-off for the matched kernels.
    pub fn total_force(&self) -> [f64; 2] {
        let e = &self.efield;
        let parts = self.ensemble.particles();
        [
            chunked_sum(parts, |p| p.w * e.x1.interpolate(p.x)),
            chunked_sum(parts, |p| p.w * e.x2.interpolate(p.x)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(n).unwrap()
    }

    #[test]
    fn cell_centred_lattice_deposits_unit_density() {
        let g = grid(16);
        let ens = ParticleEnsemble::lattice(g, 1, |_| [0.0, 0.0]).unwrap();
        let rho = deposit_density(&ens, g);
        assert!(rho.values().iter().all(|r| (r - 1.0).abs() < 1e-12));
    }

    #[test]
    fn single_particle_on_node() {
        let g = grid(8);
        let ens = ParticleEnsemble::new(vec![Particle::new(g.node(2, 5), [2.0, -1.0], 1.0)]).unwrap();
        let rho = deposit_density(&ens, g);
        assert!((rho.get(2, 5) - 64.0).abs() < 1e-12);
        assert!((rho.values().iter().sum::<f64>() - 64.0).abs() < 1e-12);
        let j = deposit_current(&ens, g);
        assert!((j.x1.get(2, 5) - 128.0).abs() < 1e-12 && (j.x2.get(2, 5) + 64.0).abs() < 1e-12);
        assert!((rho.mean() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moments_and_current_integrals() {
        let g = grid(16);
        let ens = ParticleEnsemble::lattice(g, 2, |x| [2.0 * (2.0 * PI * x[1]).cos(), 0.0]).unwrap();
        let m0 = deposit_moment(&ens, g, 0).unwrap();
        assert_eq!(m0, deposit_density(&ens, g));
        assert!(deposit_moment(&ens, g, 5).is_err());
        let j = deposit_current(&ens, g);
        let p = ens.momentum();
        assert!((j.x1.integral() - p[0]).abs() < 1e-10);
        let mono = ParticleEnsemble::lattice(g, 1, |_| [0.0, 2.0]).unwrap();
        let m2 = deposit_moment(&mono, g, 2).unwrap();
        assert!(m2.values().iter().all(|v| (v - 4.0).abs() < 1e-12));
        assert!((mono.velocity_moment(3).unwrap() - 8.0).abs() < 1e-12);
        assert!((mono.velocity_moment(0).unwrap() - 1.0).abs() < 1e-12);
        assert!(mono.velocity_moment(7).is_err());
    }

    #[test]
    fn weights_are_validated() {
        let p = Particle::new([0.0, 0.0], [0.0, 0.0], 0.5);
        assert!(ParticleEnsemble::new(vec![p]).is_err());
        let q = Particle::new([0.7, -0.9], [0.0, 0.0], 1.0);
        let ens = ParticleEnsemble::new(vec![q]).unwrap();
        assert!((ens.particles()[0].x[0] + 0.3).abs() < 1e-15);
    }

    #[test]
    fn uniform_drift_is_force_free() {
        let g = grid(16);
        let ens = ParticleEnsemble::lattice(g, 2, |_| [0.3, -0.1]).unwrap();
        let mut s = VlasovState::new(ens, g, 0.1, 0.0).unwrap();
        assert!(s.phi.max_abs() < 1e-12);
        for _ in 0..10 {
            s.advance(0.05).unwrap();
        }
        assert!(s.efield.max_magnitude() < 1e-10);
        assert!(s.q_star() < 1e-10);
        assert!((s.time - 0.5).abs() < 1e-12);
        assert!((s.total_energy().total - 0.05).abs() < 1e-12);
    }

    #[test]
    fn dt_rule_is_enforced() {
        let g = grid(8);
        let ens = ParticleEnsemble::lattice(g, 2, |_| [0.0, 0.0]).unwrap();
        let s = VlasovState::new(ens, g, 0.01, 0.0).unwrap();
        assert!(matches!(s.clone().step(0.03), Err(Error::Config(_))));
        assert!(s.step(0.02).is_ok());
        let cfg = PicConfig { n: 8, ppc: 2, dt: 0.01, seed: 0 };
        assert!(matches!(cfg.validate(0.01), Err(Error::Config(_))));
    }

    #[test]
    fn momentum_is_conserved() {
        let g = grid(16);
        let ens = ParticleEnsemble::lattice(g, 2, |x| {
            [0.2 * (2.0 * PI * x[0]).sin(), 0.1 * (2.0 * PI * x[1]).cos()]
        })
        .unwrap();
        let mut s = VlasovState::new(ens, g, 0.1, 0.0).unwrap();
        let p0 = s.ensemble.momentum();
        for _ in 0..20 {
            s.advance(0.05).unwrap();
        }
        let p1 = s.ensemble.momentum();
        assert!((p1[0] - p0[0]).abs() < 1e-13 && (p1[1] - p0[1]).abs() < 1e-13);
        let f = s.total_force();
        assert!(f[0].abs() < 1e-12 && f[1].abs() < 1e-12);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let g = grid(8);
        let ens = ParticleEnsemble::lattice(g, 1, |x| [x[0], 2.0 * x[1]]).unwrap();
        let mut buf = Vec::new();
        ens.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"QNP1");
        assert_eq!(buf.len(), 12 + 64 * 56);
        let back = ParticleEnsemble::read_from(&buf[..]).unwrap();
        assert_eq!(back, ens);
        assert!(ParticleEnsemble::read_from(&buf[..40]).is_err());
    }
}
