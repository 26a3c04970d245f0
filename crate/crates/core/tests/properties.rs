//! Randomized invariants across modules.

use std::f64::consts::PI;

use proptest::prelude::*;

use qnlab::euler::EulerState;
use qnlab::harmonic::{bmo_norm, bmo_norm_with, maximal, maximal_with, BmoMode, CubeFamily, Geometry};
use qnlab::harness::config::RunConfig;
use qnlab::initdata::{sample_well_prepared, vorticity_library, VorticityFamily, VorticityParams, WellPreparedSpec};
use qnlab::modulated::{i_terms, modulated_energy};
use qnlab::pic::{deposit_current, deposit_density, Particle, ParticleEnsemble, VlasovState};
use qnlab::spectral::{curl, divergence, h_minus1_norm, neg_laplacian, weak_gap};
use qnlab::{biot_savart, poisson_neg, ScalarField, TorusGrid};

/// Zero-mean trigonometric polynomial with modes below the dealiasing cutoff.
fn band_limited(n: usize) -> impl Strategy<Value = ScalarField> {
    let kmax = (n / 3) as i64;
    prop::collection::vec((-kmax..=kmax, -kmax..=kmax, -1.0..1.0f64, 0.0..(2.0 * PI)), 1..5).prop_map(move |modes| {
        let g = TorusGrid::new(n).unwrap();
        ScalarField::from_fn(g, |x, y| {
            modes
                .iter()
                .filter(|(a, b, _, _)| (*a, *b) != (0, 0))
                .map(|&(a, b, c, ph)| c * (2.0 * PI * (a as f64 * x + b as f64 * y) + ph).cos())
                .sum()
        })
    })
}

fn arbitrary_field(n: usize) -> impl Strategy<Value = ScalarField> {
    prop::collection::vec(-3.0..3.0f64, n * n)
        .prop_map(move |v| ScalarField::from_values(TorusGrid::new(n).unwrap(), v).unwrap())
}

fn ensemble(max: usize) -> impl Strategy<Value = ParticleEnsemble> {
    prop::collection::vec(((0.0..1.0f64, 0.0..1.0f64), (-2.0..2.0f64, -2.0..2.0f64), 0.1..1.0f64), 1..max).prop_map(
        |ps| {
            let total: f64 = ps.iter().map(|p| p.2).sum();
            let parts = ps.iter().map(|&((x, y), (a, b), w)| Particle::new([x, y], [a, b], w / total)).collect();
            ParticleEnsemble::new(parts).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn poisson_inverts_scaled_laplacian(f in band_limited(32), eps in 1e-4..10.0f64) {
        let back = poisson_neg(&neg_laplacian(&f, eps), eps).unwrap();
        prop_assert!(back.max_diff(&f) <= 1e-10 * f.max_abs().max(1.0));
        let p1 = poisson_neg(&f, 1.0).unwrap();
        let pe = poisson_neg(&f, eps).unwrap();
        prop_assert!(pe.max_diff(&(&p1 * (1.0 / eps))) <= 1e-12 * p1.max_abs().max(1e-300) / eps);
    }

    #[test]
    fn biot_savart_is_solenoidal_and_inverts_curl(w in band_limited(32)) {
        let u = biot_savart(&w).unwrap();
        let scale = w.max_abs().max(1e-12);
        prop_assert!(divergence(&u).max_abs() <= 1e-10 * scale);
        prop_assert!(curl(&u).max_diff(&w) <= 1e-10 * scale);
    }

    #[test]
    fn poincare_and_weak_gap_bounds(f in arbitrary_field(16), k in 1usize..=5) {
        let f = f.minus_mean();
        prop_assert!(h_minus1_norm(&f) <= f.l2_norm() / (2.0 * PI) * (1.0 + 1e-12));
        let mean_abs = f.lp_norm(1.0);
        prop_assert!(weak_gap(&f, k).unwrap() <= mean_abs * (1.0 + 1e-12));
    }

    #[test]
    fn deposition_conserves_mass_and_momentum(ens in ensemble(200)) {
        let g = TorusGrid::new(16).unwrap();
        let rho = deposit_density(&ens, g);
        prop_assert!((rho.mean() - 1.0).abs() <= 1e-12);
        prop_assert!(rho.values().iter().all(|&r| r >= 0.0));
        let j = deposit_current(&ens, g);
        let p = ens.momentum();
        prop_assert!((j.x1.integral() - p[0]).abs() <= 1e-10);
        prop_assert!((j.x2.integral() - p[1]).abs() <= 1e-10);
    }

    #[test]
    fn momentum_bookkeeping_over_one_step(ens in ensemble(200), eps in 0.05..1.0f64) {
        let g = TorusGrid::new(16).unwrap();
        let mut vp = VlasovState::new(ens, g, eps, 0.0).unwrap();
        let dt = 0.1 * eps.sqrt();
        let p0 = vp.ensemble.momentum();
        let f0 = vp.total_force();
        vp.advance(dt).unwrap();
        let p1 = vp.ensemble.momentum();
        let f1 = vp.total_force();
        for i in 0..2 {
            // trapezoidal force integral of the kick-drift-kick step
            let expected = 0.5 * dt * (f0[i] + f1[i]);
            prop_assert!((p1[i] - p0[i] - expected).abs() <= 1e-10);
        }
    }

    #[test]
    fn maximal_is_sublinear_and_homogeneous(f in arbitrary_field(8), g in arbitrary_field(8), c in -4.0..4.0f64) {
        let mf = maximal(&f);
        let mg = maximal(&g);
        let msum = maximal(&(&f + &g));
        for k in 0..64 {
            prop_assert!(msum.values()[k] <= mf.values()[k] + mg.values()[k] + 1e-12);
        }
        let mc = maximal(&(&f * c));
        prop_assert!(mc.max_diff(&(&mf * c.abs())) <= 1e-12 * (1.0 + mf.max_abs()));
    }

    #[test]
    fn bmo_seminorm_properties(f in arbitrary_field(8), c in -4.0..4.0f64, s in -3.0..3.0f64) {
        let g = f.grid();
        let shifted = f.map(|v| v + c);
        prop_assert!((bmo_norm(&shifted, BmoMode::BmoTorus) - bmo_norm(&f, BmoMode::BmoTorus)).abs() <= 1e-10);
        prop_assert!(bmo_norm(&ScalarField::constant(g, c), BmoMode::BmoTorus) <= 1e-12);
        prop_assert!((bmo_norm(&ScalarField::constant(g, c), BmoMode::BmoLocal) - c.abs()).abs() <= 1e-12);
        for mode in [BmoMode::BmoTorus, BmoMode::BmoLocal] {
            let scaled = bmo_norm(&(&f * s), mode);
            prop_assert!((scaled - s.abs() * bmo_norm(&f, mode)).abs() <= 1e-10 * (1.0 + scaled));
        }
    }

    #[test]
    fn refinement_never_lowers_the_sup(f in arbitrary_field(16)) {
        for geom in [Geometry::Periodic, Geometry::Clipped] {
            let coarse = CubeFamily::new(16, geom);
            let fine = coarse.refined();
            let (a, b) = (maximal_with(&f, &coarse), maximal_with(&f, &fine));
            prop_assert!(a.values().iter().zip(b.values()).all(|(x, y)| y + 1e-12 >= *x));
            let mode = if geom == Geometry::Periodic { BmoMode::BmoTorus } else { BmoMode::BmoLocal };
            prop_assert!(bmo_norm_with(&f, mode, &fine) + 1e-12 >= bmo_norm_with(&f, mode, &coarse));
        }
    }

    #[test]
    fn local_bmo_is_controlled_on_mean_zero_fields(f in arbitrary_field(16)) {
        let f = f.minus_mean();
        let torus = bmo_norm(&f, BmoMode::BmoTorus);
        prop_assert!(bmo_norm(&f, BmoMode::BmoLocal) <= qnlab::constants::BMO_LOCAL_VS_TORUS * torus + 1e-12);
    }

    #[test]
    fn modulated_energy_is_nonnegative_and_i2_is_quadratic(ens in ensemble(100), s in -3.0..3.0f64) {
        let g = TorusGrid::new(16).unwrap();
        let eu = EulerState::new(ScalarField::from_fn(g, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).cos()), 0.0).unwrap();
        let mut vp = VlasovState::new(ens, g, 0.2, 0.0).unwrap();
        let e = modulated_energy(&vp, &eu).unwrap();
        prop_assert!(e.kinetic >= 0.0 && e.field >= 0.0 && e.total >= 0.0);
        let i2 = i_terms(&vp, &eu).unwrap().i2;
        vp.efield = vp.efield.scale(s);
        let i2s = i_terms(&vp, &eu).unwrap().i2;
        prop_assert!((i2s - s * s * i2).abs() <= 1e-12 * (1.0 + i2.abs()) * (1.0 + s * s));
    }

    #[test]
    fn config_text_roundtrip(n in prop::sample::select(vec![16usize, 32, 64, 128]), m in 2usize..6,
                             eps in 1e-4..1.0f64, seed in any::<u64>(), t_end in 0.01..5.0f64,
                             fam in prop::sample::select(vec!["shear", "eigenpair", "smoothed_patch", "random_bounded"])) {
        let c = RunConfig {
            n, ppc: m * m, eps, seed, t_end, omega0: fam.parse().unwrap(), kmax: 1, ..RunConfig::default()
        };
        prop_assert_eq!(RunConfig::from_text(&c.to_text()).unwrap(), c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn well_prepared_sampling(seed in any::<u64>(), eps in 0.01..0.2f64, beta in 1.0..2.0f64) {
        let g = TorusGrid::new(32).unwrap();
        let vort = vorticity_library(VorticityFamily::Shear, &VorticityParams::default(), g).unwrap();
        let spec = WellPreparedSpec::new(eps, beta, &vort, 16, seed).unwrap();
        let a = sample_well_prepared(&spec).unwrap();
        let b = sample_well_prepared(&spec).unwrap();
        prop_assert_eq!(a.particles(), b.particles());

        // cell-averaged velocity against u0 at the cell centre
        let theta = eps.powf(beta);
        let tol = 3.0 * (theta / 16.0).sqrt();
        let n = g.n();
        let mut sum = vec![[0.0f64; 2]; n * n];
        let mut cnt = vec![0usize; n * n];
        for p in a.particles() {
            // the torus is [-1/2, 1/2)^2
            let cell = |v: f64| (((v + 0.5) * n as f64) as usize).min(n - 1);
            let c = cell(p.x[0]) * n + cell(p.x[1]);
            sum[c][0] += p.xi[0];
            sum[c][1] += p.xi[1];
            cnt[c] += 1;
        }
        let mut good = 0;
        for i in 0..n {
            for j in 0..n {
                let c = i * n + j;
                let centre = [g.coord(i) + 0.5 * g.h(), g.coord(j) + 0.5 * g.h()];
                let u = spec.u0.interpolate(centre);
                let k = cnt[c].max(1) as f64;
                let d = ((sum[c][0] / k - u[0]).powi(2) + (sum[c][1] / k - u[1]).powi(2)).sqrt();
                good += usize::from(d <= tol);
            }
        }
        prop_assert!(good as f64 >= 0.95 * (n * n) as f64, "{good} of {} cells", n * n);

        let vp = VlasovState::new(a, g, eps, 0.0).unwrap();
        prop_assert!(vp.field_energy() <= 1e-3 * theta, "field energy {:e}", vp.field_energy());
    }

    #[test]
    fn euler_conserves_energy_and_enstrophy(seed in 0u64..1000) {
        let g = TorusGrid::new(32).unwrap();
        let v = vorticity_library(VorticityFamily::RandomBounded, &VorticityParams { seed, ..Default::default() }, g).unwrap();
        let w = qnlab::spectral::Spectrum::forward(&v.omega).dealias().inverse().minus_mean();
        let mut st = EulerState::new(w, 0.0).unwrap();
        let (e0, z0) = (st.energy(), st.enstrophy());
        for _ in 0..10 {
            st.advance_substepped(0.1).unwrap();
        }
        prop_assert!((st.energy() - e0).abs() <= 1e-6 * e0);
        prop_assert!((st.enstrophy() - z0).abs() <= 1e-6 * z0);
    }
}
