//! The frozen constants must dominate a fresh calibration without being
//! looser than the calibration margin, and fresh seeds must pass.

use qnlab::calibration::{audit, calibrate, Ratios, NAMES};
use qnlab::constants::{AUDIT_SEEDS, CALIBRATION_SEEDS, MARGIN};
use qnlab::harness::run::simulate;
use qnlab::harness::RunConfig;

#[test]
fn frozen_constants_match_calibration() {
    let (measured, proposed) = calibrate(CALIBRATION_SEEDS).unwrap();
    let frozen = Ratios::frozen();
    assert!(measured.violations(&frozen).is_empty(), "{:?}", measured.violations(&frozen));
    for (i, name) in NAMES.iter().enumerate() {
        if *name == "force" {
            continue;
        }
        assert!(measured.0[i] > 0.0, "{name} was never exercised");
        assert!(
            frozen.0[i] <= MARGIN * measured.0[i] * 1.01,
            "{name}: frozen {} is looser than {MARGIN} x {}",
            frozen.0[i],
            measured.0[i]
        );
        assert_eq!(frozen.0[i], proposed.0[i], "{name}: recalibration proposes {}", proposed.0[i]);
    }
}

#[test]
fn fresh_seeds_pass_at_frozen_constants() {
    let v = audit(AUDIT_SEEDS).unwrap();
    assert!(v.is_empty(), "{v:?}");
}

#[test]
fn moment_ode_constant_is_stable_under_dt_refinement() {
    let base = RunConfig::default();
    let coarse = simulate(&base, None).unwrap();
    let fine = simulate(&RunConfig { dt: Some(coarse.dt / 2.0), ..base }, None).unwrap();
    let (a, b) = (coarse.summary.audits.moment_ode.unwrap(), fine.summary.audits.moment_ode.unwrap());
    for k in 0..2 {
        let (c1, c2) = (a[k].ratio(), b[k].ratio());
        assert!((c2 / c1 - 1.0).abs() <= 0.5, "k = {}: {c1} vs {c2}", k + 2);
    }
}
