//! Prints calibrated maxima and the constants to freeze.

use qnlab::calibration::{audit, calibrate, NAMES};
use qnlab::constants::{AUDIT_SEEDS, CALIBRATION_SEEDS};

fn main() -> qnlab::Result<()> {
    let (measured, frozen) = calibrate(CALIBRATION_SEEDS)?;
    for (i, n) in NAMES.iter().enumerate() {
        println!("{n:20} measured {:.6e}  freeze {}", measured.0[i], frozen.0[i]);
    }
    for (seed, v) in audit(AUDIT_SEEDS)? {
        println!("audit seed {seed}: {v:?}");
    }
    Ok(())
}
