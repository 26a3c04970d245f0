//! Numerical laboratory for the quasineutral limit of the ε-scaled
//! Vlasov–Poisson system towards 2D incompressible Euler on the torus.

// `!(x > 0.0)` is used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calibration;
pub mod constants;
pub mod error;
pub mod euler;
pub mod field;
pub mod fieldio;
pub mod green;
pub mod grid;
pub mod harmonic;
pub mod harness;
pub mod initdata;
pub mod modulated;
pub mod pic;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{ScalarField, TensorField, VectorField};
pub use green::{green_split_eval, GreenSplit, GreenValues};
pub use grid::TorusGrid;
pub use spectral::{biot_savart, gradient, h_minus1_norm, poisson_neg, weak_gap};
