//! Integral and S-integral points on symmetric varieties over Q.
//!
//! The crate enumerates points on level sets `f(x) = m` of integral quadratic
//! forms, `±det` on symmetric matrices and `±pf` on skew-symmetric matrices,
//! computes heights and invariant-measure volumes at the real and p-adic places,
//! and runs counting and equidistribution experiments on top of them.

// Matrix code indexes by position; NaN-rejecting `!(a < b)` checks are deliberate.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod arith;
pub mod enumerate;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod heights;
pub mod linalg;
pub mod places;
pub mod varieties;
pub mod volumes_arch;
pub mod volumes_padic;

pub use error::{Error, Result};
pub use varieties::{Level, VarietyKind, VarietySpec};
pub use places::{PlaceSet, SPoint};
