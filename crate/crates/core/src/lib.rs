//! Square-based arithmetic for matrix products, linear transforms and
//! convolutions.
//!
//! Every product `ab` inside a sum of products can be computed as the
//! partial multiplication `(a + b)²`, provided the sums of squares of each
//! operand are added back afterwards and the total is halved. The correction
//! sums depend on one operand only, so for matrix products the extra
//! squarings amortize away and each real multiplication costs one squaring.
//! Complex products cost four squarings with [`numeric::cpm`], or three with
//! [`numeric::cpm3`].
//!
//! Modules:
//! - [`numeric`]: scalar domains, the square-based primitives, register width plans.
//! - [`correction`]: the per-operand correction terms and their cache.
//! - [`kernels_real`], [`kernels_complex`]: multiply-accumulate oracles and
//!   square-based kernels.
//! - [`hwsim`]: cycle-level models of the hardware that runs those kernels.
//! - [`costmodel`]: operation-count ratios and a parametric area model.

pub mod correction;
pub mod costmodel;
pub mod error;
pub mod hwsim;
pub mod kernels_complex;
pub mod kernels_real;
pub mod ledger;
pub mod matrix;
pub mod numeric;

pub use error::{Error, Result};
pub use ledger::OpLedger;
pub use matrix::{CMatrix, Matrix};
pub use numeric::{BitWidthPlan, CScalar, Cx, Domain, Element, Scalar};
