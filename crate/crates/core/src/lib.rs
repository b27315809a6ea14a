//! Perfect tensor formats: closed-form analysis, explicit witness points and
//! exact certification of full Jacobian rank, plus numerical rank probes.
//!
//! A format `(p_1, ..., p_N)` is *perfect* when its largest mode size is a
//! typical rank over the reals. For sorted dims the format is perfect exactly
//! when `q <= p_N <= p_1 ... p_{N-1}` with
//! `q = p_1 ... p_{N-1} - (p_1 + ... + p_{N-1}) + (N - 1)`. The
//! [`certify`] module proves the positive direction for a given format by
//! exhibiting an integer point at which the Jacobian of the rank-`p_N`
//! parameterization has full column rank.

pub mod certify;
pub mod cli;
pub mod error;
pub mod exactrank;
pub mod formats;
pub mod jacobian;
pub mod matrix;
pub mod probe;
pub mod seed;
pub mod tensor;
pub mod witness;

pub use certify::{certify_perfect, Certificate, Verdict};
pub use error::{Error, Result};
pub use formats::{parse_format, typical_rank_bounds, BoundsReport, CanonicalFormat, Format};
pub use matrix::Matrix;
pub use tensor::{DenseTensor, RankOneTermList};
pub use witness::{build_witness, CoefficientRule, WitnessPoint};

/// Version string recorded in certificates and reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
