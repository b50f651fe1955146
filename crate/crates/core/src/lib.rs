//! High-precision simulation and estimation laboratory for supercritical
//! Gaussian AR(2) processes.
//!
//! The pipeline simulates `X_k = ϑ₁X_{k−1} + ϑ₂X_{k−2} + Z_k` under
//! arbitrary-precision arithmetic, computes the least-squares estimator of
//! (ϑ₁, ϑ₂), applies the random scaling that turns the estimation error
//! into an asymptotically standard-normal statistic concentrated on the ray
//! `(1, sign λ₁)`, and reproduces the accompanying Monte Carlo study:
//! replicated experiments, descriptive statistics, normality tests,
//! histogram data, closed-form limit verification, and confidence-region
//! coverage.
//!
//! The numerical core is generic over the scalar type through the
//! [`numerics::Real`] trait; production runs instantiate it at
//! [`numerics::BigReal`] (MPFR-backed, 800-bit default), while `f64` serves
//! the cheap checks. Concrete aliases for the high-precision lane live at
//! the crate root.

pub mod estimate;
pub mod limits;
pub mod mat2;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod simulate;
pub mod stats;

pub use numerics::{BigReal, NumericsError, PrecisionCtx, Real, DEFAULT_MANTISSA_BITS};

/// 2×2 matrix over the high-precision scalar.
pub type BigMatrix2 = mat2::Matrix2<BigReal>;
/// 2-vector over the high-precision scalar.
pub type BigVector2 = mat2::Vector2<BigReal>;
/// High-precision trajectory.
pub type BigTrajectory = simulate::Trajectory<BigReal>;
/// High-precision Gram sums.
pub type BigGramSums = estimate::GramSums<BigReal>;
/// High-precision least-squares result.
pub type BigLseResult = estimate::LseResult<BigReal>;
/// High-precision scaled error.
pub type BigScaledError = estimate::ScaledError<BigReal>;
/// High-precision martingale state.
pub type BigMartingaleState = estimate::MartingaleState<BigReal>;
/// High-precision Y realization.
pub type BigLimitY = limits::LimitY<BigReal>;
