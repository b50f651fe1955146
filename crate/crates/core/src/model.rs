//! AR(2) parameterization: characteristic roots, companion matrix, and the
//! process taxonomy (subcritical / critical / supercritical, with the
//! explosive sub-cases).
//!
//! The characteristic polynomial is `x² − ϑ₁x − ϑ₂`; its roots are
//! `λ± = (ϑ₁ ± √(ϑ₁² + 4ϑ₂))/2`. When the roots are real with different
//! absolute values, `λ₁` denotes the one with the larger absolute value and
//! `λ₂` the other. Classification runs in double precision; the limit
//! formulas re-derive the roots as [`BigReal`] at full working precision
//! with a cancellation-free quadratic solve.

use serde::Serialize;
use thiserror::Error;

use crate::mat2::Matrix2;
use crate::numerics::{BigReal, NumericsError, PrecisionCtx, Real};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("innovation standard deviation must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("parameter {0} is not finite")]
    NonFiniteParam(f64),
    #[error(
        "operation requires distinct real characteristic roots with different absolute values"
    )]
    RootsNotDistinctReal,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Model parameters: AR coefficients, innovation standard deviation, and the
/// deterministic initial pair (X₀, X₋₁).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ArParams {
    pub theta1: f64,
    pub theta2: f64,
    pub sigma: f64,
    pub x0: f64,
    pub x_neg1: f64,
}

impl ArParams {
    pub fn new(
        theta1: f64,
        theta2: f64,
        sigma: f64,
        x0: f64,
        x_neg1: f64,
    ) -> Result<Self, ModelError> {
        for v in [theta1, theta2, sigma, x0, x_neg1] {
            if !v.is_finite() {
                return Err(ModelError::NonFiniteParam(v));
            }
        }
        if sigma <= 0.0 {
            return Err(ModelError::NonPositiveSigma(sigma));
        }
        Ok(ArParams {
            theta1,
            theta2,
            sigma,
            x0,
            x_neg1,
        })
    }

    /// Zero-started unit-variance process, the default experimental setup.
    pub fn zero_start(theta1: f64, theta2: f64) -> Result<Self, ModelError> {
        ArParams::new(theta1, theta2, 1.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        ArParams::new(self.theta1, self.theta2, self.sigma, self.x0, self.x_neg1).map(|_| ())
    }
}

/// A possibly complex characteristic root, reported in double precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexRoot {
    pub re: f64,
    pub im: f64,
}

impl ComplexRoot {
    fn real(re: f64) -> Self {
        ComplexRoot { re, im: 0.0 }
    }
    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Sub-cases of the supercritical regime with distinct real roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SupercriticalKind {
    /// |λ₁| > |λ₂| > 1
    PurelyExplosive,
    /// |λ₁| > 1 > |λ₂|
    PartiallyExplosive,
    /// λ₂ = 1 with |λ₁| > 1
    UnitRootPlus,
    /// λ₂ = −1 with |λ₁| > 1
    UnitRootMinus,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Subcritical,
    Critical,
    SupercriticalDistinctReal(SupercriticalKind),
    /// Supercritical but without two real roots of different absolute
    /// values (complex pair, repeated root, or |λ₊| = |λ₋|). The λ₁-based
    /// operations refuse such inputs.
    SupercriticalOther,
}

impl Classification {
    pub fn is_supercritical_distinct_real(&self) -> bool {
        matches!(self, Classification::SupercriticalDistinctReal(_))
    }
}

/// Characteristic roots plus classification.
///
/// `lambda1` / `lambda2` are populated only when the discriminant is
/// positive and the absolute values differ; `lambda1` is then the root with
/// the larger absolute value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootInfo {
    pub theta1: f64,
    pub theta2: f64,
    pub lambda_plus: ComplexRoot,
    pub lambda_minus: ComplexRoot,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub discriminant: f64,
    pub classification: Classification,
}

/// Unit-magnitude comparisons are exact when both coefficients are exactly
/// representable integers (the paper's cases), otherwise a 1e-12 tolerance
/// is applied.
fn integer_exact(theta1: f64, theta2: f64) -> bool {
    let ok = |t: f64| t.fract() == 0.0 && t.abs() <= (1u64 << 52) as f64;
    ok(theta1) && ok(theta2)
}

fn is_one(x: f64, exact: bool) -> bool {
    if exact {
        x == 1.0
    } else {
        (x - 1.0).abs() < 1e-12
    }
}

/// Computes both characteristic roots and classifies the process.
pub fn roots(theta1: f64, theta2: f64) -> RootInfo {
    let disc = theta1 * theta1 + 4.0 * theta2;
    let exact = integer_exact(theta1, theta2);
    let (lambda_plus, lambda_minus) = if disc >= 0.0 {
        let s = disc.sqrt();
        // evaluate the non-cancelling root directly, recover the other from
        // the product λ₊λ₋ = −ϑ₂
        if theta1 >= 0.0 {
            let lp = (theta1 + s) / 2.0;
            let lm = if lp != 0.0 {
                -theta2 / lp
            } else {
                (theta1 - s) / 2.0
            };
            (ComplexRoot::real(lp), ComplexRoot::real(lm))
        } else {
            let lm = (theta1 - s) / 2.0;
            let lp = if lm != 0.0 {
                -theta2 / lm
            } else {
                (theta1 + s) / 2.0
            };
            (ComplexRoot::real(lp), ComplexRoot::real(lm))
        }
    } else {
        let s = (-disc).sqrt() / 2.0;
        (
            ComplexRoot {
                re: theta1 / 2.0,
                im: s,
            },
            ComplexRoot {
                re: theta1 / 2.0,
                im: -s,
            },
        )
    };

    let (lambda1, lambda2) = if disc > 0.0 {
        let (lp, lm) = (lambda_plus.re, lambda_minus.re);
        if lp.abs() > lm.abs() {
            (Some(lp), Some(lm))
        } else if lm.abs() > lp.abs() {
            (Some(lm), Some(lp))
        } else {
            (None, None)
        }
    } else {
        (None, None)
    };

    let rho = lambda_plus.abs().max(lambda_minus.abs());
    let classification = if is_one(rho, exact) {
        Classification::Critical
    } else if rho < 1.0 {
        Classification::Subcritical
    } else {
        match (lambda1, lambda2) {
            (Some(_l1), Some(l2)) => {
                let kind = if is_one(l2, exact) {
                    SupercriticalKind::UnitRootPlus
                } else if is_one(-l2, exact) {
                    SupercriticalKind::UnitRootMinus
                } else if l2.abs() > 1.0 {
                    SupercriticalKind::PurelyExplosive
                } else if l2.abs() < 1.0 {
                    SupercriticalKind::PartiallyExplosive
                } else {
                    SupercriticalKind::Other
                };
                Classification::SupercriticalDistinctReal(kind)
            }
            _ => Classification::SupercriticalOther,
        }
    };

    RootInfo {
        theta1,
        theta2,
        lambda_plus,
        lambda_minus,
        lambda1,
        lambda2,
        discriminant: disc,
        classification,
    }
}

pub fn classify(r: &RootInfo) -> Classification {
    r.classification
}

impl RootInfo {
    pub fn sign_lambda1(&self) -> Result<f64, ModelError> {
        self.lambda1
            .map(f64::signum)
            .ok_or(ModelError::RootsNotDistinctReal)
    }

    /// Re-derives (λ₁, λ₂) as `BigReal` at the context precision with the
    /// stable quadratic solve (larger-magnitude root first, then the other
    /// from the root product −ϑ₂/λ).
    pub fn big_lambdas(&self, ctx: &PrecisionCtx) -> Result<(BigReal, BigReal), ModelError> {
        if self.lambda1.is_none() {
            return Err(ModelError::RootsNotDistinctReal);
        }
        let t1 = ctx.embed(self.theta1)?;
        let t2 = ctx.embed(self.theta2)?;
        let four = ctx.embed_i64(4);
        let two = ctx.embed_i64(2);
        let disc = t1.fma(&t1, &(four * t2.clone()));
        let s = disc
            .try_sqrt()
            .map_err(|_| ModelError::RootsNotDistinctReal)?;
        let (big_plus, big_minus) = if self.theta1 >= 0.0 {
            let lp = (t1.clone() + s.clone()).try_div(&two)?;
            let lm = if lp.is_zero_value() {
                (t1 - s).try_div(&two)?
            } else {
                (-t2).try_div(&lp)?
            };
            (lp, lm)
        } else {
            let lm = (t1.clone() - s.clone()).try_div(&two)?;
            let lp = if lm.is_zero_value() {
                (t1 + s).try_div(&two)?
            } else {
                (-t2).try_div(&lm)?
            };
            (lp, lm)
        };
        if big_plus.abs_value() > big_minus.abs_value() {
            Ok((big_plus, big_minus))
        } else {
            Ok((big_minus, big_plus))
        }
    }
}

/// Companion matrix `ϑ = [[ϑ₁, ϑ₂], [1, 0]]` over any scalar.
pub fn companion_matrix<T: Real>(theta1: f64, theta2: f64, bits: u32) -> Matrix2<T> {
    Matrix2::new(
        T::embed(theta1, bits),
        T::embed(theta2, bits),
        T::embed(1.0, bits),
        T::embed(0.0, bits),
    )
}

/// Closed-form n-th companion power from the spectral decomposition:
/// `ϑⁿ = (λ₁ⁿ/(λ₁−λ₂))·[[λ₁, −λ₁λ₂],[1, −λ₂]]
///      + (λ₂ⁿ/(λ₁−λ₂))·[[−λ₂, λ₁λ₂],[−1, λ₁]]`.
pub fn jordan_power<T: Real>(lambda1: &T, lambda2: &T, n: u32) -> Matrix2<T> {
    let gap = lambda1.clone() - lambda2.clone();
    let l1l2 = lambda1.clone() * lambda2.clone();
    let c1 = powi(lambda1, n) / gap.clone();
    let c2 = powi(lambda2, n) / gap;
    let first = Matrix2::new(lambda1.clone(), -l1l2.clone(), T::one(), -lambda2.clone()).scale(&c1);
    let second = Matrix2::new(-lambda2.clone(), l1l2, -T::one(), lambda1.clone()).scale(&c2);
    first.add(&second)
}

fn powi<T: Real>(base: &T, n: u32) -> T {
    let mut acc = T::one();
    for _ in 0..n {
        acc = acc * base.clone();
    }
    acc
}

/// `ϑⁿ` as a full-precision matrix; requires distinct real roots with
/// different absolute values.
pub fn companion_power(
    r: &RootInfo,
    n: u32,
    ctx: &PrecisionCtx,
) -> Result<Matrix2<BigReal>, ModelError> {
    let (l1, l2) = r.big_lambdas(ctx)?;
    Ok(jordan_power(&l1, &l2, n))
}
