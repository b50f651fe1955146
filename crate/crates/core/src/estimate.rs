//! Least-squares estimation and the randomly scaled error statistic.
//!
//! From a trajectory we accumulate the five cross-sums
//! `s11 = ΣX_{k−1}²`, `s22 = ΣX_{k−2}²`, `s12 = ΣX_{k−1}X_{k−2}`,
//! `h1 = ΣX_kX_{k−1}`, `h2 = ΣX_kX_{k−2}` (k = 1..n, ascending order so the
//! result is bit-reproducible). The estimator solves the normal equations
//! through the explicit 2×2 inverse; the random scaling matrix
//!
//! ```text
//! [ √s11        s12/√s11 ]
//! [ s12/√s22    √s22     ]
//! ```
//!
//! applied to the estimation error produces the statistic whose limit is a
//! standard normal on the ray (1, sign λ₁).
//!
//! The Gram matrix is within a factor `(λ₂/λ₁)^{2n}` of rank one, so the
//! determinant and the estimator numerators are evaluated with the
//! compensated difference-of-products kernel; plain rounding there would
//! burn a couple hundred bits of the 800-bit budget.

// `!(x > 0)` rather than `x <= 0`: incomparable values must fail the guard
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use thiserror::Error;

use crate::mat2::{Matrix2, Vector2};
use crate::model::ArParams;
use crate::numerics::{diff_of_products, Real};
use crate::simulate::{Innovations, Trajectory};

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("Gram matrix is singular (det ≤ 0): the estimator is undefined")]
    SingularGram,
    #[error("sum of squares is zero in coordinate {0}")]
    ZeroSumOfSquares(u8),
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("innovation length {innov} does not match trajectory length {traj}")]
    LengthMismatch { innov: usize, traj: usize },
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    BadAlpha(f64),
}

/// The five accumulated cross-sums over k = 1..n.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSums<T> {
    pub s11: T,
    pub s22: T,
    pub s12: T,
    pub h1: T,
    pub h2: T,
    pub n: usize,
}

impl<T: Real> GramSums<T> {
    /// Gram matrix `G_n`.
    pub fn matrix(&self) -> Matrix2<T> {
        Matrix2::new(
            self.s11.clone(),
            self.s12.clone(),
            self.s12.clone(),
            self.s22.clone(),
        )
    }

    /// `det G_n = s11·s22 − s12²`, compensated.
    pub fn det(&self) -> T {
        diff_of_products(&self.s11, &self.s22, &self.s12, &self.s12)
    }

    /// Right-hand side `H_n`.
    pub fn rhs(&self) -> Vector2<T> {
        Vector2::new(self.h1.clone(), self.h2.clone())
    }
}

/// Accumulates the cross-sums in ascending k.
pub fn gram_sums<T: Real>(t: &Trajectory<T>) -> GramSums<T> {
    let mut s11 = T::zero();
    let mut s22 = T::zero();
    let mut s12 = T::zero();
    let mut h1 = T::zero();
    let mut h2 = T::zero();
    for k in 1..=t.n as i64 {
        let xk = t.value(k);
        let x1 = t.value(k - 1);
        let x2 = t.value(k - 2);
        s11 = x1.mul_add(x1, &s11);
        s22 = x2.mul_add(x2, &s22);
        s12 = x1.mul_add(x2, &s12);
        h1 = xk.mul_add(x1, &h1);
        h2 = xk.mul_add(x2, &h2);
    }
    GramSums {
        s11,
        s22,
        s12,
        h1,
        h2,
        n: t.n,
    }
}

/// The least-squares estimate together with the inputs that produced it.
#[derive(Debug, Clone)]
pub struct LseResult<T> {
    pub theta_hat1: T,
    pub theta_hat2: T,
    pub gram: GramSums<T>,
    pub det_g: T,
}

/// Solves the normal equations when `det G_n > 0` (exact comparison):
/// `ϑ̂₁ = (s22·h1 − s12·h2)/det`, `ϑ̂₂ = (s11·h2 − s12·h1)/det`.
pub fn lse<T: Real>(gram: GramSums<T>) -> Result<LseResult<T>, EstimateError> {
    let det_g = gram.det();
    if !(det_g > T::zero()) {
        return Err(EstimateError::SingularGram);
    }
    let num1 = diff_of_products(&gram.s22, &gram.h1, &gram.s12, &gram.h2);
    let num2 = diff_of_products(&gram.s11, &gram.h2, &gram.s12, &gram.h1);
    Ok(LseResult {
        theta_hat1: num1 / det_g.clone(),
        theta_hat2: num2 / det_g.clone(),
        gram,
        det_g,
    })
}

/// The martingale `M_n = σ⁻²ΣZ_k(X_{k−1}, X_{k−2})ᵀ` and its quadratic
/// characteristic `⟨M⟩_n = σ⁻²G_n`.
#[derive(Debug, Clone)]
pub struct MartingaleState<T> {
    pub m: Vector2<T>,
    pub qc: Matrix2<T>,
}

pub fn martingale<T: Real>(
    t: &Trajectory<T>,
    innov: &Innovations,
    bits: u32,
) -> Result<MartingaleState<T>, EstimateError> {
    if innov.len() != t.n {
        return Err(EstimateError::LengthMismatch {
            innov: innov.len(),
            traj: t.n,
        });
    }
    let sigma = T::embed(innov.sigma, bits);
    let inv_var = T::one() / (sigma.clone() * sigma);
    let mut m1 = T::zero();
    let mut m2 = T::zero();
    for k in 1..=t.n as i64 {
        let z = T::embed(innov.z[(k - 1) as usize], bits);
        m1 = z.mul_add(t.value(k - 1), &m1);
        m2 = z.mul_add(t.value(k - 2), &m2);
    }
    let g = gram_sums(t);
    Ok(MartingaleState {
        m: Vector2::new(m1 * inv_var.clone(), m2 * inv_var.clone()),
        qc: g.matrix().scale(&inv_var),
    })
}

impl<T: Real> MartingaleState<T> {
    /// `⟨M⟩_n⁻¹ M_n` through the compensated explicit inverse.
    pub fn normalized_increment(&self) -> Result<Vector2<T>, EstimateError> {
        let det = self.qc.det();
        if !(det > T::zero()) {
            return Err(EstimateError::SingularGram);
        }
        let num1 = diff_of_products(&self.qc.m22, &self.m.v1, &self.qc.m12, &self.m.v2);
        let num2 = diff_of_products(&self.qc.m11, &self.m.v2, &self.qc.m12, &self.m.v1);
        Ok(Vector2::new(num1 / det.clone(), num2 / det))
    }
}

/// The two coordinates of the randomly scaled error.
#[derive(Debug, Clone)]
pub struct ScaledError<T> {
    pub e1: T,
    pub e2: T,
}

/// Applies the random scaling matrix to `(ϑ̂₁ − ϑ₁, ϑ̂₂ − ϑ₂)ᵀ`.
pub fn scaled_error<T: Real>(
    est: &LseResult<T>,
    truth: &ArParams,
) -> Result<ScaledError<T>, EstimateError> {
    let g = &est.gram;
    if !(g.s11 > T::zero()) {
        return Err(EstimateError::ZeroSumOfSquares(1));
    }
    if !(g.s22 > T::zero()) {
        return Err(EstimateError::ZeroSumOfSquares(2));
    }
    let bits = g.s11.precision_bits();
    let d1 = est.theta_hat1.clone() - T::embed(truth.theta1, bits);
    let d2 = est.theta_hat2.clone() - T::embed(truth.theta2, bits);
    let r11 = g.s11.sqrt();
    let r22 = g.s22.sqrt();
    let e1 = r11.mul_add(&d1, &((g.s12.clone() / r11.clone()) * d2.clone()));
    let e2 = (g.s12.clone() / r22.clone()).mul_add(&d1, &(r22 * d2));
    Ok(ScaledError { e1, e2 })
}

/// Diagonal scaling `A_n = σ·diag(s11^{−1/2}, s22^{−1/2})`.
pub fn a_n_matrix<T: Real>(g: &GramSums<T>, sigma: f64) -> Result<Matrix2<T>, EstimateError> {
    if !(g.s11 > T::zero()) {
        return Err(EstimateError::ZeroSumOfSquares(1));
    }
    if !(g.s22 > T::zero()) {
        return Err(EstimateError::ZeroSumOfSquares(2));
    }
    let s = T::embed(sigma, g.s11.precision_bits());
    Ok(Matrix2::new(
        s.clone() / g.s11.sqrt(),
        T::zero(),
        T::zero(),
        s / g.s22.sqrt(),
    ))
}

/// Closed-form symmetric square root of a symmetric positive-definite 2×2
/// matrix: `V^{1/2} = (V + √det(V)·I) / √(v₁₁ + v₂₂ + 2√det(V))`.
pub fn sym_sqrt_2x2<T: Real>(v: &Matrix2<T>) -> Result<Matrix2<T>, EstimateError> {
    if v.m12 != v.m21 {
        return Err(EstimateError::NotPositiveDefinite);
    }
    let det = v.det();
    if !(v.m11 > T::zero()) || !(det > T::zero()) {
        return Err(EstimateError::NotPositiveDefinite);
    }
    let root_det = det.sqrt();
    let scale = (v.m11.clone() + v.m22.clone() + (T::one() + T::one()) * root_det.clone()).sqrt();
    let shifted = Matrix2::new(
        v.m11.clone() + root_det.clone(),
        v.m12.clone(),
        v.m21.clone(),
        v.m22.clone() + root_det,
    );
    Ok(shifted.scale(&(T::one() / scale)))
}

/// `G_n^{1/2}·(ϑ̂ − ϑ)`, the alternative scaling whose limit is a standard
/// two-dimensional normal when σ = 1 and |λ₂| ≠ 1.
pub fn sqrt_scaled_error<T: Real>(
    mstate: &MartingaleState<T>,
    est: &LseResult<T>,
    truth: &ArParams,
    sigma: f64,
) -> Result<Vector2<T>, EstimateError> {
    let bits = est.gram.s11.precision_bits();
    let s = T::embed(sigma, bits);
    let var = s.clone() * s;
    let full_gram = mstate.qc.scale(&var);
    let root = sym_sqrt_2x2(&full_gram)?;
    let d = Vector2::new(
        est.theta_hat1.clone() - T::embed(truth.theta1, bits),
        est.theta_hat2.clone() - T::embed(truth.theta2, bits),
    );
    Ok(root.mul_vec(&d))
}

/// The asymptotic confidence region for (ϑ₁, ϑ₂): an ellipse centered at
/// the estimate.
///
/// The quadratic form of the scaled error converges in distribution to
/// `2σ²N²` with a single standard normal `N`, so the threshold achieving
/// asymptotic coverage 1−α is `2σ²χ²_{1−α}(1)` (the square of the normal
/// (1−α/2)-quantile, times 2σ²).
#[derive(Debug, Clone)]
pub struct ConfidenceRegion<T> {
    pub center: (T, T),
    pub quad_matrix: Matrix2<T>,
    pub threshold: T,
    pub alpha: f64,
}

/// Builds the region: quadratic-form matrix
/// `[[s11 + s12²/s22, 2s12], [2s12, s22 + s12²/s11]]` against the
/// threshold `2σ²χ²_{1−α}(1)`.
pub fn confidence_region<T: Real>(
    est: &LseResult<T>,
    sigma: f64,
    alpha: f64,
) -> Result<ConfidenceRegion<T>, EstimateError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EstimateError::BadAlpha(alpha));
    }
    let g = &est.gram;
    if !(g.s11 > T::zero()) {
        return Err(EstimateError::ZeroSumOfSquares(1));
    }
    if !(g.s22 > T::zero()) {
        return Err(EstimateError::ZeroSumOfSquares(2));
    }
    let bits = g.s11.precision_bits();
    let s12_sq = g.s12.clone() * g.s12.clone();
    let two = T::one() + T::one();
    let quad = Matrix2::new(
        g.s11.clone() + s12_sq.clone() / g.s22.clone(),
        two.clone() * g.s12.clone(),
        two.clone() * g.s12.clone(),
        g.s22.clone() + s12_sq / g.s11.clone(),
    );
    let quantile =
        crate::stats::chi2_quantile_1df(1.0 - alpha).map_err(|_| EstimateError::BadAlpha(alpha))?;
    let threshold = two * T::embed(sigma, bits) * T::embed(sigma, bits) * T::embed(quantile, bits);
    Ok(ConfidenceRegion {
        center: (est.theta_hat1.clone(), est.theta_hat2.clone()),
        quad_matrix: quad,
        threshold,
        alpha,
    })
}

impl<T: Real> ConfidenceRegion<T> {
    pub fn contains(&self, point: (f64, f64)) -> bool {
        let bits = self.threshold.precision_bits();
        let d = Vector2::new(
            self.center.0.clone() - T::embed(point.0, bits),
            self.center.1.clone() - T::embed(point.1, bits),
        );
        let qd = self.quad_matrix.mul_vec(&d);
        let value = d.v1.mul_add(&qd.v1, &(d.v2.clone() * qd.v2));
        value <= self.threshold
    }
}

/// Membership test for the region built from the given estimate.
pub fn confidence_contains<T: Real>(
    est: &LseResult<T>,
    sigma: f64,
    alpha: f64,
    point: (f64, f64),
) -> Result<bool, EstimateError> {
    Ok(confidence_region(est, sigma, alpha)?.contains(point))
}
