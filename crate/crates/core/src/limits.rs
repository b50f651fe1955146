//! Closed-form limit objects of the supercritical theory and numerical
//! verification of the almost-sure convergences on simulated paths.
//!
//! The driving random variable is
//! `Y = λ₁/(λ₁−λ₂)·(X₀ − λ₂X₋₁) + λ₁/(λ₁−λ₂)·Σ_{j≥1} λ₁^{−j}Z_j`,
//! realized here by truncating the series once the tail drops below the
//! working-precision floor. All limit matrices below are functions of
//! (Y, λ₁, σ):
//!
//! * `λ₁^{−2n}⟨M⟩_n → (Y²/((λ₁²−1)σ²))·[[1, λ₁⁻¹],[λ₁⁻¹, λ₁⁻²]]` (rank one),
//! * `|λ₁|ⁿA_n → (σ√(λ₁²−1)/|Y|)·diag(1, |λ₁|)`,
//! * `A_n⟨M⟩_n^{1/2} → (1/√(1+λ₁⁻²))·[[1, λ₁⁻¹],[sign λ₁, |λ₁|⁻¹]]`.
//!
//! For λ₁ < 0 the odd powers `λ₁ⁿ` alternate in sign while `A_n` is built
//! from square roots and is therefore positive; the convergent normalization
//! uses |λ₁|ⁿ, and only even powers keep the signed root.

use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::estimate::{gram_sums, sym_sqrt_2x2, EstimateError};
use crate::mat2::{Matrix2, Vector2};
use crate::model::{ArParams, ModelError, RootInfo};
use crate::numerics::{BigReal, PrecisionCtx, Real};
use crate::simulate::{simulate_path, Innovations, SimulateError, Trajectory};

#[derive(Debug, Error)]
pub enum LimitsError {
    #[error("limit formulas require |λ₁| > 1 with distinct real roots")]
    NotSupercritical,
    #[error("series truncation needs {needed} innovations, only {available} available")]
    InsufficientInnovations { needed: usize, available: usize },
    #[error("Y = 0: degenerate initial data with zero innovations")]
    DegenerateY,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
}

/// A realization of the limit variable Y on a given innovation stream.
#[derive(Debug, Clone)]
pub struct LimitY<T> {
    pub y: T,
    pub truncation: usize,
}

/// Truncation depth so that |λ₁|^(−depth) sits below the precision floor,
/// plus a few guard terms.
pub fn truncation_depth(bits: u32, lambda1_abs: f64) -> usize {
    let t = (bits as f64 * std::f64::consts::LN_2 / lambda1_abs.ln()).ceil() as usize;
    t + 8
}

/// Evaluates the truncated series for Y over an explicit pair of roots.
pub fn y_realization_in<T: Real>(
    params: &ArParams,
    innov: &Innovations,
    lambda1: &T,
    lambda2: &T,
    bits: u32,
) -> Result<LimitY<T>, LimitsError> {
    let l1_abs = lambda1.to_f64().abs();
    if l1_abs.is_nan() || l1_abs <= 1.0 {
        return Err(LimitsError::NotSupercritical);
    }
    let depth = truncation_depth(bits, l1_abs);
    if innov.len() < depth {
        return Err(LimitsError::InsufficientInnovations {
            needed: depth,
            available: innov.len(),
        });
    }
    let coeff = lambda1.clone() / (lambda1.clone() - lambda2.clone());
    let x0 = T::embed(params.x0, bits);
    let x_neg1 = T::embed(params.x_neg1, bits);
    let head = coeff.clone() * (x0 - lambda2.clone() * x_neg1);
    let inv = T::one() / lambda1.clone();
    let mut power = T::one();
    let mut series = T::zero();
    for j in 0..depth {
        power = power * inv.clone();
        let z = T::embed(innov.z[j], bits);
        series = power.mul_add(&z, &series);
    }
    Ok(LimitY {
        y: head + coeff * series,
        truncation: depth,
    })
}

/// Y at context precision from root metadata.
pub fn y_realization(
    params: &ArParams,
    innov: &Innovations,
    r: &RootInfo,
    ctx: &PrecisionCtx,
) -> Result<LimitY<BigReal>, LimitsError> {
    let (l1, l2) = r.big_lambdas(ctx)?;
    y_realization_in(params, innov, &l1, &l2, ctx.mantissa_bits())
}

/// Limit of `λ₁^{−2n}⟨M⟩_n`: `(Y²/((λ₁²−1)σ²))·[[1, λ₁⁻¹],[λ₁⁻¹, λ₁⁻²]]`.
pub fn limit_quad_char<T: Real>(y: &LimitY<T>, lambda1: &T, sigma: f64) -> Matrix2<T> {
    let bits = y.y.precision_bits();
    let s = T::embed(sigma, bits);
    let l1sq = lambda1.clone() * lambda1.clone();
    let denom = (l1sq.clone() - T::one()) * s.clone() * s;
    let factor = y.y.clone() * y.y.clone() / denom;
    let inv = T::one() / lambda1.clone();
    Matrix2::new(T::one(), inv.clone(), inv.clone(), inv.clone() * inv).scale(&factor)
}

/// Limit of `|λ₁|ⁿA_n`: `(σ√(λ₁²−1)/|Y|)·diag(1, |λ₁|)`.
pub fn limit_an<T: Real>(
    y: &LimitY<T>,
    lambda1: &T,
    sigma: f64,
) -> Result<Matrix2<T>, LimitsError> {
    if y.y.is_zero() {
        return Err(LimitsError::DegenerateY);
    }
    let bits = y.y.precision_bits();
    let s = T::embed(sigma, bits);
    let l1sq = lambda1.clone() * lambda1.clone();
    let factor = s * (l1sq - T::one()).sqrt() / y.y.abs();
    Ok(Matrix2::new(T::one(), T::zero(), T::zero(), lambda1.abs()).scale(&factor))
}

/// Limit of `A_n⟨M⟩_n^{1/2}`:
/// `(1/√(1+λ₁⁻²))·[[1, λ₁⁻¹],[sign λ₁, |λ₁|⁻¹]]`.
pub fn limit_an_sqrt_m<T: Real>(lambda1: &T) -> Matrix2<T> {
    let inv = T::one() / lambda1.clone();
    let factor = T::one() / (T::one() + inv.clone() * inv.clone()).sqrt();
    Matrix2::new(T::one(), inv.clone(), lambda1.signum(), inv.abs()).scale(&factor)
}

/// The distributional limit objects: the ray, the i.i.d. block covariance,
/// the random matrix η, and the contraction P.
#[derive(Debug, Clone)]
pub struct LimitLaw<T> {
    pub ray: Vector2<T>,
    pub innovation_cov: Matrix2<T>,
    pub eta: Matrix2<T>,
    pub p_matrix: Matrix2<T>,
}

pub fn limit_law<T: Real>(
    y: &LimitY<T>,
    lambda1: &T,
    sigma: f64,
) -> Result<LimitLaw<T>, LimitsError> {
    if y.y.is_zero() {
        return Err(LimitsError::DegenerateY);
    }
    let bits = y.y.precision_bits();
    let s = lambda1.signum();
    let l1sq = lambda1.clone() * lambda1.clone();
    let cov_factor = (l1sq.clone() - T::one()) / l1sq.clone();
    let innovation_cov = Matrix2::new(T::one(), s.clone(), s.clone(), T::one()).scale(&cov_factor);
    let eta_factor = y.y.abs() / (T::embed(sigma, bits) * (l1sq - T::one()).sqrt());
    let eta =
        Matrix2::new(T::one(), T::zero(), T::zero(), T::one() / lambda1.abs()).scale(&eta_factor);
    let p_matrix = Matrix2::<T>::identity().scale(&(T::one() / lambda1.clone()));
    Ok(LimitLaw {
        ray: Vector2::new(T::one(), s),
        innovation_cov,
        eta,
        p_matrix,
    })
}

/// Residuals of the stable-limit-theorem conditions measured on one path:
/// (i) `|λ₁|⁻ⁿA_n⁻¹` against η, (iii) `A_nA_{n−r}⁻¹` against `|λ₁|⁻ʳI₂`, and
/// the stochastic-boundedness diagnostic `max_k |λ₁|⁻ᵏ‖M_k‖` for (ii).
#[derive(Debug, Clone, Serialize)]
pub struct MsltConditions {
    pub cond_i_residual: f64,
    pub cond_iii_residual: [f64; 3],
    pub cond_ii_max_scaled_m: f64,
}

/// Every convergence residual checked at the trajectory's horizon.
#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub n: usize,
    pub lambda1: f64,
    pub qc_limit_residual: f64,
    pub det_qc_scaled: f64,
    pub an_limit_residual: f64,
    pub an_sqrt_m_residual: f64,
    pub x_conv_residual: f64,
    pub mslt: MsltConditions,
}

impl LimitReport {
    /// Flat name → value view, for the JSON report.
    pub fn named_residuals(&self) -> Vec<(String, f64)> {
        vec![
            ("qc_limit_residual".into(), self.qc_limit_residual),
            ("det_qc_scaled".into(), self.det_qc_scaled),
            ("an_limit_residual".into(), self.an_limit_residual),
            ("an_sqrt_m_residual".into(), self.an_sqrt_m_residual),
            ("x_conv_residual".into(), self.x_conv_residual),
            ("cond_i_residual".into(), self.mslt.cond_i_residual),
            (
                "cond_iii_residual_r1".into(),
                self.mslt.cond_iii_residual[0],
            ),
            (
                "cond_iii_residual_r2".into(),
                self.mslt.cond_iii_residual[1],
            ),
            (
                "cond_iii_residual_r3".into(),
                self.mslt.cond_iii_residual[2],
            ),
            (
                "cond_ii_max_scaled_m".into(),
                self.mslt.cond_ii_max_scaled_m,
            ),
        ]
    }
}

fn powi<T: Real>(base: &T, n: usize) -> T {
    let mut acc = T::one();
    for _ in 0..n {
        acc = acc * base.clone();
    }
    acc
}

/// Checks conditions (i)–(iii) on a simulated run.
pub fn check_mslt_conditions<T: Real>(
    t: &Trajectory<T>,
    innov: &Innovations,
    y: &LimitY<T>,
    lambda1: &T,
    sigma: f64,
) -> Result<MsltConditions, LimitsError> {
    let n = t.n;
    if n < 4 {
        return Err(LimitsError::NotSupercritical);
    }
    let bits = y.y.precision_bits();
    let sig = T::embed(sigma, bits);
    let abs_l1 = lambda1.abs();
    let inv_abs_l1 = T::one() / abs_l1.clone();

    // prefix sums of squares, prefix martingale, and the running (ii) bound
    let mut s11 = T::zero();
    let mut s22 = T::zero();
    let mut m1 = T::zero();
    let mut m2 = T::zero();
    let inv_var = T::one() / (sig.clone() * sig.clone());
    let mut max_scaled_m: f64 = 0.0;
    let mut scale = T::one(); // |λ₁|⁻ᵏ
    let mut s11_at = [T::zero(), T::zero(), T::zero(), T::zero()]; // n−3..n
    let mut s22_at = s11_at.clone();
    for k in 1..=n as i64 {
        let x1 = t.value(k - 1);
        let x2 = t.value(k - 2);
        s11 = x1.mul_add(x1, &s11);
        s22 = x2.mul_add(x2, &s22);
        let z = T::embed(innov.z[(k - 1) as usize], bits);
        m1 = z.mul_add(x1, &m1);
        m2 = z.mul_add(x2, &m2);
        scale = scale * inv_abs_l1.clone();
        let norm = (m1.abs() + m2.abs()) * inv_var.clone() * scale.clone();
        max_scaled_m = max_scaled_m.max(norm.to_f64());
        let k = k as usize;
        if k + 3 >= n {
            let slot = 3 - (n - k);
            s11_at[slot] = s11.clone();
            s22_at[slot] = s22.clone();
        }
    }

    // condition (i): |λ₁|⁻ⁿ·σ⁻¹·diag(√s11, √s22) against η
    let eta = limit_law(y, lambda1, sigma)?.eta;
    let down = powi(&inv_abs_l1, n);
    let a_inv_11 = down.clone() * s11.sqrt() / sig.clone();
    let a_inv_22 = down * s22.sqrt() / sig.clone();
    let r1 = ((a_inv_11 - eta.m11.clone()).abs() / eta.m11.abs()).to_f64();
    let r2 = ((a_inv_22 - eta.m22.clone()).abs() / eta.m22.abs()).to_f64();
    let cond_i_residual = r1.max(r2);

    // condition (iii): A_nA_{n−r}⁻¹ = diag(√(s11^{n−r}/s11^{n}), ·) → |λ₁|⁻ʳ
    let mut cond_iii_residual = [0.0f64; 3];
    for r in 1..=3usize {
        let ratio1 = (s11_at[3 - r].clone() / s11.clone()).sqrt();
        let ratio2 = (s22_at[3 - r].clone() / s22.clone()).sqrt();
        let target = powi(&inv_abs_l1, r);
        let d1 = ((ratio1 - target.clone()).abs() / target.abs()).to_f64();
        let d2 = ((ratio2 - target.clone()).abs() / target.abs()).to_f64();
        cond_iii_residual[r - 1] = d1.max(d2);
    }

    Ok(MsltConditions {
        cond_i_residual,
        cond_iii_residual,
        cond_ii_max_scaled_m: max_scaled_m,
    })
}

/// Runs the whole battery of limit checks on one replication: simulates a
/// path of length `n`, realizes Y from the same stream, and measures every
/// residual.
pub fn limit_report(
    params: &ArParams,
    r: &RootInfo,
    innov_full: &Innovations,
    n: usize,
    ctx: &PrecisionCtx,
) -> Result<LimitReport, LimitsError> {
    if !r.classification.is_supercritical_distinct_real() {
        return Err(LimitsError::NotSupercritical);
    }
    let (l1, _l2) = r.big_lambdas(ctx)?;
    let y = y_realization(params, innov_full, r, ctx)?;
    if innov_full.len() < n {
        return Err(LimitsError::InsufficientInnovations {
            needed: n,
            available: innov_full.len(),
        });
    }
    let prefix = Innovations {
        z: innov_full.z[..n].to_vec(),
        sigma: innov_full.sigma,
    };
    let t: Trajectory<BigReal> = simulate_path(params, &prefix, ctx.mantissa_bits())?;
    let sigma = params.sigma;
    let sig = ctx.embed(sigma).map_err(ModelError::from)?;
    let inv_var = ctx
        .embed(1.0)
        .map_err(ModelError::from)?
        .try_div(&(sig.clone() * sig))
        .map_err(ModelError::from)?;

    let g = gram_sums(&t);
    let qc = g.matrix().scale(&inv_var);

    // λ₁^{−2n}⟨M⟩_n vs the rank-one limit, entrywise over the (1,1) scale
    let l1sq = l1.clone() * l1.clone();
    let down2n = powi(&(BigReal::one() / l1sq.clone()), n);
    let scaled_qc = qc.scale(&down2n);
    let qc_limit = limit_quad_char(&y, &l1, sigma);
    let qc_limit_residual =
        (scaled_qc.sub(&qc_limit).max_abs() / qc_limit.m11.abs_value()).to_f64();

    // λ₁^{−4n}·det⟨M⟩_n
    let det_qc_scaled = (qc.det() * down2n.clone() * down2n).to_f64();

    // |λ₁|ⁿA_n vs its limit (diagonal)
    let an = crate::estimate::a_n_matrix(&g, sigma)?;
    let up_n = powi(&l1.abs_value(), n);
    let an_scaled = an.scale(&up_n);
    let an_lim = limit_an(&y, &l1, sigma)?;
    let an_limit_residual = {
        let d1 = ((an_scaled.m11.clone() - an_lim.m11.clone()).abs_value()
            / an_lim.m11.abs_value())
        .to_f64();
        let d2 = ((an_scaled.m22.clone() - an_lim.m22.clone()).abs_value()
            / an_lim.m22.abs_value())
        .to_f64();
        d1.max(d2)
    };

    // A_n⟨M⟩_n^{1/2} vs its limit
    let qc_root = sym_sqrt_2x2(&qc)?;
    let an_sqrt = an.mul_mat(&qc_root);
    let an_sqrt_lim = limit_an_sqrt_m(&l1);
    let an_sqrt_m_residual = (an_sqrt.sub(&an_sqrt_lim).max_abs() / an_sqrt_lim.max_abs()).to_f64();

    // λ₁⁻ⁿX_n − Y (signed power: both sides alternate together when λ₁ < 0)
    let down_signed = powi(&(BigReal::one() / l1.clone()), n);
    let x_conv_residual =
        ((t.value(n as i64).clone() * down_signed - y.y.clone()).abs_value()).to_f64();

    let mslt = check_mslt_conditions(&t, &prefix, &y, &l1, sigma)?;

    Ok(LimitReport {
        n,
        lambda1: l1.to_f64(),
        qc_limit_residual,
        det_qc_scaled,
        an_limit_residual,
        an_sqrt_m_residual,
        x_conv_residual,
        mslt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::rel_residual;
    use crate::model::roots;
    use crate::simulate::{gen_innovations, SeedSpec};

    fn big(ctx: &PrecisionCtx, v: f64) -> BigReal {
        ctx.embed(v).unwrap()
    }

    #[test]
    fn zero_innovation_y_matches_direct_formula() {
        let ctx = PrecisionCtx::default();
        let params = ArParams::new(1.0, 3.0, 1.0, 1.0, 0.0).unwrap();
        let r = roots(1.0, 3.0);
        let depth = truncation_depth(800, r.lambda1.unwrap().abs());
        let innov = Innovations::zeros(depth + 1, 1.0);
        let y = y_realization(&params, &innov, &r, &ctx).unwrap();
        // Y = λ₁/(λ₁−λ₂)·1 = (1 + 1/√13)/2
        let (l1, l2) = r.big_lambdas(&ctx).unwrap();
        let expect = l1.clone().try_div(&(l1 - l2)).unwrap();
        assert_eq!(y.y, expect);
        assert!((y.y.to_f64() - 0.6386750490563073).abs() < 1e-12);
    }

    #[test]
    fn zero_start_zero_innovations_give_y_zero() {
        let ctx = PrecisionCtx::default();
        let params = ArParams::zero_start(1.0, 3.0).unwrap();
        let r = roots(1.0, 3.0);
        let innov = Innovations::zeros(1000, 1.0);
        let y = y_realization(&params, &innov, &r, &ctx).unwrap();
        assert!(y.y.is_zero_value());
        assert!(matches!(
            limit_an(&y, &big(&ctx, 2.0), 1.0),
            Err(LimitsError::DegenerateY)
        ));
    }

    #[test]
    fn y_requires_enough_innovations() {
        let ctx = PrecisionCtx::default();
        let params = ArParams::zero_start(1.0, 3.0).unwrap();
        let r = roots(1.0, 3.0);
        let innov = Innovations::zeros(10, 1.0);
        assert!(matches!(
            y_realization(&params, &innov, &r, &ctx),
            Err(LimitsError::InsufficientInnovations { .. })
        ));
    }

    #[test]
    fn scaled_path_converges_to_y() {
        let ctx = PrecisionCtx::default();
        let params = ArParams::zero_start(1.0, 3.0).unwrap();
        let r = roots(1.0, 3.0);
        let depth = truncation_depth(800, r.lambda1.unwrap().abs());
        let innov = gen_innovations(SeedSpec::new(51, 0), depth.max(100), 1.0).unwrap();
        let report = limit_report(&params, &r, &innov, 100, &ctx).unwrap();
        assert!(
            report.x_conv_residual < 1e-20,
            "residual {:e}",
            report.x_conv_residual
        );
    }

    #[test]
    fn limit_quad_char_substitution() {
        let ctx = PrecisionCtx::default();
        let y = LimitY {
            y: big(&ctx, 3.0).try_sqrt().unwrap(),
            truncation: 0,
        };
        let m = limit_quad_char(&y, &big(&ctx, 2.0), 1.0);
        // Y² = 3, λ₁² − 1 = 3 → factor 1
        let expect = Matrix2::new(
            big(&ctx, 1.0),
            big(&ctx, 0.5),
            big(&ctx, 0.5),
            big(&ctx, 0.25),
        );
        assert!(rel_residual(&m, &expect, &big(&ctx, 1.0)) < 1e-230);
        // rank one: determinant vanishes at working precision
        assert!(m.det().abs_value().to_f64() < 1e-230);
    }

    #[test]
    fn limit_an_substitution_and_sigma_scaling() {
        let ctx = PrecisionCtx::default();
        let y = LimitY {
            y: big(&ctx, 3.0).try_sqrt().unwrap(),
            truncation: 0,
        };
        let m = limit_an(&y, &big(&ctx, 2.0), 1.0).unwrap();
        assert!((m.m11.to_f64() - 1.0).abs() < 1e-15);
        assert!((m.m22.to_f64() - 2.0).abs() < 1e-15);
        let doubled = limit_an(&y, &big(&ctx, 2.0), 2.0).unwrap();
        let rel = rel_residual(&doubled, &m.scale(&big(&ctx, 2.0)), &m.max_abs());
        assert!(rel < 1e-230);
    }

    #[test]
    fn an_sqrt_m_limit_times_transpose_is_ray_covariance() {
        let ctx = PrecisionCtx::default();
        for l1 in [2.302776, -2.0, 1.618034] {
            let lam = big(&ctx, l1);
            let m = limit_an_sqrt_m(&lam);
            let cov = m.mul_mat(&m.transpose());
            let s = big(&ctx, l1.signum());
            let expect = Matrix2::new(big(&ctx, 1.0), s.clone(), s, big(&ctx, 1.0));
            let rel = rel_residual(&cov, &expect, &big(&ctx, 1.0));
            assert!(rel < 1e-200, "λ₁={l1}: rel {rel:e}");
        }
    }

    #[test]
    fn an_sqrt_m_substitution_at_two() {
        let ctx = PrecisionCtx::default();
        let m = limit_an_sqrt_m(&big(&ctx, 2.0));
        let f = 1.0 / 1.25f64.sqrt();
        assert!((m.m11.to_f64() - f).abs() < 1e-15);
        assert!((m.m12.to_f64() - 0.5 * f).abs() < 1e-15);
        assert!((m.m21.to_f64() - f).abs() < 1e-15);
        assert!((m.m22.to_f64() - 0.5 * f).abs() < 1e-15);
    }

    #[test]
    fn case_one_residuals_below_tolerance_at_n_100() {
        let ctx = PrecisionCtx::default();
        let params = ArParams::zero_start(1.0, 3.0).unwrap();
        let r = roots(1.0, 3.0);
        let depth = truncation_depth(800, r.lambda1.unwrap().abs());
        let innov = gen_innovations(SeedSpec::new(7, 0), depth.max(100), 1.0).unwrap();
        let rep = limit_report(&params, &r, &innov, 100, &ctx).unwrap();
        assert!(
            rep.qc_limit_residual < 1e-3,
            "qc {:e}",
            rep.qc_limit_residual
        );
        assert!(
            rep.an_limit_residual < 1e-3,
            "an {:e}",
            rep.an_limit_residual
        );
        assert!(
            rep.an_sqrt_m_residual < 1e-3,
            "an√ {:e}",
            rep.an_sqrt_m_residual
        );
        assert!(
            rep.det_qc_scaled.abs() < 1e-6,
            "det {:e}",
            rep.det_qc_scaled
        );
        assert!(
            rep.mslt.cond_i_residual < 1e-3,
            "(i) {:e}",
            rep.mslt.cond_i_residual
        );
        for (i, res) in rep.mslt.cond_iii_residual.iter().enumerate() {
            assert!(*res < 1e-3, "(iii) r={} {:e}", i + 1, res);
        }
        assert!(rep.mslt.cond_ii_max_scaled_m.is_finite());
    }

    #[test]
    fn deterministic_path_cond_iii_decays_geometrically() {
        // zero innovations from (X₀, X₋₁) = (1, 0): residuals shrink like
        // |λ₂/λ₁|ⁿ; allow a factor-10 constant.
        let ctx = PrecisionCtx::default();
        let params = ArParams::new(1.0, 3.0, 1.0, 1.0, 0.0).unwrap();
        let r = roots(1.0, 3.0);
        let ratio = (r.lambda2.unwrap() / r.lambda1.unwrap()).abs();
        let depth = truncation_depth(800, r.lambda1.unwrap().abs());
        let innov = Innovations::zeros(depth.max(64), 1.0);
        let res_at = |n: usize| {
            limit_report(&params, &r, &innov, n, &ctx)
                .unwrap()
                .mslt
                .cond_iii_residual[0]
        };
        let r30 = res_at(30);
        let r40 = res_at(40);
        let decay = r40 / r30;
        let expect = ratio.powi(10);
        assert!(decay < expect * 10.0, "decay {decay:e} vs rate {expect:e}");
        assert!(decay > expect / 10.0, "decay {decay:e} vs rate {expect:e}");
    }

    #[test]
    fn limit_consistency_an_times_sqrt_qc_limit() {
        // limit_An × sym_sqrt(σ²·limit_quad_char)/σ reproduces the
        // A_n⟨M⟩^{1/2} limit structure.
        let ctx = PrecisionCtx::default();
        let sigma = 1.0;
        for l1 in [2.302776f64, -2.0] {
            let lam = big(&ctx, l1);
            let y = LimitY {
                y: big(&ctx, 1.7),
                truncation: 0,
            };
            let an_lim = limit_an(&y, &lam, sigma).unwrap();
            let qc_lim = limit_quad_char(&y, &lam, sigma);
            // ⟨M⟩-limit is rank one, so regularize by the explicit factored
            // square root of a rank-one PSD matrix: (vvᵀ)^{1/2} = vvᵀ/|v|
            let v1 = qc_lim.m11.try_sqrt().unwrap();
            let v2_abs = qc_lim.m22.try_sqrt().unwrap();
            let v2 = if l1 > 0.0 { v2_abs } else { -v2_abs };
            let norm = (v1.clone() * v1.clone() + v2.clone() * v2.clone())
                .try_sqrt()
                .unwrap();
            let outer = Matrix2::new(
                v1.clone() * v1.clone(),
                v1.clone() * v2.clone(),
                v2.clone() * v1.clone(),
                v2.clone() * v2.clone(),
            )
            .scale(&(BigReal::one() / norm));
            let prod = an_lim.mul_mat(&outer);
            let target = limit_an_sqrt_m(&lam);
            let rel = rel_residual(&prod, &target, &target.max_abs());
            assert!(rel < 1e-200, "λ₁={l1}: rel {rel:e}");
        }
    }

    #[test]
    fn limit_law_covariance_normalization() {
        // Σ_j λ₁^{−2j} times the block covariance equals [[1, s], [s, 1]].
        let ctx = PrecisionCtx::default();
        for l1 in [2.302776f64, -2.0, 1.618034] {
            let lam = big(&ctx, l1);
            let y = LimitY {
                y: big(&ctx, 0.9),
                truncation: 0,
            };
            let law = limit_law(&y, &lam, 1.0).unwrap();
            // geometric sum Σ λ₁^{−2j} = λ₁²/(λ₁²−1)
            let l1sq = lam.clone() * lam.clone();
            let gsum = l1sq.clone().try_div(&(l1sq - big(&ctx, 1.0))).unwrap();
            let normalized = law.innovation_cov.scale(&gsum);
            let s = big(&ctx, l1.signum());
            let expect = Matrix2::new(big(&ctx, 1.0), s.clone(), s, big(&ctx, 1.0));
            assert!(rel_residual(&normalized, &expect, &big(&ctx, 1.0)) < 1e-200);
        }
    }

    #[test]
    fn limit_evaluation_is_deterministic() {
        let ctx = PrecisionCtx::default();
        let r = roots(1.0, 3.0);
        let (a1, a2) = r.big_lambdas(&ctx).unwrap();
        let (b1, b2) = r.big_lambdas(&ctx).unwrap();
        assert_eq!(a1, b1);
        assert_eq!(a2, b2);
        let m1 = limit_an_sqrt_m(&a1);
        let m2 = limit_an_sqrt_m(&b1);
        assert_eq!(m1, m2);
        let _ = (a2, b2);
    }

    #[test]
    fn non_supercritical_inputs_are_refused() {
        let ctx = PrecisionCtx::default();
        let params = ArParams::zero_start(0.5, 0.0).unwrap();
        let r = roots(0.5, 0.0);
        let innov = Innovations::zeros(4000, 1.0);
        assert!(matches!(
            y_realization(&params, &innov, &r, &ctx),
            Err(LimitsError::NotSupercritical) | Err(LimitsError::Model(_))
        ));
    }
}
