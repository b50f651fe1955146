//! Descriptive statistics and normality testing on double-precision
//! samples. The scaled errors feeding these routines are O(1), so the
//! pipeline down-converts from the high-precision scalars before testing.

mod normality;
mod special;

pub use normality::{
    ad_test, jb_statistic, jb_test, ks_test, pearson_bins, pearson_chi2_test, TestName, TestReport,
    TestVariant,
};
pub use special::{
    anderson_darling_cdf, anderson_darling_composite_pvalue, chi2_quantile_1df, chi2_quantile_2df,
    chi2_sf, kolmogorov_sf, ln_gamma, normal_cdf, normal_pdf, normal_quantile, reg_gamma_p,
    reg_gamma_q,
};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("sample of {got} is too small, need at least {needed}")]
    TooSmallSample { needed: usize, got: usize },
    #[error("degenerate sample: zero variance")]
    DegenerateSample,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("probability {0} outside (0, 1)")]
    BadProbability(f64),
    #[error("sample contains a non-finite value")]
    NonFiniteSample,
}

/// Mean, (n−1)-divisor variance, R-7 median/IQR, and moment skewness and
/// non-excess kurtosis (theoretical normal value 3).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DescriptiveStats {
    pub mean: f64,
    pub variance: f64,
    pub median: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub iqr: f64,
    pub n: usize,
}

/// Central moments (mean, m₂, m₃, m₄) with divisor n.
pub fn central_moments(sample: &[f64]) -> (f64, f64, f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in sample {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (mean, m2 / n, m3 / n, m4 / n)
}

/// Linearly interpolated quantile, R-7 convention: h = (n−1)p on the sorted
/// sample.
pub fn quantile_r7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n >= 1 && (0.0..=1.0).contains(&p));
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

pub fn descriptive(sample: &[f64]) -> Result<DescriptiveStats, StatsError> {
    let n = sample.len();
    if n < 4 {
        return Err(StatsError::TooSmallSample { needed: 4, got: n });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFiniteSample);
    }
    let (mean, m2, m3, m4) = central_moments(sample);
    if m2 <= 0.0 {
        // kurtosis is undefined on a constant sample
        return Err(StatsError::DegenerateSample);
    }
    let variance = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let median = quantile_r7(&s, 0.5);
    let iqr = quantile_r7(&s, 0.75) - quantile_r7(&s, 0.25);
    Ok(DescriptiveStats {
        mean,
        variance,
        median,
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
        iqr,
        n,
    })
}

/// Sample covariance with divisor n−1.
pub fn covariance(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(StatsError::TooSmallSample { needed: 2, got: n });
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let acc: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    Ok(acc / (n - 1) as f64)
}
