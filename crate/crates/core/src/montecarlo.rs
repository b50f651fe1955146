//! Replicated experiments: per-case Monte Carlo runs, aggregation into the
//! summary tables, histogram data, and the confidence-region coverage
//! experiment.
//!
//! Replications are embarrassingly parallel; each one owns its innovation
//! stream (derived from `(master_seed, replication_index)`) and its own
//! high-precision pipeline. Aggregation always happens in replication-index
//! order, so a run is bit-identical regardless of worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::{
    a_n_matrix, confidence_contains, gram_sums, lse, martingale, scaled_error, sqrt_scaled_error,
    sym_sqrt_2x2, EstimateError,
};
use crate::limits::LimitsError;
use crate::mat2::Vector2;
use crate::model::{roots, ArParams, ModelError, RootInfo};
use crate::numerics::{BigReal, NumericsError, PrecisionCtx, Real, DEFAULT_MANTISSA_BITS};
use crate::simulate::{gen_innovations, simulate_path, SeedSpec, SimulateError};
use crate::stats::{
    ad_test, covariance, descriptive, jb_test, ks_test, pearson_chi2_test, DescriptiveStats,
    StatsError, TestReport, TestVariant,
};

/// Default master seed for the documented experiment runs.
pub const DEFAULT_MASTER_SEED: u64 = 42;

/// The four demonstration parameter pairs: purely explosive, partially
/// explosive, and the two unit-root-on-the-second-coordinate cases.
pub const CASE_PARAMS: [(f64, f64); 4] = [(1.0, 3.0), (1.0, 1.0), (-1.0, 2.0), (-3.0, -2.0)];

pub fn case_params(case: usize) -> Option<(f64, f64)> {
    CASE_PARAMS.get(case.checked_sub(1)?).copied()
}

#[derive(Debug, Error)]
pub enum MonteCarloError {
    #[error("experiment requires supercritical parameters with distinct real roots")]
    NonSupercriticalCase,
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Limits(#[from] LimitsError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

fn default_sigma() -> f64 {
    1.0
}
fn default_n() -> usize {
    100
}
fn default_reps() -> usize {
    1000
}
fn default_seed() -> u64 {
    DEFAULT_MASTER_SEED
}
fn default_bits() -> u32 {
    DEFAULT_MANTISSA_BITS
}
fn default_alpha() -> f64 {
    0.05
}

/// One experiment: a parameter pair, trajectory length, replication count,
/// seed, precision, and confidence level. Doubles as the JSON config-file
/// schema; every field has a default except the two AR coefficients.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub theta1: f64,
    pub theta2: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub x_neg1: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_bits")]
    pub mantissa_bits: u32,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl ExperimentConfig {
    pub fn for_case(case: usize) -> Option<Self> {
        let (theta1, theta2) = case_params(case)?;
        Some(ExperimentConfig {
            theta1,
            theta2,
            sigma: default_sigma(),
            x0: 0.0,
            x_neg1: 0.0,
            n: default_n(),
            reps: default_reps(),
            master_seed: default_seed(),
            mantissa_bits: default_bits(),
            alpha: default_alpha(),
        })
    }

    pub fn params(&self) -> Result<ArParams, ModelError> {
        ArParams::new(self.theta1, self.theta2, self.sigma, self.x0, self.x_neg1)
    }

    pub fn precision(&self) -> Result<PrecisionCtx, NumericsError> {
        PrecisionCtx::new(self.mantissa_bits)
    }

    pub fn validate(&self) -> Result<(), MonteCarloError> {
        self.params()?;
        self.precision()?;
        if self.reps < 1 {
            return Err(MonteCarloError::BadConfig("reps must be at least 1".into()));
        }
        if self.n < 3 {
            return Err(MonteCarloError::BadConfig(
                "trajectory length n must be at least 3".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(MonteCarloError::BadConfig(format!(
                "alpha {} outside (0, 1)",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn root_info(&self) -> RootInfo {
        roots(self.theta1, self.theta2)
    }
}

/// Everything recorded about one replication. Decimal strings carry the
/// full 25-significant-digit values for the CSV export; the `f64` mirrors
/// feed the aggregates.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicationRecord {
    pub rep_index: usize,
    pub gram_ok: bool,
    pub theta_hat: (f64, f64),
    pub scaled_error: (f64, f64),
    pub sqrt_scaled_error: (f64, f64),
    pub collinearity_gap: f64,
    pub covered: bool,
    pub decomp_residual: f64,
    pub factorization_residual: f64,
    pub sym_sqrt_residual: f64,
    pub decimals: ReplicationDecimals,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicationDecimals {
    pub theta_hat1: String,
    pub theta_hat2: String,
    pub e1: String,
    pub e2: String,
    pub det_g: String,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SqrtScaledSummary {
    pub variance_1: f64,
    pub variance_2: f64,
    pub cross_covariance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub density: f64,
}

/// Aggregated results of one case.
#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub config: ExperimentConfig,
    pub lambda1: f64,
    pub lambda2: f64,
    pub classification: String,
    pub reps_used: usize,
    pub gram_failures: usize,
    pub mean_estimates: (f64, f64),
    /// None when the run is too small or degenerate for the statistics.
    pub descriptive: Option<DescriptiveStats>,
    pub covariance_e1e2: Option<f64>,
    pub tests: Vec<TestReport>,
    pub histogram: Vec<HistogramBin>,
    pub coverage: f64,
    pub collinearity_max: f64,
    pub decomp_residual_max: f64,
    pub factorization_residual_max: f64,
    pub sym_sqrt_residual_max: f64,
    pub sqrt_scaled: Option<SqrtScaledSummary>,
    pub degenerate: bool,
}

fn failed_record(rep_index: usize) -> ReplicationRecord {
    ReplicationRecord {
        rep_index,
        gram_ok: false,
        theta_hat: (f64::NAN, f64::NAN),
        scaled_error: (f64::NAN, f64::NAN),
        sqrt_scaled_error: (f64::NAN, f64::NAN),
        collinearity_gap: f64::NAN,
        covered: false,
        decomp_residual: f64::NAN,
        factorization_residual: f64::NAN,
        sym_sqrt_residual: f64::NAN,
        decimals: ReplicationDecimals {
            theta_hat1: String::new(),
            theta_hat2: String::new(),
            e1: String::new(),
            e2: String::new(),
            det_g: String::new(),
        },
    }
}

fn rel_gap<T: Real>(a: &Vector2<T>, b: &Vector2<T>) -> f64 {
    let d = a.sub(b).max_abs();
    let scale = a.max_abs();
    if scale.is_zero() {
        return if d.is_zero() { 0.0 } else { f64::INFINITY };
    }
    (d / scale).to_f64()
}

/// Positive-definiteness can be lost anywhere in the replication when the
/// mantissa is too narrow for the Gram cancellation, not just at the first
/// determinant test; all such outcomes count as the same failure.
fn is_gram_failure(e: &MonteCarloError) -> bool {
    matches!(
        e,
        MonteCarloError::Estimate(EstimateError::SingularGram)
            | MonteCarloError::Estimate(EstimateError::NotPositiveDefinite)
    )
}

fn run_replication(
    cfg: &ExperimentConfig,
    r: &RootInfo,
    rep_index: usize,
) -> Result<ReplicationRecord, MonteCarloError> {
    match run_replication_inner(cfg, r, rep_index) {
        Ok(record) => Ok(record),
        Err(e) if is_gram_failure(&e) => Ok(failed_record(rep_index)),
        Err(e) => Err(e),
    }
}

fn run_replication_inner(
    cfg: &ExperimentConfig,
    r: &RootInfo,
    rep_index: usize,
) -> Result<ReplicationRecord, MonteCarloError> {
    let params = cfg.params()?;
    let bits = cfg.mantissa_bits;
    let seed = SeedSpec::new(cfg.master_seed, rep_index as u64);
    let innov = gen_innovations(seed, cfg.n, cfg.sigma)?;
    let t = simulate_path::<BigReal>(&params, &innov, bits)?;
    let g = gram_sums(&t);
    let est = lse(g)?;
    let e = scaled_error(&est, &params)?;
    let mstate = martingale(&t, &innov, bits)?;

    // decomposition (ϑ̂ − ϑ) = ⟨M⟩⁻¹M
    let direct = Vector2::new(
        est.theta_hat1.clone() - BigReal::embed(params.theta1, bits),
        est.theta_hat2.clone() - BigReal::embed(params.theta2, bits),
    );
    let via_martingale = mstate.normalized_increment()?;
    let decomp_residual = rel_gap(&direct, &via_martingale);

    // factorization: scaled error = σ·A_n·M_n
    let an = a_n_matrix(&est.gram, cfg.sigma)?;
    let anm = an
        .mul_vec(&mstate.m)
        .scale(&BigReal::embed(cfg.sigma, bits));
    let evec = Vector2::new(e.e1.clone(), e.e2.clone());
    let factorization_residual = rel_gap(&evec, &anm);

    // (sym_sqrt G)² = G on this replication's Gram matrix
    let gm = est.gram.matrix();
    let root = sym_sqrt_2x2(&gm)?;
    let back = root.mul_mat(&root);
    let sym_sqrt_residual = (back.sub(&gm).max_abs() / gm.max_abs()).to_f64();

    let sq = sqrt_scaled_error(&mstate, &est, &params, cfg.sigma)?;
    let sign = r.sign_lambda1().map_err(MonteCarloError::Model)?;
    let sign_big = BigReal::embed(sign, bits);
    let gap = (e.e1.clone() - sign_big * e.e2.clone())
        .abs_value()
        .to_f64();
    let covered = confidence_contains(&est, cfg.sigma, cfg.alpha, (params.theta1, params.theta2))?;

    let dec = |v: &BigReal| v.to_decimal(25).expect("25 digits within range");
    Ok(ReplicationRecord {
        rep_index,
        gram_ok: true,
        theta_hat: (est.theta_hat1.to_f64(), est.theta_hat2.to_f64()),
        scaled_error: (e.e1.to_f64(), e.e2.to_f64()),
        sqrt_scaled_error: (sq.v1.to_f64(), sq.v2.to_f64()),
        collinearity_gap: gap,
        covered,
        decomp_residual,
        factorization_residual,
        sym_sqrt_residual,
        decimals: ReplicationDecimals {
            theta_hat1: dec(&est.theta_hat1),
            theta_hat2: dec(&est.theta_hat2),
            e1: dec(&e.e1),
            e2: dec(&e.e2),
            det_g: dec(&est.det_g),
        },
    })
}

/// Runs all replications of a case on the current rayon pool, in
/// deterministic index order.
pub fn run_replications(cfg: &ExperimentConfig) -> Result<Vec<ReplicationRecord>, MonteCarloError> {
    cfg.validate()?;
    let r = cfg.root_info();
    if !r.classification.is_supercritical_distinct_real() {
        return Err(MonteCarloError::NonSupercriticalCase);
    }
    (0..cfg.reps)
        .into_par_iter()
        .map(|i| run_replication(cfg, &r, i))
        .collect()
}

/// One replication by index: the full estimation pipeline on the stream
/// `SeedSpec(master_seed, rep_index)`.
pub fn single_replication(
    cfg: &ExperimentConfig,
    rep_index: usize,
) -> Result<ReplicationRecord, MonteCarloError> {
    cfg.validate()?;
    let r = cfg.root_info();
    if !r.classification.is_supercritical_distinct_real() {
        return Err(MonteCarloError::NonSupercriticalCase);
    }
    run_replication(cfg, &r, rep_index)
}

/// Density histogram bin rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinRule {
    /// Width 2·IQR·n^(−1/3), bins aligned so that 0 is an edge.
    FreedmanDiaconis,
}

/// Density-normalized histogram: Σ density·width = 1; interior empty bins
/// are reported with density 0.
pub fn histogram(sample: &[f64], rule: BinRule) -> Result<Vec<HistogramBin>, StatsError> {
    let n = sample.len();
    if n < 10 {
        return Err(StatsError::TooSmallSample { needed: 10, got: n });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFiniteSample);
    }
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let BinRule::FreedmanDiaconis = rule;
    let iqr = crate::stats::quantile_r7(&s, 0.75) - crate::stats::quantile_r7(&s, 0.25);
    if iqr <= 0.0 {
        return Err(StatsError::DegenerateSample);
    }
    let width = 2.0 * iqr * (n as f64).powf(-1.0 / 3.0);
    let min = s[0];
    let max = s[n - 1];
    let first = (min / width).floor();
    let count = ((max / width).floor() - first) as usize + 1;
    let mut counts = vec![0usize; count];
    for x in &s {
        let mut idx = ((x / width).floor() - first) as usize;
        if idx >= count {
            idx = count - 1;
        }
        counts[idx] += 1;
    }
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let left = (first + i as f64) * width;
            HistogramBin {
                left,
                right: left + width,
                density: c as f64 / (n as f64 * width),
            }
        })
        .collect())
}

fn aggregate(cfg: &ExperimentConfig, records: &[ReplicationRecord]) -> CaseReport {
    let r = cfg.root_info();
    let ok: Vec<&ReplicationRecord> = records.iter().filter(|rec| rec.gram_ok).collect();
    let reps_used = ok.len();
    let gram_failures = records.len() - reps_used;

    let mean_estimates = if reps_used > 0 {
        (
            ok.iter().map(|rec| rec.theta_hat.0).sum::<f64>() / reps_used as f64,
            ok.iter().map(|rec| rec.theta_hat.1).sum::<f64>() / reps_used as f64,
        )
    } else {
        (f64::NAN, f64::NAN)
    };

    let e1: Vec<f64> = ok.iter().map(|rec| rec.scaled_error.0).collect();
    let e2: Vec<f64> = ok.iter().map(|rec| rec.scaled_error.1).collect();

    let descriptive_stats = descriptive(&e1).ok();
    let covariance_e1e2 = covariance(&e1, &e2).ok();
    let hist = histogram(&e1, BinRule::FreedmanDiaconis).unwrap_or_default();

    let mut tests = Vec::new();
    if let Ok(t) = ks_test(&e1, TestVariant::EstimatedParams) {
        tests.push(t);
    }
    if let Ok(t) = ks_test(&e1, TestVariant::FullySpecifiedN01) {
        tests.push(t);
    }
    if let Ok(t) = pearson_chi2_test(&e1) {
        tests.push(t);
    }
    if let Ok(t) = ad_test(&e1, TestVariant::EstimatedParams) {
        tests.push(t);
    }
    if let Ok(t) = jb_test(&e1) {
        tests.push(t);
    }

    let coverage = if reps_used > 0 {
        ok.iter().filter(|rec| rec.covered).count() as f64 / reps_used as f64
    } else {
        0.0
    };

    let fold_max =
        |f: fn(&ReplicationRecord) -> f64| ok.iter().map(|rec| f(rec)).fold(0.0f64, f64::max);

    let sq1: Vec<f64> = ok.iter().map(|rec| rec.sqrt_scaled_error.0).collect();
    let sq2: Vec<f64> = ok.iter().map(|rec| rec.sqrt_scaled_error.1).collect();
    let sqrt_scaled = if reps_used >= 4 {
        let v1 = descriptive(&sq1).map(|d| d.variance);
        let v2 = descriptive(&sq2).map(|d| d.variance);
        let cc = covariance(&sq1, &sq2);
        match (v1, v2, cc) {
            (Ok(variance_1), Ok(variance_2), Ok(cross_covariance)) => Some(SqrtScaledSummary {
                variance_1,
                variance_2,
                cross_covariance,
            }),
            _ => None,
        }
    } else {
        None
    };

    let degenerate = descriptive_stats.is_none() || tests.is_empty();
    CaseReport {
        config: *cfg,
        lambda1: r.lambda1.unwrap_or(f64::NAN),
        lambda2: r.lambda2.unwrap_or(f64::NAN),
        classification: format!("{:?}", r.classification),
        reps_used,
        gram_failures,
        mean_estimates,
        descriptive: descriptive_stats,
        covariance_e1e2,
        tests,
        histogram: hist,
        coverage,
        collinearity_max: fold_max(|rec| rec.collinearity_gap),
        decomp_residual_max: fold_max(|rec| rec.decomp_residual),
        factorization_residual_max: fold_max(|rec| rec.factorization_residual),
        sym_sqrt_residual_max: fold_max(|rec| rec.sym_sqrt_residual),
        sqrt_scaled,
        degenerate,
    }
}

/// Runs a full case and aggregates it. Deterministic for a fixed config,
/// independent of worker count.
pub fn run_case(cfg: &ExperimentConfig) -> Result<CaseReport, MonteCarloError> {
    let records = run_replications(cfg)?;
    Ok(aggregate(cfg, &records))
}

/// Fraction of replications whose confidence region contains the true
/// parameter pair.
pub fn coverage_experiment(cfg: &ExperimentConfig) -> Result<f64, MonteCarloError> {
    let records = run_replications(cfg)?;
    let ok: Vec<&ReplicationRecord> = records.iter().filter(|rec| rec.gram_ok).collect();
    if ok.is_empty() {
        return Ok(0.0);
    }
    Ok(ok.iter().filter(|rec| rec.covered).count() as f64 / ok.len() as f64)
}

/// Per-replication CSV: `rep,theta_hat1,theta_hat2,e1,e2,det_g` at 25
/// significant digits. Replications with a failed Gram condition are
/// excluded (they carry no estimate).
pub fn replications_csv(records: &[ReplicationRecord]) -> String {
    let mut out = String::from("rep,theta_hat1,theta_hat2,e1,e2,det_g\n");
    for rec in records.iter().filter(|rec| rec.gram_ok) {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rec.rep_index,
            rec.decimals.theta_hat1,
            rec.decimals.theta_hat2,
            rec.decimals.e1,
            rec.decimals.e2,
            rec.decimals.det_g,
        ));
    }
    out
}

/// Histogram CSV: `bin_left,bin_right,density`.
pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_left,bin_right,density\n");
    for b in bins {
        out.push_str(&format!("{},{},{}\n", b.left, b.right, b.density));
    }
    out
}

/// Roots-and-estimator-means table (one row per case).
pub fn table_estimates_csv(reports: &[CaseReport]) -> String {
    let mut out = String::from("theta1,theta2,lambda1,lambda2,mean_theta_hat1,mean_theta_hat2\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6}\n",
            r.config.theta1,
            r.config.theta2,
            r.lambda1,
            r.lambda2,
            r.mean_estimates.0,
            r.mean_estimates.1,
        ));
    }
    out
}

/// Descriptive-statistics table for the scaled errors.
pub fn table_descriptive_csv(reports: &[CaseReport]) -> String {
    let mut out =
        String::from("theta1,theta2,mean,variance,median,skewness,kurtosis,iqr,covariance\n");
    for r in reports {
        match (&r.descriptive, r.covariance_e1e2) {
            (Some(d), Some(cov)) => out.push_str(&format!(
                "{},{},{:.5},{:.5},{:.5},{:.5},{:.5},{:.5},{:.5}\n",
                r.config.theta1,
                r.config.theta2,
                d.mean,
                d.variance,
                d.median,
                d.skewness,
                d.kurtosis,
                d.iqr,
                cov,
            )),
            _ => out.push_str(&format!("{},{},,,,,,,\n", r.config.theta1, r.config.theta2)),
        }
    }
    out
}

/// Normality-test p-value table.
pub fn table_tests_csv(reports: &[CaseReport]) -> String {
    let mut out = String::from("theta1,theta2,ks,ks_n01,pcs,ad,jb\n");
    for r in reports {
        let find = |name: crate::stats::TestName| {
            r.tests
                .iter()
                .find(|t| t.test == name)
                .map(|t| format!("{:.4}", t.p_value))
                .unwrap_or_default()
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.config.theta1,
            r.config.theta2,
            find(crate::stats::TestName::Ks),
            find(crate::stats::TestName::KsN01),
            find(crate::stats::TestName::Pcs),
            find(crate::stats::TestName::Ad),
            find(crate::stats::TestName::Jb),
        ));
    }
    out
}
