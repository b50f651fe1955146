//! Acceptance suite: every exit criterion of the laboratory, one test per
//! criterion, each printing a PASS/FAIL line (run with `--nocapture` to see
//! them). The four demonstration cases run once (1000 replications of
//! 102-value trajectories at 800 bits each) and are shared across criteria.

use std::sync::LazyLock;

use ar2lab_core::mat2::{rel_residual, Matrix2};
use ar2lab_core::model::{companion_matrix, companion_power, roots};
use ar2lab_core::montecarlo::{
    replications_csv, run_case, run_replications, CaseReport, ExperimentConfig, CASE_PARAMS,
    DEFAULT_MASTER_SEED,
};
use ar2lab_core::simulate::{gen_innovations, SeedSpec};
use ar2lab_core::stats::{chi2_quantile_2df, ks_test, TestVariant};
use ar2lab_core::{BigMatrix2, BigReal, PrecisionCtx};

static CASES: LazyLock<Vec<CaseReport>> = LazyLock::new(|| {
    (1..=4)
        .map(|case| {
            let cfg = ExperimentConfig::for_case(case).expect("case in 1..=4");
            run_case(&cfg).expect("case run succeeds")
        })
        .collect()
});

fn report_line(criterion: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {criterion}: {verdict} | {detail}");
    assert!(pass, "{criterion} failed: {detail}");
}

#[test]
fn criterion_01_roots_match_reported_values() {
    let expected = [
        (2.302776, -1.302776),
        (1.618034, -0.618034),
        (-2.0, 1.0),
        (-2.0, -1.0),
    ];
    let mut detail = String::new();
    let mut pass = true;
    for ((t1, t2), (l1_ref, l2_ref)) in CASE_PARAMS.iter().zip(expected) {
        let r = roots(*t1, *t2);
        let (l1, l2) = (r.lambda1.unwrap(), r.lambda2.unwrap());
        let ok = (l1 - l1_ref).abs() < 1e-6 && (l2 - l2_ref).abs() < 1e-6;
        pass &= ok;
        detail.push_str(&format!("({t1},{t2})→({l1:.6},{l2:.6}) "));
    }
    report_line("criterion 1 (characteristic roots to 1e-6)", pass, &detail);
}

#[test]
fn criterion_02_estimator_consistency() {
    let mut detail = String::new();
    let mut pass = true;
    for rep in CASES.iter() {
        let (m1, m2) = rep.mean_estimates;
        let d1 = (m1 - rep.config.theta1).abs();
        let d2 = (m2 - rep.config.theta2).abs();
        let ok = d1 <= 0.05 && d2 <= 0.05 && rep.gram_failures == 0;
        pass &= ok;
        detail.push_str(&format!(
            "({},{}): mean=({m1:.6},{m2:.6}) dev=({d1:.4},{d2:.4}) grams_failed={} ",
            rep.config.theta1, rep.config.theta2, rep.gram_failures
        ));
    }
    report_line("criterion 2 (mean estimates within ±0.05)", pass, &detail);
}

#[test]
fn criterion_03_scaled_error_law() {
    let mut detail = String::new();
    let mut pass = true;
    for rep in CASES.iter() {
        let d = rep.descriptive.expect("descriptive stats available");
        let cov = rep.covariance_e1e2.expect("covariance available");
        let sign = rep.lambda1.signum();
        let ok = (-0.1..=0.1).contains(&d.mean)
            && (0.85..=1.15).contains(&d.variance)
            && (-0.12..=0.12).contains(&d.median)
            && d.skewness.abs() <= 0.25
            && (2.6..=3.5).contains(&d.kurtosis)
            && (1.23..=1.47).contains(&d.iqr)
            && (cov - sign).abs() <= 0.12;
        pass &= ok;
        detail.push_str(&format!(
            "({},{}): mean={:.4} var={:.4} med={:.4} skew={:.4} kurt={:.4} iqr={:.4} cov={:.4} [{}] ",
            rep.config.theta1,
            rep.config.theta2,
            d.mean,
            d.variance,
            d.median,
            d.skewness,
            d.kurtosis,
            d.iqr,
            cov,
            if ok { "ok" } else { "out of band" },
        ));
    }
    report_line(
        "criterion 3 (scaled-error law, moment and quantile bands)",
        pass,
        &detail,
    );
}

#[test]
fn criterion_04_collinearity_of_the_limit_ray() {
    let mut detail = String::new();
    let mut pass = true;
    for rep in CASES.iter() {
        let ok = rep.collinearity_max < 1e-20;
        pass &= ok;
        detail.push_str(&format!(
            "({},{}): max|e1−sign(λ₁)e2|={:.3e} [{}] ",
            rep.config.theta1,
            rep.config.theta2,
            rep.collinearity_max,
            if ok { "ok" } else { "exceeds 1e-20" },
        ));
    }
    report_line(
        "criterion 4 (collinearity gap < 1e-20, every replication)",
        pass,
        &detail,
    );
}

#[test]
fn criterion_05_exact_algebraic_identities() {
    let bound = 2f64.powi(-650);
    let mut detail = String::new();
    let mut pass = true;
    for rep in CASES.iter() {
        let ok = rep.decomp_residual_max < bound
            && rep.factorization_residual_max < bound
            && rep.sym_sqrt_residual_max < bound;
        pass &= ok;
        detail.push_str(&format!(
            "({},{}): decomp={:.2e} factor={:.2e} symsqrt={:.2e} ",
            rep.config.theta1,
            rep.config.theta2,
            rep.decomp_residual_max,
            rep.factorization_residual_max,
            rep.sym_sqrt_residual_max,
        ));
    }

    // companion power against repeated multiplication, n ≤ 120
    let ctx = PrecisionCtx::default();
    let r = roots(1.0, 3.0);
    let base: BigMatrix2 = companion_matrix(1.0, 3.0, ctx.mantissa_bits());
    let mut acc: BigMatrix2 = Matrix2::<BigReal>::identity();
    let mut worst: f64 = 0.0;
    for n in 1..=120u32 {
        acc = acc.mul_mat(&base);
        let closed = companion_power(&r, n, &ctx).unwrap();
        let scale = acc.max_abs();
        worst = worst.max(rel_residual(&closed, &acc, &scale));
    }
    let companion_ok = worst < 2f64.powi(-700);
    pass &= companion_ok;
    detail.push_str(&format!("companion(n≤120)={worst:.2e}"));
    report_line(
        "criterion 5 (identities < 2^-650 every replication; companion < 2^-700)",
        pass,
        &detail,
    );
}

#[test]
fn criterion_06_limit_convergence_case_one() {
    let ctx = PrecisionCtx::default();
    let cfg = ExperimentConfig::for_case(1).unwrap();
    let params = cfg.params().unwrap();
    let r = cfg.root_info();
    let depth = ar2lab_core::limits::truncation_depth(800, r.lambda1.unwrap().abs());
    let innov = gen_innovations(
        SeedSpec::new(DEFAULT_MASTER_SEED, 0),
        depth.max(cfg.n),
        cfg.sigma,
    )
    .unwrap();
    let rep = ar2lab_core::limits::limit_report(&params, &r, &innov, cfg.n, &ctx).unwrap();
    let pass = rep.qc_limit_residual < 1e-3
        && rep.an_limit_residual < 1e-3
        && rep.an_sqrt_m_residual < 1e-3
        && rep.mslt.cond_i_residual < 1e-3
        && rep.mslt.cond_iii_residual.iter().all(|x| *x < 1e-3)
        && rep.det_qc_scaled.abs() < 1e-6;
    let detail = format!(
        "qc={:.2e} an={:.2e} an√M={:.2e} (i)={:.2e} (iii)=({:.2e},{:.2e},{:.2e}) det={:.2e} x→Y={:.2e}",
        rep.qc_limit_residual,
        rep.an_limit_residual,
        rep.an_sqrt_m_residual,
        rep.mslt.cond_i_residual,
        rep.mslt.cond_iii_residual[0],
        rep.mslt.cond_iii_residual[1],
        rep.mslt.cond_iii_residual[2],
        rep.det_qc_scaled,
        rep.x_conv_residual,
    );
    report_line(
        "criterion 6 (limit residuals at n=100, Case 1)",
        pass,
        &detail,
    );
}

#[test]
fn criterion_07_normality_tests_accept_and_ks_is_calibrated() {
    let mut detail = String::new();
    let mut pass = true;
    for rep in CASES.iter() {
        assert_eq!(rep.tests.len(), 5, "all five test reports expected");
        let worst = rep
            .tests
            .iter()
            .map(|t| t.p_value)
            .fold(f64::INFINITY, f64::min);
        let ok = worst >= 0.01;
        pass &= ok;
        detail.push_str(&format!(
            "({},{}): min-p={:.4} ",
            rep.config.theta1, rep.config.theta2, worst
        ));
    }

    // calibration of the fully specified KS p-value under the null
    let mut rejections = 0usize;
    let trials = 200usize;
    for i in 0..trials {
        let sample = gen_innovations(SeedSpec::new(777, i as u64), 1000, 1.0)
            .unwrap()
            .z;
        let t = ks_test(&sample, TestVariant::FullySpecifiedN01).unwrap();
        if t.p_value < 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / trials as f64;
    let calibrated = (0.02..=0.09).contains(&rate);
    pass &= calibrated;
    detail.push_str(&format!("KS-N01 rejection rate at 5%: {rate:.3}"));
    report_line(
        "criterion 7 (all tests accept at 1%; KS calibrated under H0)",
        pass,
        &detail,
    );
}

#[test]
fn criterion_08_confidence_region_coverage() {
    let mut detail = String::new();
    let mut pass = true;
    for rep in CASES.iter().take(2) {
        let ok = (0.92..=0.97).contains(&rep.coverage);
        pass &= ok;
        detail.push_str(&format!(
            "({},{}): coverage={:.4} ",
            rep.config.theta1, rep.config.theta2, rep.coverage
        ));
    }
    let q = chi2_quantile_2df(0.95).unwrap();
    let q_ok = (q - 5.991465).abs() < 1e-6;
    pass &= q_ok;
    detail.push_str(&format!("χ²₀.₉₅(2)={q:.6}"));
    report_line(
        "criterion 8 (coverage in [0.92, 0.97], Cases 1-2; χ² quantile)",
        pass,
        &detail,
    );
}

#[test]
fn criterion_09_sqrt_gram_scaled_errors() {
    let mut detail = String::new();
    let mut pass = true;
    for rep in CASES.iter().take(2) {
        let s = rep.sqrt_scaled.expect("sqrt-scaled summary available");
        let ok = (0.85..=1.15).contains(&s.variance_1)
            && (0.85..=1.15).contains(&s.variance_2)
            && s.cross_covariance.abs() < 0.1;
        pass &= ok;
        detail.push_str(&format!(
            "({},{}): var=({:.4},{:.4}) cross={:.4} ",
            rep.config.theta1, rep.config.theta2, s.variance_1, s.variance_2, s.cross_covariance
        ));
    }
    report_line(
        "criterion 9 (Gram-square-root scaled errors near N2(0, I2))",
        pass,
        &detail,
    );
}

#[test]
fn criterion_10_determinism_across_reruns_and_worker_counts() {
    let cfg = ExperimentConfig::for_case(1).unwrap();
    let reference = {
        let records = run_replications(&cfg).unwrap();
        let report = run_case(&cfg).unwrap();
        (
            replications_csv(&records),
            serde_json::to_string(&report).unwrap(),
        )
    };
    let mut pass = true;
    for workers in [1usize, 2, 5] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap();
        let (csv, json) = pool.install(|| {
            let records = run_replications(&cfg).unwrap();
            let report = run_case(&cfg).unwrap();
            (
                replications_csv(&records),
                serde_json::to_string(&report).unwrap(),
            )
        });
        pass &= csv == reference.0 && json == reference.1;
    }
    report_line(
        "criterion 10 (byte-identical outputs across reruns and worker counts)",
        pass,
        "case 1 CSV and JSON compared for 1, 2, 5 workers plus a rerun",
    );
}
