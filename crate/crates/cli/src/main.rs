//! `ar2lab`: command-line front end for the AR(2) estimation laboratory.
//!
//! Subcommands map one-to-one onto the library pipeline: `simulate` a
//! trajectory, `estimate` on one replication, `replicate` a full experiment,
//! `tables` for the summary tables over the demonstration cases, `hist` for
//! scaled-error histogram data, `coverage` for the confidence-region
//! experiment, and `verify-limits` for the closed-form limit residuals.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on runtime errors.
//! Output files are written atomically (temp file + rename). The env var
//! `AR2LAB_BITS` overrides the default 800-bit precision; explicit `--bits`
//! or a config-file value wins over the env var.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use ar2lab_core::limits::{limit_report, truncation_depth};
use ar2lab_core::montecarlo::{
    coverage_experiment, histogram, histogram_csv, replications_csv, run_case, run_replications,
    single_replication, table_descriptive_csv, table_estimates_csv, table_tests_csv, BinRule,
    CaseReport, ExperimentConfig, MonteCarloError,
};
use ar2lab_core::simulate::{gen_innovations, simulate_path, SeedSpec};
use ar2lab_core::{BigTrajectory, PrecisionCtx, DEFAULT_MANTISSA_BITS};

#[derive(Parser)]
#[command(
    name = "ar2lab",
    version,
    about = "Simulation and estimation laboratory for supercritical Gaussian AR(2) processes"
)]
struct Cli {
    /// Worker threads for the replication pool (default: available parallelism)
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trajectory and export it as `k,x` CSV
    Simulate(RunArgs),
    /// Run the estimation pipeline on one replication and report it as JSON
    Estimate(RunArgs),
    /// Run a replicated experiment and export the per-replication CSV
    Replicate(RunArgs),
    /// Run the demonstration cases and write the three summary tables
    Tables(TablesArgs),
    /// Density histogram of the scaled errors, as CSV
    Hist(RunArgs),
    /// Confidence-region coverage experiment
    Coverage(RunArgs),
    /// Evaluate the limit formulas on a simulated path; residuals as JSON
    #[command(name = "verify-limits")]
    VerifyLimits(RunArgs),
}

#[derive(Args, Clone)]
struct ExperimentArgs {
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Shorthand for the demonstration parameter pairs 1..4
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    case: Option<u8>,
    #[arg(long)]
    theta1: Option<f64>,
    #[arg(long)]
    theta2: Option<f64>,
    /// Innovation standard deviation (default 1)
    #[arg(long)]
    sigma: Option<f64>,
    /// Initial value X₀ (default 0)
    #[arg(long)]
    x0: Option<f64>,
    /// Initial value X₋₁ (default 0)
    #[arg(long = "x-neg1")]
    x_neg1: Option<f64>,
    /// Trajectory length n (default 100)
    #[arg(long)]
    n: Option<usize>,
    /// Number of replications (default 1000)
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed (default 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Mantissa precision in bits (default 800, or AR2LAB_BITS)
    #[arg(long)]
    bits: Option<u32>,
    /// Confidence level parameter in (0, 1) (default 0.05)
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Replication index for single-replication commands (default 0)
    #[arg(long, default_value_t = 0)]
    rep: u64,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TablesArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Directory for the three table CSVs (default ".")
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
    fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

impl From<MonteCarloError> for CliError {
    fn from(e: MonteCarloError) -> Self {
        match e {
            MonteCarloError::BadConfig(_)
            | MonteCarloError::NonSupercriticalCase
            | MonteCarloError::Model(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn env_bits() -> Option<u32> {
    std::env::var("AR2LAB_BITS").ok()?.trim().parse().ok()
}

/// The config file parsed leniently: which keys were explicitly present
/// matters for precedence, and `tables` accepts files without theta values.
struct FileConfig {
    value: serde_json::Value,
}

impl FileConfig {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("bad JSON in {}: {e}", path.display())))?;
        if !value.is_object() {
            return Err(CliError::usage(format!(
                "config {} must be a JSON object",
                path.display()
            )));
        }
        Ok(FileConfig { value })
    }

    fn has(&self, key: &str) -> bool {
        self.value.get(key).is_some()
    }

    /// Case list for `tables` (optional "cases" array of 1..4).
    fn cases(&self) -> Result<Option<Vec<u8>>, CliError> {
        match self.value.get("cases") {
            None => Ok(None),
            Some(serde_json::Value::Array(items)) => {
                let mut cases = Vec::new();
                for item in items {
                    let k = item
                        .as_u64()
                        .filter(|k| (1..=4).contains(k))
                        .ok_or_else(|| CliError::usage("config \"cases\" entries must be 1..4"))?;
                    cases.push(k as u8);
                }
                Ok(Some(cases))
            }
            Some(_) => Err(CliError::usage("config \"cases\" must be an array")),
        }
    }

    fn parse(&self, fallback_thetas: Option<(f64, f64)>) -> Result<ExperimentConfig, CliError> {
        let mut value = self.value.clone();
        let obj = value.as_object_mut().expect("validated as object");
        obj.remove("cases");
        if let Some((t1, t2)) = fallback_thetas {
            obj.entry("theta1".to_owned())
                .or_insert_with(|| serde_json::json!(t1));
            obj.entry("theta2".to_owned())
                .or_insert_with(|| serde_json::json!(t2));
        }
        serde_json::from_value(value).map_err(|e| CliError::usage(format!("bad config: {e}")))
    }
}

impl ExperimentArgs {
    fn case_thetas(&self) -> Result<Option<(f64, f64)>, CliError> {
        match self.case {
            None => Ok(None),
            Some(k) => Ok(Some(
                ar2lab_core::montecarlo::case_params(k as usize)
                    .ok_or_else(|| CliError::usage("case must be 1..4"))?,
            )),
        }
    }

    /// Builds the effective config: config file < case shorthand < flags,
    /// with AR2LAB_BITS filling the precision default.
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let file = match &self.config {
            Some(path) => Some(FileConfig::load(path)?),
            None => None,
        };
        let case_thetas = self.case_thetas()?;
        let mut cfg = match &file {
            Some(f) => f.parse(case_thetas.or(Some((f64::NAN, f64::NAN))))?,
            None => {
                let (t1, t2) = match (case_thetas, self.theta1, self.theta2) {
                    (Some(pair), _, _) => pair,
                    (None, Some(t1), Some(t2)) => (t1, t2),
                    _ => {
                        return Err(CliError::usage(
                            "provide --case, --config, or both --theta1 and --theta2",
                        ))
                    }
                };
                let mut cfg = ExperimentConfig::for_case(1).expect("case 1 exists");
                cfg.theta1 = t1;
                cfg.theta2 = t2;
                cfg
            }
        };
        if let Some((t1, t2)) = case_thetas {
            cfg.theta1 = t1;
            cfg.theta2 = t2;
        }
        if let Some(t1) = self.theta1 {
            cfg.theta1 = t1;
        }
        if let Some(t2) = self.theta2 {
            cfg.theta2 = t2;
        }
        if let Some(s) = self.sigma {
            cfg.sigma = s;
        }
        if let Some(x0) = self.x0 {
            cfg.x0 = x0;
        }
        if let Some(x) = self.x_neg1 {
            cfg.x_neg1 = x;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(r) = self.reps {
            cfg.reps = r;
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        let file_has_bits = file.as_ref().is_some_and(|f| f.has("mantissa_bits"));
        cfg.mantissa_bits = match (self.bits, file_has_bits, env_bits()) {
            (Some(b), _, _) => b,
            (None, true, _) => cfg.mantissa_bits,
            (None, false, Some(b)) => b,
            (None, false, None) => DEFAULT_MANTISSA_BITS,
        };
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if cfg.theta1.is_nan() || cfg.theta2.is_nan() {
            return Err(CliError::usage(
                "config file must set theta1/theta2 (or pass --case / --theta1 --theta2)",
            ));
        }
        cfg.validate().map_err(CliError::from)?;
        Ok(cfg)
    }
}

fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let file_name = path
        .file_name()
        .ok_or_else(|| CliError::usage(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(
        "{}.tmp-{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, content)
        .map_err(|e| CliError::runtime(format!("writing {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::runtime(format!("renaming to {}: {e}", path.display())))?;
    Ok(())
}

/// Data goes to `--out` (atomically) or stdout; the one-line summary goes to
/// stdout when a file is written, stderr otherwise, so piped data stays
/// clean.
fn emit(out: &Option<PathBuf>, content: &str, summary: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            write_atomic(path, content)?;
            println!("{summary} -> {}", path.display());
        }
        None => {
            print!("{content}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn case_summary(report: &CaseReport) -> String {
    let mut line = format!(
        "case ({},{}): lambda1={:.6} reps={} mean=({:.6},{:.6}) coverage={:.4}",
        report.config.theta1,
        report.config.theta2,
        report.lambda1,
        report.reps_used,
        report.mean_estimates.0,
        report.mean_estimates.1,
        report.coverage,
    );
    if report.gram_failures > 0 {
        let _ = write!(line, " gram_failures={}", report.gram_failures);
    }
    line
}

fn cmd_simulate(args: &RunArgs) -> Result<(), CliError> {
    let cfg = args.experiment.resolve()?;
    let params = cfg.params().map_err(|e| CliError::usage(e.to_string()))?;
    let innov = gen_innovations(SeedSpec::new(cfg.master_seed, args.rep), cfg.n, cfg.sigma)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let trajectory: BigTrajectory = simulate_path(&params, &innov, cfg.mantissa_bits)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    let last = trajectory.value(cfg.n as i64).to_f64();
    let summary = format!(
        "simulated ({},{}) n={} rep={}: |X_n| ~ {:.3e}",
        cfg.theta1,
        cfg.theta2,
        cfg.n,
        args.rep,
        last.abs()
    );
    emit(&args.out, &trajectory.to_csv(), &summary)
}

fn cmd_estimate(args: &RunArgs) -> Result<(), CliError> {
    let cfg = args.experiment.resolve()?;
    let record = single_replication(&cfg, args.rep as usize)?;
    let json =
        serde_json::to_string_pretty(&record).map_err(|e| CliError::runtime(e.to_string()))?;
    let summary = format!(
        "estimate ({},{}) rep={}: theta_hat=({:.6},{:.6})",
        cfg.theta1, cfg.theta2, args.rep, record.theta_hat.0, record.theta_hat.1
    );
    emit(&args.out, &format!("{json}\n"), &summary)
}

fn cmd_replicate(args: &RunArgs) -> Result<(), CliError> {
    let cfg = args.experiment.resolve()?;
    let records = run_replications(&cfg)?;
    let csv = replications_csv(&records);
    let ok = records.iter().filter(|r| r.gram_ok).count();
    let m1 = records
        .iter()
        .filter(|r| r.gram_ok)
        .map(|r| r.theta_hat.0)
        .sum::<f64>()
        / ok.max(1) as f64;
    let m2 = records
        .iter()
        .filter(|r| r.gram_ok)
        .map(|r| r.theta_hat.1)
        .sum::<f64>()
        / ok.max(1) as f64;
    let summary = format!(
        "case ({},{}): reps={} mean=({m1:.6},{m2:.6}) gram_failures={}",
        cfg.theta1,
        cfg.theta2,
        ok,
        records.len() - ok
    );
    emit(&args.out, &csv, &summary)
}

fn cmd_tables(args: &TablesArgs) -> Result<(), CliError> {
    let file = match &args.experiment.config {
        Some(path) => Some(FileConfig::load(path)?),
        None => None,
    };
    let explicit_thetas = args.experiment.theta1.is_some()
        || args.experiment.theta2.is_some()
        || file.as_ref().is_some_and(|f| f.has("theta1"));
    let cases: Vec<Option<u8>> = if let Some(k) = args.experiment.case {
        vec![Some(k)]
    } else if let Some(Some(listed)) = file.as_ref().map(|f| f.cases()).transpose()? {
        listed.into_iter().map(Some).collect()
    } else if explicit_thetas {
        vec![None] // single custom parameter pair
    } else {
        vec![Some(1), Some(2), Some(3), Some(4)]
    };

    let mut reports = Vec::new();
    for case in cases {
        let mut exp = args.experiment.clone();
        exp.case = case;
        let cfg = exp.resolve()?;
        let report = run_case(&cfg)?;
        println!("{}", case_summary(&report));
        reports.push(report);
    }
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::runtime(format!("creating {}: {e}", args.out_dir.display())))?;
    for (name, content) in [
        ("table_estimates.csv", table_estimates_csv(&reports)),
        ("table_descriptive.csv", table_descriptive_csv(&reports)),
        ("table_tests.csv", table_tests_csv(&reports)),
    ] {
        let path = args.out_dir.join(name);
        write_atomic(&path, &content)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_hist(args: &RunArgs) -> Result<(), CliError> {
    let cfg = args.experiment.resolve()?;
    let records = run_replications(&cfg)?;
    let e1: Vec<f64> = records
        .iter()
        .filter(|r| r.gram_ok)
        .map(|r| r.scaled_error.0)
        .collect();
    let bins =
        histogram(&e1, BinRule::FreedmanDiaconis).map_err(|e| CliError::runtime(e.to_string()))?;
    let summary = format!(
        "case ({},{}): histogram of {} scaled errors in {} bins",
        cfg.theta1,
        cfg.theta2,
        e1.len(),
        bins.len()
    );
    emit(&args.out, &histogram_csv(&bins), &summary)
}

fn cmd_coverage(args: &RunArgs) -> Result<(), CliError> {
    let cfg = args.experiment.resolve()?;
    let coverage = coverage_experiment(&cfg)?;
    let json = serde_json::json!({
        "theta1": cfg.theta1,
        "theta2": cfg.theta2,
        "alpha": cfg.alpha,
        "reps": cfg.reps,
        "coverage": coverage,
    });
    let summary = format!(
        "case ({},{}): coverage={coverage:.4} at alpha={}",
        cfg.theta1, cfg.theta2, cfg.alpha
    );
    emit(
        &args.out,
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&json).expect("serializable")
        ),
        &summary,
    )
}

fn cmd_verify_limits(args: &RunArgs) -> Result<(), CliError> {
    let cfg = args.experiment.resolve()?;
    let params = cfg.params().map_err(|e| CliError::usage(e.to_string()))?;
    let r = cfg.root_info();
    let lambda1 = r
        .lambda1
        .ok_or_else(|| CliError::usage("verify-limits requires distinct real roots"))?;
    let ctx = PrecisionCtx::new(cfg.mantissa_bits).map_err(|e| CliError::usage(e.to_string()))?;
    let depth = truncation_depth(cfg.mantissa_bits, lambda1.abs());
    let innov = gen_innovations(
        SeedSpec::new(cfg.master_seed, args.rep),
        depth.max(cfg.n),
        cfg.sigma,
    )
    .map_err(|e| CliError::usage(e.to_string()))?;
    let report = limit_report(&params, &r, &innov, cfg.n, &ctx)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    let map: BTreeMap<String, String> = report
        .named_residuals()
        .into_iter()
        .map(|(k, v)| (k, format!("{v:e}")))
        .collect();
    let json = serde_json::to_string_pretty(&map).expect("serializable");
    let summary = format!(
        "limits ({},{}) n={} rep={}: max residual {:.3e}",
        cfg.theta1,
        cfg.theta2,
        cfg.n,
        args.rep,
        report
            .named_residuals()
            .iter()
            .filter(|(k, _)| k != "cond_ii_max_scaled_m")
            .map(|(_, v)| v.abs())
            .fold(0.0f64, f64::max)
    );
    emit(&args.out, &format!("{json}\n"), &summary)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::runtime(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Replicate(args) => cmd_replicate(args),
        Command::Tables(args) => cmd_tables(args),
        Command::Hist(args) => cmd_hist(args),
        Command::Coverage(args) => cmd_coverage(args),
        Command::VerifyLimits(args) => cmd_verify_limits(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
