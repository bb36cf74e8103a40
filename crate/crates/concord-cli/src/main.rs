//! `concord`: association statistics for noisy bounded measurements,
//! with permutation testing, calibration, simulation harnesses, and the
//! cross-dataset drug-recall benchmark.
//!
//! Output goes to stdout as JSON (default) or plot-ready CSV; logs and
//! errors go to stderr. Every command is deterministic given `--seed`.
//! Exit codes: 0 success, 2 input error, 3 undefined statistic,
//! 4 precision limit.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use concord::{
    adaptive_permutation_test_with, bootstrap_thresholds, fit_kci_kernel, fit_noise,
    fit_rci_threshold_with, fixed_permutation_test_with, inversion_dist_multiset,
    inversion_dist_no_ties, run_null_calibration_sim, run_power_sim, storey_null_fraction,
    Alternative, ConcordError, Decision, DeltaKind, DeltaSet, InversionDistribution, KernelForm,
    KernelSpec, MultisetSpec, NoiseFamily, NoiseSpec, NullCalibConfig, PValueMethod, PowerConfig,
    RciParams, Result, SampleFamily, Statistic, StopSpec, DEFAULT_BETA_A, DEFAULT_BETA_B,
};
use concord_cli::input::{complete_pairs, read_column};
use concord_cli::matrix::{cell_similarity, SensitivityMatrix};
use concord_cli::recall::recall_report;
use concord_cli::SCHEMA_VERSION;

#[derive(Parser)]
#[command(
    name = "concord",
    version,
    about = "Concordance-based association statistics for noisy measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every randomized operation
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (0 = library default)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Output format on stdout
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    output: OutputFormat,

    /// Significance level (default 0.05 for `test`, 0.001 for `power`)
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Association statistic
    #[arg(long, global = true, value_enum, default_value_t = StatisticArg::Ci)]
    statistic: StatisticArg,

    /// rCI noise margin on x
    #[arg(long, global = true, default_value_t = 0.0)]
    delta_x: f64,

    /// rCI noise margin on y
    #[arg(long, global = true, default_value_t = 0.0)]
    delta_y: f64,

    /// kCI logistic kernel slope (must be negative)
    #[arg(long, global = true, default_value_t = -27.52, allow_hyphen_values = true)]
    kernel_slope: f64,

    /// kCI logistic kernel midpoint
    #[arg(long, global = true, default_value_t = 0.0646)]
    kernel_midpoint: f64,

    /// Recall: minimum common non-missing cell lines per drug pair
    #[arg(long, global = true, default_value_t = 50)]
    min_cells: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Association statistic for two columns, or two matrices with --matrix
    Assoc(AssocArgs),
    /// Adaptive permutation test of association between two columns
    Test(TestArgs),
    /// Fit an rCI threshold, kCI kernel, or noise model from delta files
    Calibrate(CalibrateArgs),
    /// Monte Carlo power grid over effect sizes and sample sizes
    Power(PowerArgs),
    /// Null-calibration QQ data and false-positive-rate tables
    Qq(QqArgs),
    /// Exact null distribution of concordance-index inversion counts
    NullDist(NullDistArgs),
    /// Cross-dataset drug-recall benchmark between two matrices
    Recall(RecallArgs),
}

#[derive(Args)]
struct AssocArgs {
    /// First input: numeric column, or sensitivity matrix with --matrix
    file_a: PathBuf,
    /// Second input, aligned by line (columns) or by identifiers (matrices)
    file_b: PathBuf,
    /// Treat inputs as drugs x cell-lines matrices and emit a similarity matrix
    #[arg(long)]
    matrix: bool,
}

#[derive(Args)]
struct TestArgs {
    file_a: PathBuf,
    file_b: PathBuf,
    /// Test direction
    #[arg(long, value_enum, default_value_t = AlternativeArg::TwoSided)]
    alternative: AlternativeArg,
    /// Use a fixed permutation budget instead of adaptive stopping
    #[arg(long)]
    fixed: Option<u64>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Replicate (null) deltas, one per line
    s0: PathBuf,
    /// Population deltas; required for threshold and kernel fits
    s: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FitArg::Threshold)]
    fit: FitArg,
    /// Null-fraction estimate P(h0) for the threshold fit (default 1)
    #[arg(long, conflicts_with = "storey_lambda")]
    null_fraction: Option<f64>,
    /// Estimate the null fraction from the data at this delta cutoff
    #[arg(long)]
    storey_lambda: Option<f64>,
    /// Bootstrap replicates for threshold stability
    #[arg(long)]
    bootstrap: Option<u64>,
    /// Family for --fit noise (signed deltas)
    #[arg(long, value_enum, default_value_t = NoiseFamilyArg::Laplace)]
    noise_family: NoiseFamilyArg,
}

#[derive(Args)]
struct PowerArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Normal)]
    family: FamilyArg,
    /// Beta marginal shapes for --family beta
    #[arg(long, default_value_t = DEFAULT_BETA_A)]
    beta_a: f64,
    #[arg(long, default_value_t = DEFAULT_BETA_B)]
    beta_b: f64,
    /// Statistics to compare (default: all five)
    #[arg(long, value_enum, value_delimiter = ',')]
    statistics: Option<Vec<StatisticArg>>,
    /// Effect sizes r (default 0 to 0.5 in steps of 0.1)
    #[arg(long, value_delimiter = ',')]
    effect_sizes: Option<Vec<f64>>,
    /// Sample sizes n (default 50 to 300 in steps of 50)
    #[arg(long, value_delimiter = ',')]
    sample_sizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1000)]
    replications: u64,
    /// Add Laplace response noise of this scale after sampling
    #[arg(long)]
    noise_scale: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    noise_location: f64,
}

#[derive(Args)]
struct QqArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Normal)]
    family: FamilyArg,
    #[arg(long, default_value_t = DEFAULT_BETA_A)]
    beta_a: f64,
    #[arg(long, default_value_t = DEFAULT_BETA_B)]
    beta_b: f64,
    #[arg(long, value_delimiter = ',')]
    sample_sizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1000)]
    repetitions: u64,
    /// P-value methods to compare (default: all)
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Option<Vec<MethodArg>>,
    /// Alphas for the false-positive-rate table
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 512)]
    qq_points: usize,
    /// Emit the false-positive-rate table instead of QQ points (CSV mode)
    #[arg(long)]
    fpr: bool,
}

#[derive(Args)]
struct NullDistArgs {
    /// Tie-free sample size
    #[arg(long, required_unless_present = "multiplicities", conflicts_with = "multiplicities")]
    n: Option<u64>,
    /// Tie multiplicities of a multiset, comma separated
    #[arg(long, value_delimiter = ',')]
    multiplicities: Option<Vec<u64>>,
}

#[derive(Args)]
struct RecallArgs {
    matrix_a: PathBuf,
    matrix_b: PathBuf,
    /// Dataset label for the first matrix (default: file stem)
    #[arg(long)]
    id_a: Option<String>,
    /// Dataset label for the second matrix (default: file stem)
    #[arg(long)]
    id_b: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatisticArg {
    Pearson,
    Spearman,
    Ci,
    Rci,
    Kci,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlternativeArg {
    TwoSided,
    Greater,
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Normal,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitArg {
    Threshold,
    Kernel,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoiseFamilyArg {
    Laplace,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    ExactCi,
    ExactCiMidp,
    AsymptoticCi,
    AsymptoticPearson,
    AsymptoticSpearman,
}

impl MethodArg {
    fn to_method(self) -> PValueMethod {
        match self {
            MethodArg::ExactCi => PValueMethod::ExactCi,
            MethodArg::ExactCiMidp => PValueMethod::ExactCiMidP,
            MethodArg::AsymptoticCi => PValueMethod::AsymptoticCi,
            MethodArg::AsymptoticPearson => PValueMethod::AsymptoticPearson,
            MethodArg::AsymptoticSpearman => PValueMethod::AsymptoticSpearman,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // Only fails if a pool already exists, which is fine.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                ConcordError::UndefinedStatistic(_) => 3,
                ConcordError::PrecisionLimit(_) => 4,
                _ => 2,
            })
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Assoc(args) => cmd_assoc(cli, args),
        Command::Test(args) => cmd_test(cli, args),
        Command::Calibrate(args) => cmd_calibrate(cli, args),
        Command::Power(args) => cmd_power(cli, args),
        Command::Qq(args) => cmd_qq(cli, args),
        Command::NullDist(args) => cmd_null_dist(cli, args),
        Command::Recall(args) => cmd_recall(cli, args),
    }
}

fn build_statistic(cli: &Cli) -> Result<Statistic> {
    statistic_from_arg(cli, cli.statistic)
}

fn statistic_from_arg(cli: &Cli, arg: StatisticArg) -> Result<Statistic> {
    Ok(match arg {
        StatisticArg::Pearson => Statistic::Pearson,
        StatisticArg::Spearman => Statistic::Spearman,
        StatisticArg::Ci => Statistic::Ci,
        StatisticArg::Rci => Statistic::Rci(RciParams::new(cli.delta_x, cli.delta_y)?),
        StatisticArg::Kci => {
            Statistic::Kci(KernelSpec::logistic(cli.kernel_slope, cli.kernel_midpoint)?)
        }
    })
}

fn statistic_label(arg: StatisticArg) -> &'static str {
    match arg {
        StatisticArg::Pearson => "pearson",
        StatisticArg::Spearman => "spearman",
        StatisticArg::Ci => "ci",
        StatisticArg::Rci => "rci",
        StatisticArg::Kci => "kci",
    }
}

fn alternative_from_arg(arg: AlternativeArg) -> Alternative {
    match arg {
        AlternativeArg::TwoSided => Alternative::TwoSided,
        AlternativeArg::Greater => Alternative::Greater,
        AlternativeArg::Less => Alternative::Less,
    }
}

fn decision_label(d: Decision) -> &'static str {
    match d {
        Decision::Significant => "significant",
        Decision::NotSignificant => "not_significant",
        Decision::Exhausted => "exhausted",
    }
}

/// Global flags echoed into every output document.
fn global_config(cli: &Cli) -> Value {
    json!({
        "seed": cli.seed,
        "threads": cli.threads,
        "statistic": statistic_label(cli.statistic),
        "delta_x": cli.delta_x,
        "delta_y": cli.delta_y,
        "kernel_slope": cli.kernel_slope,
        "kernel_midpoint": cli.kernel_midpoint,
        "min_cells": cli.min_cells,
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        for (k, v) in e {
            b.insert(k, v);
        }
    }
    base
}

/// Writes a line to stdout, exiting quietly if the reader closed the
/// pipe (the `concord ... | head` case).
fn out_line(line: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{line}") {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        panic!("failed writing to stdout: {e}");
    }
}

fn emit_json(command: &str, config: Value, payload: Value) {
    let doc = merge(
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "config": config,
        }),
        payload,
    );
    out_line(&serde_json::to_string_pretty(&doc).expect("serializable"));
}

/// CSV outputs stay plot-ready: the config echo rides in a single leading
/// comment line.
fn emit_csv(config: &Value, comments: &[String], header: &[&str], rows: Vec<Vec<String>>) {
    out_line(&format!(
        "# {}",
        serde_json::to_string(config).expect("serializable config")
    ));
    for c in comments {
        out_line(&format!("# {c}"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("csv header");
    for row in rows {
        w.write_record(&row).expect("csv row");
    }
    let body = String::from_utf8(w.into_inner().expect("csv buffer")).expect("utf8 csv");
    out_line(body.trim_end_matches('\n'));
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn cmd_assoc(cli: &Cli, args: &AssocArgs) -> Result<()> {
    let statistic = build_statistic(cli)?;
    let config = merge(
        global_config(cli),
        json!({
            "file_a": args.file_a.display().to_string(),
            "file_b": args.file_b.display().to_string(),
            "matrix": args.matrix,
        }),
    );
    if !args.matrix {
        let a = read_column(&args.file_a)?;
        let b = read_column(&args.file_b)?;
        let sample = complete_pairs(&a, &b)?;
        let result = statistic.evaluate(&sample)?;
        match cli.output {
            OutputFormat::Json => emit_json(
                "assoc",
                config,
                json!({ "result": serde_json::to_value(&result).expect("serializable") }),
            ),
            OutputFormat::Csv => emit_csv(
                &config,
                &[],
                &["statistic", "estimate", "effective_pairs", "n"],
                vec![vec![
                    result.statistic.to_string(),
                    result.estimate.to_string(),
                    result.effective_pairs.to_string(),
                    result.n.to_string(),
                ]],
            ),
        }
        return Ok(());
    }

    let a = SensitivityMatrix::from_csv_path(&args.file_a)?;
    let b = SensitivityMatrix::from_csv_path(&args.file_b)?;
    let mapping = a.common_cells(&b);
    let mut rows: Vec<&String> = a.drugs().iter().collect();
    rows.sort();
    let mut cols: Vec<&String> = b.drugs().iter().collect();
    cols.sort();
    // Row-parallel; output order is fixed by the sorted identifiers, so
    // threading never changes bytes. Cells that cannot carry the statistic
    // (too few complete pairs, undefined value) are emitted as missing.
    use rayon::prelude::*;
    let table: Vec<Vec<Option<f64>>> = rows
        .par_iter()
        .map(|d| {
            let ia = a.drug_row(d).expect("row drug");
            cols.iter()
                .map(|e| {
                    let ib = b.drug_row(e).expect("column drug");
                    cell_similarity(&a, &b, ia, ib, &mapping, 2, &statistic)
                })
                .collect()
        })
        .collect();
    match cli.output {
        OutputFormat::Json => emit_json(
            "assoc",
            config,
            json!({
                "drugs_a": rows,
                "drugs_b": cols,
                "similarity": table,
            }),
        ),
        OutputFormat::Csv => {
            let mut header = vec!["drug"];
            header.extend(cols.iter().map(|s| s.as_str()));
            let body: Vec<Vec<String>> = rows
                .iter()
                .zip(&table)
                .map(|(d, row)| {
                    let mut rec = vec![d.to_string()];
                    rec.extend(row.iter().map(|&v| fmt_opt(v)));
                    rec
                })
                .collect();
            emit_csv(&config, &[], &header, body);
        }
    }
    Ok(())
}

fn cmd_test(cli: &Cli, args: &TestArgs) -> Result<()> {
    let statistic = build_statistic(cli)?;
    let alpha = cli.alpha.unwrap_or(0.05);
    let alternative = alternative_from_arg(args.alternative);
    let a = read_column(&args.file_a)?;
    let b = read_column(&args.file_b)?;
    let sample = complete_pairs(&a, &b)?;
    let observed = statistic.evaluate(&sample)?;
    let decision = match args.fixed {
        Some(k) => fixed_permutation_test_with(&sample, &statistic, k, cli.seed, alternative)?,
        None => {
            let stop = StopSpec::for_alpha(alpha)?;
            adaptive_permutation_test_with(&sample, &statistic, &stop, cli.seed, alternative)?
        }
    };
    let config = merge(
        global_config(cli),
        json!({
            "file_a": args.file_a.display().to_string(),
            "file_b": args.file_b.display().to_string(),
            "alpha": alpha,
            "alternative": serde_json::to_value(alternative).expect("serializable"),
            "fixed": args.fixed,
        }),
    );
    match cli.output {
        OutputFormat::Json => emit_json(
            "test",
            config,
            json!({
                "observed": serde_json::to_value(&observed).expect("serializable"),
                "test": serde_json::to_value(decision).expect("serializable"),
            }),
        ),
        OutputFormat::Csv => emit_csv(
            &config,
            &[],
            &[
                "statistic",
                "estimate",
                "n",
                "alpha",
                "decision",
                "p_estimate",
                "permutations_used",
                "exceedances",
            ],
            vec![vec![
                observed.statistic.to_string(),
                observed.estimate.to_string(),
                observed.n.to_string(),
                alpha.to_string(),
                decision_label(decision.decision).to_string(),
                decision.p_estimate.to_string(),
                decision.permutations_used.to_string(),
                decision.exceedances.to_string(),
            ]],
        ),
    }
    Ok(())
}

/// Reads a delta column, skipping missing markers.
fn read_deltas(path: &Path) -> Result<Vec<f64>> {
    let values: Vec<f64> = read_column(path)?.into_iter().flatten().collect();
    if values.is_empty() {
        return Err(ConcordError::InvalidParameter(format!(
            "{} contains no usable values",
            path.display()
        )));
    }
    Ok(values)
}

fn cmd_calibrate(cli: &Cli, args: &CalibrateArgs) -> Result<()> {
    let config = merge(
        global_config(cli),
        json!({
            "s0": args.s0.display().to_string(),
            "s": args.s.as_ref().map(|p| p.display().to_string()),
            "fit": format!("{:?}", args.fit).to_lowercase(),
            "null_fraction": args.null_fraction,
            "storey_lambda": args.storey_lambda,
            "bootstrap": args.bootstrap,
        }),
    );
    match args.fit {
        FitArg::Noise => {
            let deltas = read_deltas(&args.s0)?;
            let family = match args.noise_family {
                NoiseFamilyArg::Laplace => NoiseFamily::Laplace,
                NoiseFamilyArg::Gaussian => NoiseFamily::Gaussian,
            };
            let fit = fit_noise(&deltas, family)?;
            match cli.output {
                OutputFormat::Json => emit_json(
                    "calibrate",
                    config,
                    json!({ "noise": serde_json::to_value(fit).expect("serializable") }),
                ),
                OutputFormat::Csv => emit_csv(
                    &config,
                    &[],
                    &["family", "location", "scale"],
                    vec![vec![
                        format!("{:?}", fit.family).to_lowercase(),
                        fit.location.to_string(),
                        fit.scale.to_string(),
                    ]],
                ),
            }
            Ok(())
        }
        FitArg::Threshold | FitArg::Kernel => {
            let s_path = args.s.as_ref().ok_or_else(|| {
                ConcordError::InvalidParameter(
                    "threshold and kernel fits need a population delta file".into(),
                )
            })?;
            let s0 = DeltaSet::new(read_deltas(&args.s0)?, DeltaKind::Replicate)?;
            let s = DeltaSet::new(read_deltas(s_path)?, DeltaKind::Population)?;
            if args.fit == FitArg::Kernel {
                let fit = fit_kci_kernel(&s0, &s)?;
                let kernel = fit.kernel.expect("kernel fit populates kernel");
                let KernelForm::Logistic { slope, midpoint } = kernel.form else {
                    unreachable!("kernel fit returns a logistic form");
                };
                match cli.output {
                    OutputFormat::Json => emit_json(
                        "calibrate",
                        config,
                        json!({
                            "kernel": serde_json::to_value(kernel).expect("serializable"),
                            "posterior_curve": fit.posterior_curve,
                        }),
                    ),
                    OutputFormat::Csv => emit_csv(
                        &config,
                        &[format!("kernel_slope: {slope}"), format!("kernel_midpoint: {midpoint}")],
                        &["t", "posterior_h1"],
                        fit.posterior_curve
                            .iter()
                            .map(|&(t, p)| vec![t.to_string(), p.to_string()])
                            .collect(),
                    ),
                }
                return Ok(());
            }
            let (null_fraction, storey) = match args.storey_lambda {
                Some(lambda) => {
                    let pi0 = storey_null_fraction(&s0, &s, lambda)?;
                    (pi0, Some(pi0))
                }
                None => (args.null_fraction.unwrap_or(1.0), None),
            };
            let fit = fit_rci_threshold_with(&s0, &s, null_fraction)?;
            let threshold = fit.threshold.expect("threshold fit populates threshold");
            let boots = match args.bootstrap {
                Some(reps) => Some(bootstrap_thresholds(&s0, &s, reps, cli.seed)?),
                None => None,
            };
            match cli.output {
                OutputFormat::Json => emit_json(
                    "calibrate",
                    config,
                    json!({
                        "threshold": threshold,
                        "null_fraction": null_fraction,
                        "storey_null_fraction": storey,
                        "mcc_curve": fit.mcc_curve,
                        "bootstrap_thresholds": boots,
                    }),
                ),
                OutputFormat::Csv => emit_csv(
                    &config,
                    &[format!("threshold: {threshold}")],
                    &["t", "mcc"],
                    fit.mcc_curve
                        .iter()
                        .map(|&(t, m)| vec![t.to_string(), m.to_string()])
                        .collect(),
                ),
            }
            Ok(())
        }
    }
}

fn family_from_args(family: FamilyArg, a: f64, b: f64) -> SampleFamily {
    match family {
        FamilyArg::Normal => SampleFamily::Normal,
        FamilyArg::Beta => SampleFamily::Beta { a, b },
    }
}

fn cmd_power(cli: &Cli, args: &PowerArgs) -> Result<()> {
    let alpha = cli.alpha.unwrap_or(1e-3);
    let stat_args = args.statistics.clone().unwrap_or_else(|| {
        vec![
            StatisticArg::Pearson,
            StatisticArg::Spearman,
            StatisticArg::Ci,
            StatisticArg::Rci,
            StatisticArg::Kci,
        ]
    });
    let statistics: Vec<Statistic> = stat_args
        .iter()
        .map(|&s| statistic_from_arg(cli, s))
        .collect::<Result<_>>()?;
    let noise = match args.noise_scale {
        Some(scale) => Some(NoiseSpec::laplace(args.noise_location, scale)?),
        None => None,
    };
    let config = PowerConfig {
        family: family_from_args(args.family, args.beta_a, args.beta_b),
        statistics,
        effect_sizes: args
            .effect_sizes
            .clone()
            .unwrap_or_else(|| (0..=5).map(|i| i as f64 * 0.1).collect()),
        sample_sizes: args
            .sample_sizes
            .clone()
            .unwrap_or_else(|| (1..=6).map(|i| i * 50).collect()),
        alpha,
        replications: args.replications,
        noise,
        seed: cli.seed,
    };
    let grid = run_power_sim(&config)?;
    let echo = merge(
        global_config(cli),
        json!({ "power": serde_json::to_value(&config).expect("serializable") }),
    );
    match cli.output {
        OutputFormat::Json => emit_json(
            "power",
            echo,
            json!({ "grid": serde_json::to_value(&grid).expect("serializable") }),
        ),
        OutputFormat::Csv => emit_csv(
            &echo,
            &[],
            &[
                "statistic",
                "effect_size",
                "sample_size",
                "alpha",
                "replications",
                "rejections",
                "power",
                "clamped_fraction",
            ],
            grid.cells
                .iter()
                .map(|c| {
                    vec![
                        c.statistic.kind().to_string(),
                        c.effect_size.to_string(),
                        c.sample_size.to_string(),
                        c.alpha.to_string(),
                        c.replications.to_string(),
                        c.rejections.to_string(),
                        c.power.to_string(),
                        c.clamped_fraction.to_string(),
                    ]
                })
                .collect(),
        ),
    }
    Ok(())
}

fn cmd_qq(cli: &Cli, args: &QqArgs) -> Result<()> {
    let methods: Vec<PValueMethod> = match &args.methods {
        Some(list) => list.iter().map(|m| m.to_method()).collect(),
        None => PValueMethod::all(),
    };
    let config = NullCalibConfig {
        family: family_from_args(args.family, args.beta_a, args.beta_b),
        sample_sizes: args.sample_sizes.clone().unwrap_or_else(|| vec![100]),
        repetitions: args.repetitions,
        methods,
        alphas: args
            .alphas
            .clone()
            .unwrap_or_else(|| vec![1e-4, 1e-3, 1e-2, 0.05]),
        qq_points: args.qq_points,
        seed: cli.seed,
    };
    let report = run_null_calibration_sim(&config)?;
    let echo = merge(
        global_config(cli),
        json!({ "qq": serde_json::to_value(&config).expect("serializable") }),
    );
    match cli.output {
        OutputFormat::Json => emit_json(
            "qq",
            echo,
            json!({
                "fpr": serde_json::to_value(&report.fpr).expect("serializable"),
                "qq": serde_json::to_value(&report.qq).expect("serializable"),
            }),
        ),
        OutputFormat::Csv if args.fpr => emit_csv(
            &echo,
            &[],
            &[
                "method",
                "sample_size",
                "alpha",
                "repetitions",
                "false_positives",
                "degenerate_draws",
                "rate",
            ],
            report
                .fpr
                .iter()
                .map(|r| {
                    vec![
                        r.method.label().to_string(),
                        r.sample_size.to_string(),
                        r.alpha.to_string(),
                        r.repetitions.to_string(),
                        r.false_positives.to_string(),
                        r.degenerate_draws.to_string(),
                        r.rate.to_string(),
                    ]
                })
                .collect(),
        ),
        OutputFormat::Csv => emit_csv(
            &echo,
            &[],
            &["method", "sample_size", "theoretical", "empirical"],
            report
                .qq
                .iter()
                .map(|p| {
                    vec![
                        p.method.label().to_string(),
                        p.sample_size.to_string(),
                        p.theoretical.to_string(),
                        p.empirical.to_string(),
                    ]
                })
                .collect(),
        ),
    }
    Ok(())
}

fn cmd_null_dist(cli: &Cli, args: &NullDistArgs) -> Result<()> {
    let dist: InversionDistribution = match (&args.n, &args.multiplicities) {
        (Some(n), None) => inversion_dist_no_ties(*n)?,
        (None, Some(m)) => inversion_dist_multiset(&MultisetSpec::new(m.clone())?)?,
        _ => unreachable!("clap enforces exactly one of --n / --multiplicities"),
    };
    let config = merge(
        global_config(cli),
        json!({ "n": args.n, "multiplicities": args.multiplicities }),
    );
    match cli.output {
        OutputFormat::Json => emit_json(
            "null-dist",
            config,
            json!({
                "n_elements": dist.n_elements,
                "max_inversions": dist.max_inversions,
                "counts": dist.counts,
                "pmf": dist.pmf,
            }),
        ),
        OutputFormat::Csv => emit_csv(
            &config,
            &[],
            &["inversions", "count", "pmf"],
            dist.counts
                .iter()
                .zip(&dist.pmf)
                .enumerate()
                .map(|(k, (&c, &p))| vec![k.to_string(), c.to_string(), p.to_string()])
                .collect(),
        ),
    }
    Ok(())
}

fn cmd_recall(cli: &Cli, args: &RecallArgs) -> Result<()> {
    let statistic = build_statistic(cli)?;
    let a = SensitivityMatrix::from_csv_path(&args.matrix_a)?;
    let b = SensitivityMatrix::from_csv_path(&args.matrix_b)?;
    let id_a = args.id_a.clone().unwrap_or_else(|| stem(&args.matrix_a));
    let id_b = args.id_b.clone().unwrap_or_else(|| stem(&args.matrix_b));
    let report = recall_report(&a, &b, &id_a, &id_b, &statistic, cli.min_cells)?;
    for e in &report.excluded {
        eprintln!("excluded {}: {}", e.drug, e.reason);
    }
    let config = merge(
        global_config(cli),
        json!({
            "matrix_a": args.matrix_a.display().to_string(),
            "matrix_b": args.matrix_b.display().to_string(),
            "id_a": id_a,
            "id_b": id_b,
        }),
    );
    match cli.output {
        OutputFormat::Json => emit_json(
            "recall",
            config,
            json!({ "report": serde_json::to_value(&report).expect("serializable") }),
        ),
        OutputFormat::Csv => emit_csv(
            &config,
            &[
                format!("area: {}", report.area),
                format!("excluded: {}", report.excluded.len()),
            ],
            &["drug", "rank", "candidates"],
            report
                .ranks
                .iter()
                .map(|r| {
                    vec![
                        r.drug.clone(),
                        r.rank.to_string(),
                        r.candidates.to_string(),
                    ]
                })
                .collect(),
        ),
    }
    Ok(())
}
