//! Command-line harness around the fairppv library: closed-form oracle
//! tables, replicated synthetic experiments and sweeps, and the CSV
//! pipeline. Exit code 0 on success, 2 when the sufficient condition fails
//! for the configured distribution, 1 on any other error.

mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use fairppv::calibration::CalibrationConfig;
use fairppv::data::CsvSchema;
use fairppv::experiment::{
    self, emit_report, emit_report_to_path, run_synthetic, run_tabular, ExperimentReport,
    ReportFormat, Sweep, SweepParameter, SyntheticConfig, TabularConfig,
};
use fairppv::gaussian::{solve_fair_optimal, GaussianModelSpec, OracleFairSolution};
use fairppv::score_model::TrainConfig;
use fairppv::{Error, Result};

use config::{pick, pick_opt, FileConfig};

#[derive(Parser)]
#[command(
    name = "fairppv",
    version,
    about = "Group-wise threshold calibration under predictive parity",
    long_about = "Group-wise threshold calibration under predictive parity.\n\
                  Replications run in parallel; set RAYON_NUM_THREADS to bound the worker count."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form theoretical block for a sweep of group-1 base rates
    Oracle(OracleArgs),
    /// Run a replicated synthetic experiment at one setting
    Synthetic(SyntheticArgs),
    /// Run a synthetic parameter sweep
    Sweep(SweepArgs),
    /// Run the replicated CSV pipeline (bootstrap split, calibrate on validation)
    Tabular(TabularArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Master seed; replication seeds derive from it
    #[arg(long)]
    seed: Option<u64>,
    /// Output format: json, table or csv
    #[arg(long)]
    format: Option<String>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key-value (TOML) config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Base rate of group 1
    #[arg(long)]
    p_y1: Option<f64>,
    /// Base rate of group 0
    #[arg(long)]
    p_y0: Option<f64>,
    /// Probability of group 1
    #[arg(long)]
    p_a1: Option<f64>,
    /// Component standard deviation
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args, Clone)]
struct TrainArgs {
    /// Score estimator: pooled (one-hot group features) or per-group
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// L2 penalty on the weights
    #[arg(long)]
    l2: Option<f64>,
}

#[derive(Args, Clone)]
struct CalibArgs {
    /// Cost parameter c in [0, 1]
    #[arg(long)]
    cost: Option<f64>,
    /// Anchor-threshold grid spacing
    #[arg(long)]
    grid_step: Option<f64>,
    /// Group whose threshold drives the risk search
    #[arg(long)]
    anchor_group: Option<usize>,
    /// Slack added to the sufficient-condition check
    #[arg(long)]
    condition_slack: Option<f64>,
    /// Residual above which a PPV match is flagged
    #[arg(long)]
    ppv_match_tol: Option<f64>,
}

#[derive(Args)]
struct OracleArgs {
    /// Comma-separated group-1 base rates to tabulate
    #[arg(long, value_delimiter = ',')]
    p_values: Option<Vec<f64>>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    cost: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SyntheticArgs {
    /// Preset: multiclass3 or multiclass5 (omit for the two-group model)
    #[arg(long)]
    preset: Option<String>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    calib: CalibArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Preset: table1, sample-size, group-prob or cost
    #[arg(long)]
    preset: Option<String>,
    /// Swept parameter: p_y1, p_a0, cost or n_train
    #[arg(long)]
    parameter: Option<String>,
    /// Comma-separated sweep values
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    calib: CalibArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct TabularArgs {
    /// CSV file with a header row
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Column holding the protected group
    #[arg(long)]
    group_column: Option<String>,
    /// Column holding the 0/1 label
    #[arg(long)]
    label_column: Option<String>,
    /// Comma-separated numeric feature columns (z-scored on load)
    #[arg(long, value_delimiter = ',')]
    numeric_features: Option<Vec<String>>,
    /// Comma-separated categorical feature columns (one-hot encoded)
    #[arg(long, value_delimiter = ',')]
    categorical_features: Option<Vec<String>>,
    /// Training preset: adult or compas
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    train_frac: Option<f64>,
    #[arg(long)]
    calib_frac: Option<f64>,
    #[arg(long)]
    test_frac: Option<f64>,
    #[arg(long)]
    replications: Option<usize>,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    calib: CalibArgs,
    #[command(flatten)]
    common: CommonArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::OracleInfeasible(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Oracle(args) => cmd_oracle(args),
        Command::Synthetic(args) => cmd_synthetic(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Tabular(args) => cmd_tabular(args),
    }
}

fn output_format(common: &CommonArgs, file: &FileConfig) -> Result<ReportFormat> {
    pick(
        common.format.clone(),
        file.format.clone(),
        "table".to_string(),
    )
    .parse()
}

fn write_out(
    common: &CommonArgs,
    file: &FileConfig,
    emit: impl Fn(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match pick_opt(common.out.clone(), file.out.clone()) {
        Some(path) => {
            let mut f = std::fs::File::create(&path)?;
            emit(&mut f)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit(&mut lock)
        }
    }
}

fn emit_experiment(
    report: &ExperimentReport,
    common: &CommonArgs,
    file: &FileConfig,
) -> Result<()> {
    let format = output_format(common, file)?;
    match pick_opt(common.out.clone(), file.out.clone()) {
        Some(path) => emit_report_to_path(report, format, &path),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit_report(report, format, &mut lock)
        }
    }
}

fn merged_train(args: &TrainArgs, file: &FileConfig, base: TrainConfig) -> TrainConfig {
    TrainConfig {
        learning_rate: pick(args.learning_rate, file.learning_rate, base.learning_rate),
        epochs: pick(args.epochs, file.epochs, base.epochs),
        batch_size: pick(args.batch_size, file.batch_size, base.batch_size),
        seed: base.seed,
        l2: pick(args.l2, file.l2, base.l2),
    }
}

fn merged_estimator(
    args: &TrainArgs,
    file: &FileConfig,
    base: experiment::Estimator,
) -> Result<experiment::Estimator> {
    match pick_opt(args.estimator.clone(), file.estimator.clone()) {
        Some(name) => name.parse(),
        None => Ok(base),
    }
}

fn merged_calib(args: &CalibArgs, file: &FileConfig, base: CalibrationConfig) -> CalibrationConfig {
    CalibrationConfig {
        cost: pick(args.cost, file.cost, base.cost),
        anchor_group: pick(args.anchor_group, file.anchor_group, base.anchor_group),
        grid_step: pick(args.grid_step, file.grid_step, base.grid_step),
        condition_slack: pick(
            args.condition_slack,
            file.condition_slack,
            base.condition_slack,
        ),
        ppv_match_tol: pick(args.ppv_match_tol, file.ppv_match_tol, base.ppv_match_tol),
    }
}

fn binary_model(
    args: &ModelArgs,
    file: &FileConfig,
    p_y1_default: f64,
) -> Result<GaussianModelSpec> {
    GaussianModelSpec::binary(
        pick(args.p_a1, file.p_a1, 0.3),
        pick(args.p_y0, file.p_y0, 0.2),
        pick(args.p_y1, file.p_y1, p_y1_default),
        pick(args.sigma, file.sigma, 2.0),
    )
}

#[derive(Serialize)]
struct OracleRow {
    p_y1: f64,
    #[serde(flatten)]
    solution: OracleFairSolution,
}

#[derive(Serialize)]
struct OracleReport {
    cost: f64,
    p_a1: f64,
    p_y0: f64,
    sigma: f64,
    rows: Vec<OracleRow>,
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let cost = pick(args.cost, file.cost, 0.5);
    let p_a1 = pick(args.model.p_a1, file.p_a1, 0.3);
    let p_y0 = pick(args.model.p_y0, file.p_y0, 0.2);
    let sigma = pick(args.model.sigma, file.sigma, 2.0);
    let p_values = pick(args.p_values, None, vec![0.2, 0.3, 0.4, 0.5, 0.6]);
    let mut rows = Vec::with_capacity(p_values.len());
    for p in p_values {
        let spec = GaussianModelSpec::binary(p_a1, p_y0, p, sigma)?;
        rows.push(OracleRow {
            p_y1: p,
            solution: solve_fair_optimal(&spec, cost)?,
        });
    }
    let report = OracleReport {
        cost,
        p_a1,
        p_y0,
        sigma,
        rows,
    };
    let format = output_format(&args.common, &file)?;
    write_out(&args.common, &file, |out| emit_oracle(&report, format, out))
}

fn emit_oracle(report: &OracleReport, format: ReportFormat, out: &mut dyn Write) -> Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, report)?;
            out.write_all(b"\n")?;
        }
        ReportFormat::Table => {
            writeln!(
                out,
                "theoretical block (cost {}, P(A=1) {}, p_y0 {}, sigma {})",
                report.cost, report.p_a1, report.p_y0, report.sigma
            )?;
            writeln!(
                out,
                "{:>6} | {:>8} {:>9} | {:>9} {:>9} | {:>9} {:>9} {:>10}",
                "p_y1",
                "fair acc",
                "fair risk",
                "uncon acc",
                "uncon dpp",
                "t*",
                "t0*",
                "common ppv"
            )?;
            for row in &report.rows {
                let s = &row.solution;
                writeln!(
                    out,
                    "{:>6} | {:>8.3} {:>9.4} | {:>9.3} {:>9.3} | {:>9.6} {:>9.6} {:>10.6}",
                    row.p_y1,
                    s.fair_accuracy,
                    s.fair_risk,
                    s.uncon_accuracy,
                    s.uncon_dpp,
                    s.t_star,
                    s.matched_thresholds.get(&0).copied().unwrap_or(f64::NAN),
                    s.matched_ppv,
                )?;
            }
        }
        ReportFormat::Csv => {
            writeln!(
                out,
                "p_y1,fair_accuracy,fair_risk,uncon_accuracy,uncon_dpp,t_star,matched_ppv,condition_value"
            )?;
            for row in &report.rows {
                let s = &row.solution;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    row.p_y1,
                    s.fair_accuracy,
                    s.fair_risk,
                    s.uncon_accuracy,
                    s.uncon_dpp,
                    s.t_star,
                    s.matched_ppv,
                    s.condition_value
                )?;
            }
        }
    }
    Ok(())
}

fn cmd_synthetic(args: SyntheticArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let seed = pick(args.common.seed, file.seed, 0);
    let replications = pick(args.replications, file.replications, 20);
    let preset = pick_opt(args.preset.clone(), file.preset.clone());
    let mut cfg: SyntheticConfig = match preset.as_deref() {
        Some("multiclass3") => experiment::multi_class_preset(3, replications, seed)?,
        Some("multiclass5") => experiment::multi_class_preset(5, replications, seed)?,
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown synthetic preset {other:?} (expected multiclass3 or multiclass5)"
            )))
        }
        None => {
            let mut c = experiment::synthetic_preset(
                pick(args.model.p_y1, file.p_y1, 0.6),
                pick(args.n_train, file.n_train, 50_000),
                pick(args.n_test, file.n_test, 5_000),
                replications,
                seed,
            );
            c.model = binary_model(&args.model, &file, 0.6)?;
            c
        }
    };
    cfg.n_train = pick(args.n_train, file.n_train, cfg.n_train);
    cfg.n_test = pick(args.n_test, file.n_test, cfg.n_test);
    cfg.train = merged_train(&args.train, &file, cfg.train);
    cfg.calibration = merged_calib(&args.calib, &file, cfg.calibration);
    cfg.estimator = merged_estimator(&args.train, &file, cfg.estimator)?;
    let report = run_synthetic(&cfg)?;
    emit_experiment(&report, &args.common, &file)
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let seed = pick(args.common.seed, file.seed, 0);
    let replications = pick(args.replications, file.replications, 20);
    let preset = pick_opt(args.preset.clone(), file.preset.clone());
    let mut cfg = match preset.as_deref() {
        Some("table1") => experiment::table1_preset(replications, seed),
        Some("sample-size") => experiment::sample_size_sweep_preset(replications, seed),
        Some("group-prob") => experiment::group_prob_sweep_preset(replications, seed),
        Some("cost") => experiment::cost_sweep_preset(replications, seed),
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown sweep preset {other:?} (expected table1, sample-size, group-prob or cost)"
            )))
        }
        None => {
            let parameter: SweepParameter =
                pick_opt(args.parameter.clone(), file.parameter.clone())
                    .ok_or_else(|| Error::Config("--parameter or --preset is required".into()))?
                    .parse()?;
            let values = pick_opt(args.values.clone(), file.values.clone())
                .ok_or_else(|| Error::Config("--values is required without a preset".into()))?;
            let mut c = experiment::synthetic_preset(
                pick(args.model.p_y1, file.p_y1, 0.6),
                pick(args.n_train, file.n_train, 25_000),
                pick(args.n_test, file.n_test, 5_000),
                replications,
                seed,
            );
            c.label = format!("sweep-{}", parameter.name());
            c.model = binary_model(&args.model, &file, 0.6)?;
            c.sweep = Some(Sweep { parameter, values });
            c
        }
    };
    cfg.n_train = pick(args.n_train, file.n_train, cfg.n_train);
    cfg.n_test = pick(args.n_test, file.n_test, cfg.n_test);
    cfg.train = merged_train(&args.train, &file, cfg.train);
    cfg.calibration = merged_calib(&args.calib, &file, cfg.calibration);
    cfg.estimator = merged_estimator(&args.train, &file, cfg.estimator)?;
    let report = run_synthetic(&cfg)?;
    emit_experiment(&report, &args.common, &file)
}

fn cmd_tabular(args: TabularArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let seed = pick(args.common.seed, file.seed, 0);
    let csv_path = pick_opt(args.csv.clone(), file.csv.clone())
        .ok_or_else(|| Error::Config("--csv is required".into()))?;
    let schema = CsvSchema {
        group_column: pick_opt(args.group_column.clone(), file.group_column.clone())
            .ok_or_else(|| Error::Config("--group-column is required".into()))?,
        label_column: pick_opt(args.label_column.clone(), file.label_column.clone())
            .ok_or_else(|| Error::Config("--label-column is required".into()))?,
        numeric_features: pick(
            args.numeric_features.clone(),
            file.numeric_features.clone(),
            Vec::new(),
        ),
        categorical_features: pick(
            args.categorical_features.clone(),
            file.categorical_features.clone(),
            Vec::new(),
        ),
    };
    let preset = pick_opt(args.preset.clone(), file.preset.clone());
    let base_train = match preset.as_deref() {
        Some("adult") => experiment::adult_train_config(),
        Some("compas") => experiment::compas_train_config(),
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown tabular preset {other:?} (expected adult or compas)"
            )))
        }
        None => TrainConfig::default(),
    };
    let mut split = experiment::bootstrap_split(0);
    split.train_frac = pick(args.train_frac, file.train_frac, split.train_frac);
    split.calib_frac = pick(args.calib_frac, file.calib_frac, split.calib_frac);
    split.test_frac = pick(args.test_frac, file.test_frac, split.test_frac);
    let cfg = TabularConfig {
        label: preset.unwrap_or_else(|| "tabular".into()),
        csv_path,
        schema,
        split,
        train: merged_train(&args.train, &file, base_train),
        calibration: merged_calib(&args.calib, &file, CalibrationConfig::default()),
        estimator: merged_estimator(&args.train, &file, experiment::Estimator::Pooled)?,
        replications: pick(args.replications, file.replications, 20),
        seed,
    };
    let report = run_tabular(&cfg)?;
    emit_experiment(&report, &args.common, &file)
}
