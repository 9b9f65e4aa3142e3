//! Command-line front end: dataset simulation, training, evaluation,
//! properness verification, and Kaplan-Meier estimation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::data::SurvivalDataset;
use crate::dist::BinMassCdf;
use crate::error::{Error, Result};
use crate::fit::{self, PortnoySettings, TrainConfig, TrainSetup};
use crate::grid::TimeGrid;
use crate::io::{self, TruthSpec};
use crate::km::kaplan_meier;
use crate::metrics;
use crate::model::LogitModel;
use crate::oracle::{self, PropernessConfig, WeightSource};
use crate::report::{ConfigEcho, FitBlock, KmBlock, MetricsBlock, PropernessEntry, RunReport};
use crate::rng::SplitMix64;
use crate::scoring::ScoringRule;
use crate::truth::{CensorModel, PiecewiseLinearTruth};
use crate::weights::WeightPolicy;

pub const D_CALIBRATION_BINS: usize = 20;
pub const GRID_EPS: f64 = 1e-3;

#[derive(Parser, Debug)]
#[command(
    name = "survscore",
    version,
    about = "Censored scoring rules for survival analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a synthetic dataset from a truth specification.
    Simulate(SimulateArgs),
    /// Fit a softmax model by iterative reweighting and report test metrics.
    Train(TrainArgs),
    /// Score externally produced predictions against an observation file.
    Eval(EvalArgs),
    /// Check the properness inequality by exact expectation.
    Properness(PropernessArgs),
    /// Kaplan-Meier survival curve of a dataset.
    Km(KmArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Truth specification JSON; the built-in two-group truth when omitted.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Destination CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Sidecar truth file (defaults to `<out>.truth.json`).
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "cen-log")]
    pub rule: String,
    #[arg(long, default_value_t = 32)]
    pub bins: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long = "ir-max-iters", default_value_t = 20)]
    pub ir_max_iters: usize,
    #[arg(long = "ir-tol", default_value_t = 1e-4)]
    pub ir_tol: f64,
    #[arg(long = "fallback-w", default_value_t = 1.0)]
    pub fallback_w: f64,
    #[arg(long = "z-inf-factor", default_value_t = 1.05)]
    pub z_inf_factor: f64,
    /// Categorical column selecting the group-table model.
    #[arg(long)]
    pub group: Option<String>,
    /// Report destination (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Predictions CSV with columns f_0..f_{B-1}, one row per input row.
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PropernessArgs {
    /// Restrict to one rule (portnoy, cen-log, cen-brier, cen-rps); all four
    /// when omitted.
    #[arg(long)]
    pub rule: Option<String>,
    /// Grid sizes to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 4, 8])]
    pub bins: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub perturbations: usize,
    #[arg(long, default_value_t = 0.3)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long = "fallback-w", default_value_t = 1.0)]
    pub fallback_w: f64,
    #[arg(long = "z-inf-factor", default_value_t = 1.05)]
    pub z_inf_factor: f64,
    /// Check the groups of a truth spec instead of the built-in patterns.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Negative control: replace the proper weights with deliberately wrong
    /// ones; the sweep is then expected to report violations.
    #[arg(long = "corrupt-weights", default_value_t = false)]
    pub corrupt_weights: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct KmArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command and returns the report, destination, and exit code.
pub fn run_command(command: &Command) -> Result<(RunReport, Option<PathBuf>, i32)> {
    match command {
        Command::Simulate(args) => run_simulate(args),
        Command::Train(args) => run_train(args),
        Command::Eval(args) => run_eval(args),
        Command::Properness(args) => run_properness(args),
        Command::Km(args) => run_km(args),
    }
}

/// Entry point used by the binary: prints or writes the report and maps
/// errors to exit codes.
pub fn main_run(cli: Cli) -> i32 {
    let started = Instant::now();
    match run_command(&cli.command) {
        Ok((mut report, out, code)) => {
            report.wall_clock_ms = started.elapsed().as_secs_f64() * 1e3;
            let json = report.to_json();
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, &json) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return 3;
                    }
                }
                None => print!("{json}"),
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn path_str(p: &Path) -> Option<String> {
    Some(p.display().to_string())
}

fn run_simulate(args: &SimulateArgs) -> Result<(RunReport, Option<PathBuf>, i32)> {
    let spec = match &args.truth {
        Some(path) => TruthSpec::load(path)?,
        None => TruthSpec::default_two_group(),
    };
    let population = spec.to_population()?;
    let data = population.sample(args.n, args.seed)?;
    std::fs::write(&args.out, io::dataset_to_csv(&data))?;
    let sidecar = args
        .truth_out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.truth.json", args.out.display())));
    std::fs::write(&sidecar, spec.to_json())?;

    let mut config = ConfigEcho::new("simulate");
    config.truth = args.truth.as_deref().and_then(path_str);
    config.n = Some(args.n);
    config.out = path_str(&args.out);
    let report = RunReport::new(args.seed, config);
    // Reports for simulate go to stdout; --out names the dataset itself.
    Ok((report, None, 0))
}

struct Split {
    train: SurvivalDataset,
    test: SurvivalDataset,
}

/// Seeded 60/20/20 split; the validation slice is reserved for format
/// compatibility but unused (no early stopping).
fn split_dataset(data: &SurvivalDataset, seed: u64) -> Result<Split> {
    let n = data.len();
    let idx = SplitMix64::new(seed ^ 0x5eed_0511_7000_0001).shuffled_indices(n);
    let n_train = (n as f64 * 0.6).floor() as usize;
    let n_valid = (n as f64 * 0.2).floor() as usize;
    let n_test = n - n_train - n_valid;
    if n_train == 0 || n_test == 0 {
        return Err(Error::Usage(format!(
            "dataset with {n} rows is too small for a 60/20/20 split"
        )));
    }
    Ok(Split {
        train: data.subset(&idx[..n_train])?,
        test: data.subset(&idx[n_train + n_valid..])?,
    })
}

fn test_predictions(
    model: &LogitModel,
    setup: &TrainSetup,
    test: &SurvivalDataset,
) -> Result<Vec<BinMassCdf>> {
    test.rows()
        .iter()
        .map(|row| {
            if setup.rule.is_quantile() {
                let curve =
                    model.predict_quantiles(&row.features, &setup.quantile_grid, setup.z_max)?;
                curve.to_bin_mass_cdf(&setup.time_grid)
            } else {
                model.predict_distribution(&row.features, &setup.time_grid)
            }
        })
        .collect()
}

fn run_train(args: &TrainArgs) -> Result<(RunReport, Option<PathBuf>, i32)> {
    let rule: ScoringRule = args.rule.parse()?;
    if !rule.is_trainable() {
        return Err(Error::Usage(format!(
            "`{rule}` cannot be trained on censored data"
        )));
    }
    if args.bins < 2 {
        return Err(Error::Usage(
            "evaluation metrics need --bins of at least 2".into(),
        ));
    }
    let data = io::load_dataset_csv(&args.input, args.group.as_deref())?;
    let split = split_dataset(&data, args.seed)?;
    let policy = WeightPolicy::new(args.fallback_w)?;
    let setup = TrainSetup::new(
        rule,
        args.bins,
        data.z_max(),
        GRID_EPS,
        args.z_inf_factor,
        policy,
    )?;
    let mut model = LogitModel::for_dataset(&data, args.bins)?;
    let cfg = TrainConfig {
        learning_rate: args.lr,
        epochs: args.epochs,
        seed: args.seed,
        ir_max_outer_iters: args.ir_max_iters,
        ir_tol: args.ir_tol,
    };
    let fit_report = if rule.needs_weights() {
        fit::ir_fit(&mut model, &split.train, &setup, &cfg)?
    } else {
        fit::sgd_fit(&mut model, &split.train, &setup, &[], &cfg)?
    };

    let preds = test_predictions(&model, &setup, &split.test)?;
    let test_obs: Vec<_> = split.test.rows().iter().map(|r| r.obs).collect();
    let km = kaplan_meier(&split.test);
    let cal = metrics::calibration_report(&preds, &test_obs, &km, D_CALIBRATION_BINS)?;

    let mut config = ConfigEcho::new("train");
    config.input = path_str(&args.input);
    config.rule = Some(rule.as_str().to_string());
    config.bins = Some(args.bins);
    config.lr = Some(args.lr);
    config.epochs = Some(args.epochs);
    config.ir_max_iters = Some(args.ir_max_iters);
    config.ir_tol = Some(args.ir_tol);
    config.fallback_w = Some(args.fallback_w);
    config.z_inf_factor = Some(args.z_inf_factor);
    config.group = args.group.clone();
    config.out = args.out.as_deref().and_then(path_str);

    let mut report = RunReport::new(args.seed, config);
    report.metrics = Some(MetricsBlock::from_report(&cal));
    report.fit = Some(FitBlock {
        outer_iters: fit_report.outer_iters,
        converged: fit_report.converged,
        final_loss: fit_report.final_loss,
        flagged: fit_report.flagged_weights,
    });
    report.flagged = Some(cal.flagged_count);
    Ok((report, args.out.clone(), 0))
}

fn run_eval(args: &EvalArgs) -> Result<(RunReport, Option<PathBuf>, i32)> {
    let data = io::load_dataset_csv(&args.input, args.group.as_deref())?;
    let rows = io::load_predictions_csv(&args.predictions)?;
    if rows.len() != data.len() {
        return Err(Error::InvalidInput(format!(
            "{} prediction rows for {} observations",
            rows.len(),
            data.len()
        )));
    }
    let bins = rows[0].len();
    let grid = TimeGrid::uniform(data.z_max(), bins, GRID_EPS)?;
    let preds: Vec<BinMassCdf> = rows
        .into_iter()
        .map(|masses| BinMassCdf::new(grid.clone(), masses))
        .collect::<Result<_>>()?;
    let obs: Vec<_> = data.rows().iter().map(|r| r.obs).collect();
    let km = kaplan_meier(&data);
    let cal = metrics::calibration_report(&preds, &obs, &km, D_CALIBRATION_BINS)?;

    let mut config = ConfigEcho::new("eval");
    config.input = path_str(&args.input);
    config.predictions = path_str(&args.predictions);
    config.bins = Some(bins);
    config.group = args.group.clone();
    config.out = args.out.as_deref().and_then(path_str);
    let mut report = RunReport::new(args.seed, config);
    report.metrics = Some(MetricsBlock::from_report(&cal));
    report.flagged = Some(cal.flagged_count);
    Ok((report, args.out.clone(), 0))
}

/// Built-in event masses for the properness sweep: a fixed, non-uniform,
/// strictly positive pattern on [0, 2].
pub fn sweep_event_cdf(bins: usize) -> Result<BinMassCdf> {
    let grid = TimeGrid::uniform(2.0, bins, 0.0)?;
    let masses: Vec<f64> = (0..bins)
        .map(|i| 1.25 + 0.75 * (2.2 * i as f64).sin())
        .collect();
    BinMassCdf::new(grid, masses)
}

/// The three built-in censoring patterns. Each keeps an atom deep in the
/// last grid bin so the Cen-log gap stays strictly positive, and
/// `boundary-atom` puts atoms exactly at a knot and at ζ_B (where F(c) = 1).
pub fn sweep_censoring_patterns() -> Vec<(&'static str, Vec<(f64, f64)>)> {
    vec![
        ("light", vec![(1.9, 0.3), (2.0, 0.7)]),
        ("heavy", vec![(0.4, 0.35), (0.9, 0.35), (1.9, 0.3)]),
        ("boundary-atom", vec![(1.0, 0.5), (2.0, 0.25), (1.9, 0.25)]),
    ]
}

fn run_properness(args: &PropernessArgs) -> Result<(RunReport, Option<PathBuf>, i32)> {
    let rules: Vec<ScoringRule> = match &args.rule {
        Some(name) => {
            let rule: ScoringRule = name.parse()?;
            if !rule.needs_weights() {
                return Err(Error::Usage(format!(
                    "properness sweeps cover the weighted rules, not `{rule}`"
                )));
            }
            vec![rule]
        }
        None => ScoringRule::WEIGHTED.to_vec(),
    };
    let policy = WeightPolicy::new(args.fallback_w)?;
    let source = if args.corrupt_weights {
        WeightSource::Corrupted
    } else {
        WeightSource::TrueCdf
    };

    // Each combination is a (name, truth) pair.
    let mut cases: Vec<(String, usize, PiecewiseLinearTruth)> = Vec::new();
    match &args.truth {
        Some(path) => {
            let spec = TruthSpec::load(path)?;
            for (_, truth) in spec.to_population()?.groups() {
                cases.push((truth.label.clone(), truth.event_cdf.bins(), truth.clone()));
            }
        }
        None => {
            for &bins in &args.bins {
                let event_cdf = sweep_event_cdf(bins)?;
                for (pattern, atoms) in sweep_censoring_patterns() {
                    cases.push((
                        pattern.to_string(),
                        bins,
                        PiecewiseLinearTruth::new(
                            pattern,
                            event_cdf.clone(),
                            CensorModel::Atoms(atoms),
                        )?,
                    ));
                }
            }
        }
    }

    let mut seeds = SplitMix64::new(args.seed);
    let mut entries = Vec::new();
    let mut total_violations = 0;
    for rule in &rules {
        for (pattern, bins, truth) in &cases {
            let settings = PortnoySettings {
                z_infinity: args.z_inf_factor * truth.upper(),
                policy,
            };
            let cfg = PropernessConfig {
                n_perturbations: args.perturbations,
                perturbation_scale: args.scale,
                seed: seeds.next_u64(),
                tolerance: args.tolerance,
                weight_source: source,
            };
            let result = oracle::properness_check(truth, *rule, &cfg, &settings)?;
            total_violations += result.violations;
            entries.push(PropernessEntry {
                rule: rule.as_str().to_string(),
                bins: *bins,
                pattern: pattern.clone(),
                n_perturbations: result.n_perturbations,
                min_gap: result.min_gap,
                min_gap_separated: result.min_gap_separated,
                violations: result.violations,
            });
        }
    }

    let mut config = ConfigEcho::new("properness");
    config.rule = args.rule.clone();
    config.truth = args.truth.as_deref().and_then(path_str);
    config.perturbations = Some(args.perturbations);
    config.scale = Some(args.scale);
    config.tolerance = Some(args.tolerance);
    config.fallback_w = Some(args.fallback_w);
    config.z_inf_factor = Some(args.z_inf_factor);
    config.corrupt_weights = Some(args.corrupt_weights);
    config.out = args.out.as_deref().and_then(path_str);
    let mut report = RunReport::new(args.seed, config);
    report.properness = Some(entries);
    let code = if total_violations > 0 { 1 } else { 0 };
    Ok((report, args.out.clone(), code))
}

fn run_km(args: &KmArgs) -> Result<(RunReport, Option<PathBuf>, i32)> {
    let data = io::load_dataset_csv(&args.input, args.group.as_deref())?;
    let km = kaplan_meier(&data);
    let mut config = ConfigEcho::new("km");
    config.input = path_str(&args.input);
    config.group = args.group.clone();
    config.out = args.out.as_deref().and_then(path_str);
    let mut report = RunReport::new(args.seed, config);
    report.km = Some(KmBlock {
        event_times: km.event_times().to_vec(),
        survival: km.survival_values().to_vec(),
    });
    Ok((report, args.out.clone(), 0))
}
