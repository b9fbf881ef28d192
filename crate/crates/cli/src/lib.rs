//! Command-line front end for the scenic pipeline.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::RunOptions;
use crate::config::PipelineConfig;
use crate::error::{CliError, EXIT_INTERNAL, EXIT_OK, EXIT_USAGE};

fn with_default(text: &str, key: &str) -> String {
    let value = PipelineConfig::default().get(key).expect("known key");
    format!("{text} [default: {value}]")
}

#[derive(Debug, Parser)]
#[command(
    name = "scenic",
    version,
    about = "Predict location rating classes from geo-tagged photo metadata"
)]
pub struct Cli {
    /// Worker threads; 0 uses one per core. Results never depend on it [default: 0]
    #[arg(
        long,
        global = true,
        value_name = "N",
        default_value_t = 0,
        hide_default_value = true
    )]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Join photos to locations and write the feature dataset CSV
    Ingest {
        /// Photo metadata CSV (required)
        #[arg(long, value_name = "CSV")]
        photos: PathBuf,
        /// Location CSV (required)
        #[arg(long, value_name = "CSV")]
        locations: PathBuf,
        /// Output CSV, written atomically (required)
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Cross-validate a pipeline and write the JSON report
    Run {
        /// Dataset CSV (required)
        #[arg(long, value_name = "CSV")]
        dataset: PathBuf,
        /// JSON report path, an array with --sweep [default: no report file]
        #[arg(long, value_name = "JSON")]
        report: Option<PathBuf>,
        /// Evaluate all six bagging/boosting x J48/REPTree/RF combinations [default: off]
        #[arg(long)]
        sweep: bool,
        /// CSV summary with one row per pipeline [default: not written]
        #[arg(long, value_name = "CSV")]
        summary_csv: Option<PathBuf>,
        /// Train on the whole dataset and save the model here [default: not written]
        #[arg(long, value_name = "JSON")]
        model_out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write per-feature, per-class histograms
    Histogram {
        /// Dataset CSV (required)
        #[arg(long, value_name = "CSV")]
        dataset: PathBuf,
        /// Equal-width bins per feature
        #[arg(long, value_name = "N", default_value_t = 10)]
        bins: usize,
        /// Output CSV, written atomically (required)
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
    },
    /// Balance a dataset with SMOTE; output gains a `synthetic` column
    Smote {
        /// Dataset CSV (required)
        #[arg(long, value_name = "CSV")]
        dataset: PathBuf,
        /// Output CSV, written atomically (required)
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Apply a saved model to a dataset
    Predict {
        /// Saved model JSON (required)
        #[arg(long, value_name = "JSON")]
        model: PathBuf,
        /// Dataset CSV (required)
        #[arg(long, value_name = "CSV")]
        dataset: PathBuf,
        /// Output CSV, written atomically (required)
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
    },
}

/// Pipeline settings. Flags override values read from `--config`.
#[derive(Debug, Args, Default)]
pub struct ConfigArgs {
    /// Flat `key = value` config file; keys are the flag names with `_` [default: none]
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "M", help = with_default("Photo join radius in meters", "radius_m"))]
    pub radius_m: Option<String>,
    /// Drop locations without any photo [default: false]
    #[arg(long)]
    pub drop_empty: bool,
    #[arg(long, value_name = "TARGET", help = with_default("Oversampling: none | majority | count:N | percent:P", "smote"))]
    pub smote: Option<String>,
    #[arg(long, value_name = "K", help = with_default("SMOTE nearest neighbours", "smote_k"))]
    pub smote_k: Option<String>,
    #[arg(long, value_name = "NAME", help = with_default("Base learner: j48 | reptree | rf", "learner"))]
    pub learner: Option<String>,
    #[arg(long, value_name = "NAME", help = with_default("Split criterion: default | gain_ratio | info_gain", "criterion"))]
    pub criterion: Option<String>,
    #[arg(long, value_name = "W", help = with_default("Minimum weight per leaf, or default (2 for j48/reptree, 1 for rf)", "min_leaf"))]
    pub min_leaf: Option<String>,
    #[arg(long, value_name = "D", help = with_default("Depth limit: default | unlimited | N", "max_depth"))]
    pub max_depth: Option<String>,
    #[arg(long, value_name = "NAME", help = with_default("Pruning: default | none | pessimistic | reduced_error", "pruning"))]
    pub pruning: Option<String>,
    #[arg(long, value_name = "CF", help = with_default("Pessimistic pruning confidence", "confidence"))]
    pub confidence: Option<String>,
    #[arg(long, value_name = "F", help = with_default("Reduced-error pruning holdout fraction", "holdout_fraction"))]
    pub holdout_fraction: Option<String>,
    #[arg(long, value_name = "N", help = with_default("Trees per random forest", "n_trees"))]
    pub n_trees: Option<String>,
    #[arg(long, value_name = "N", help = with_default("Features tried per forest split", "features_per_split"))]
    pub features_per_split: Option<String>,
    #[arg(long, value_name = "BOOL", help = with_default("Bootstrap each forest tree", "bootstrap"))]
    pub bootstrap: Option<String>,
    #[arg(long, value_name = "NAME", help = with_default("Ensemble: none | bagging | boosting", "ensemble"))]
    pub ensemble: Option<String>,
    #[arg(long, value_name = "N", help = with_default("Bagging or boosting iterations", "iterations"))]
    pub iterations: Option<String>,
    #[arg(long, value_name = "NAME", help = with_default("Boosting: reweight | resample", "boost_mode"))]
    pub boost_mode: Option<String>,
    #[arg(long, value_name = "K", help = with_default("Cross-validation folds", "k_folds"))]
    pub k_folds: Option<String>,
    #[arg(long, value_name = "NAME", help = with_default("Oversampling placement: paper_faithful | leakage_safe", "mode"))]
    pub mode: Option<String>,
    #[arg(long, value_name = "N", help = with_default("Random seed", "seed"))]
    pub seed: Option<String>,
}

impl ConfigArgs {
    /// Defaults, then the config file, then explicit flags.
    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("reading config {}: {e}", path.display())))?;
                PipelineConfig::parse(&text)?
            }
            None => PipelineConfig::default(),
        };
        let overrides = [
            ("radius_m", &self.radius_m),
            ("smote", &self.smote),
            ("smote_k", &self.smote_k),
            ("learner", &self.learner),
            ("criterion", &self.criterion),
            ("min_leaf", &self.min_leaf),
            ("max_depth", &self.max_depth),
            ("pruning", &self.pruning),
            ("confidence", &self.confidence),
            ("holdout_fraction", &self.holdout_fraction),
            ("n_trees", &self.n_trees),
            ("features_per_split", &self.features_per_split),
            ("bootstrap", &self.bootstrap),
            ("ensemble", &self.ensemble),
            ("iterations", &self.iterations),
            ("boost_mode", &self.boost_mode),
            ("k_folds", &self.k_folds),
            ("mode", &self.mode),
            ("seed", &self.seed),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        if self.drop_empty {
            config.drop_empty = true;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Runs one parsed command, returning what to print on stdout.
pub fn execute(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Ingest {
            photos,
            locations,
            out,
            config,
        } => {
            let s = commands::ingest(photos, locations, out, &config.resolve()?)?;
            Ok(format!(
                "locations: {}, photos: {}, assignments: {}, rows: {}\n",
                s.locations, s.photos, s.assignments, s.rows
            ))
        }
        Command::Run {
            dataset,
            report,
            sweep,
            summary_csv,
            model_out,
            config,
        } => {
            let options = RunOptions {
                report: report.as_deref(),
                sweep: *sweep,
                summary_csv: summary_csv.as_deref(),
                model_out: model_out.as_deref(),
            };
            commands::run(dataset, &config.resolve()?, &options)
        }
        Command::Histogram { dataset, bins, out } => {
            let rows = commands::histogram(dataset, *bins, out)?;
            Ok(format!("histogram rows: {rows}\n"))
        }
        Command::Smote { dataset, out, config } => {
            let (original, synthetic) = commands::smote(dataset, out, &config.resolve()?)?;
            Ok(format!("original rows: {original}, synthetic rows: {synthetic}\n"))
        }
        Command::Predict { model, dataset, out } => {
            let n = commands::predict(model, dataset, out)?;
            Ok(format!("predictions: {n}\n"))
        }
    }
}

fn in_pool(threads: usize, f: impl FnOnce() -> Result<String, CliError> + Send) -> Result<String, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    pool.install(f)
}

/// Full entry point: parses `args`, runs, prints, and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        in_pool(cli.threads, || execute(&cli.command))
    }));
    match outcome {
        Ok(Ok(stdout)) => {
            print!("{stdout}");
            let _ = std::io::stdout().flush();
            EXIT_OK
        }
        Ok(Err(e)) => {
            eprintln!("scenic: {}: {e}", e.kind());
            e.exit_code()
        }
        Err(_) => {
            eprintln!("scenic: internal error: unexpected panic");
            EXIT_INTERNAL
        }
    }
}
