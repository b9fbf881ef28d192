//! The five subcommands as plain functions over paths and a config.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use scenic_core::eval::{cross_validate, EvalReport, Score};
use scenic_core::features::{build_dataset, feature_histograms, write_histograms_csv};
use scenic_core::ingest::{assign_photos, parse_locations, parse_photos};
use scenic_core::model::{load_model, save_model};
use scenic_core::rng::Purpose;
use scenic_core::sampling::balance;
use scenic_core::trees::TrainSet;
use scenic_core::{Dataset, Model, RngSeed};
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::config::{EnsembleChoice, LearnerKind, PipelineConfig};
use crate::error::{CliError, StageExt};

fn open(path: &Path, stage: &'static str) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|source| CliError::Io {
        stage,
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `path` through a temporary file in the same directory that is
/// renamed into place only once `body` succeeds.
pub fn write_atomic(
    path: &Path,
    stage: &'static str,
    body: impl FnOnce(&mut BufWriter<&mut File>) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let io_err = |source: io::Error| CliError::Io {
        stage,
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    {
        let mut out = BufWriter::new(tmp.as_file_mut());
        body(&mut out)?;
        out.flush().map_err(io_err)?;
    }
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    Dataset::read_csv(open(path, "read dataset")?).stage("read dataset")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestSummary {
    pub locations: usize,
    pub photos: usize,
    pub assignments: usize,
    pub rows: usize,
}

pub fn ingest(photos: &Path, locations: &Path, out: &Path, config: &PipelineConfig) -> Result<IngestSummary, CliError> {
    let photo_list = parse_photos(open(photos, "parse photos")?).stage("parse photos")?;
    let location_list = parse_locations(open(locations, "parse locations")?).stage("parse locations")?;
    let assignments = assign_photos(&photo_list, &location_list, config.radius_m).stage("assign photos")?;
    let mut dataset = build_dataset(&assignments, &location_list);
    if config.drop_empty {
        dataset = dataset.drop_empty();
    }
    write_atomic(out, "write dataset", |w| {
        dataset.write_csv(w, false).stage("write dataset")
    })?;
    Ok(IngestSummary {
        locations: location_list.len(),
        photos: photo_list.len(),
        assignments: assignments.values().map(Vec::len).sum(),
        rows: dataset.len(),
    })
}

/// One line of the result table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub classifier: String,
    pub accuracy: f64,
    pub precision: Score,
    pub recall: f64,
}

pub const TABLE_HEADER: [&str; 4] = ["Classifier", "Accuracy", "Precision", "Recall"];

/// Fixed-width text table, percentages to two decimals.
pub fn format_table(rows: &[TableRow]) -> String {
    let width = rows
        .iter()
        .map(|r| r.classifier.len())
        .chain([TABLE_HEADER[0].len()])
        .max()
        .unwrap_or(0);
    let mut out = format!(
        "{:<width$}  {:>9}  {:>9}  {:>9}\n",
        TABLE_HEADER[0], TABLE_HEADER[1], TABLE_HEADER[2], TABLE_HEADER[3]
    );
    for r in rows {
        out.push_str(&format!(
            "{:<width$}  {:>9.2}  {:>9}  {:>9.2}\n",
            r.classifier,
            r.accuracy,
            r.precision.to_string(),
            r.recall
        ));
    }
    out
}

/// Machine-readable summary: full precision, `undefined` for missing precision.
pub fn write_summary_csv(w: &mut impl Write, rows: &[TableRow]) -> io::Result<()> {
    writeln!(w, "classifier,accuracy,precision,recall")?;
    for r in rows {
        let precision = r.precision.value().map_or("undefined".to_string(), |p| p.to_string());
        writeln!(w, "{},{},{},{}", r.classifier, r.accuracy, precision, r.recall)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions<'a> {
    pub report: Option<&'a Path>,
    pub sweep: bool,
    pub summary_csv: Option<&'a Path>,
    pub model_out: Option<&'a Path>,
}

/// The six ensemble combinations, bagging first, learners in table order.
pub fn sweep_configs(base: &PipelineConfig) -> Vec<PipelineConfig> {
    [EnsembleChoice::Bagging, EnsembleChoice::Boosting]
        .into_iter()
        .flat_map(|ensemble| {
            LearnerKind::ALL.into_iter().map(move |learner| PipelineConfig {
                learner,
                ensemble,
                ..base.clone()
            })
        })
        .collect()
}

fn write_json(path: &Path, stage: &'static str, value: &impl Serialize) -> Result<(), CliError> {
    write_atomic(path, stage, |w| {
        serde_json::to_writer_pretty(&mut *w, value)
            .map_err(|e| CliError::Internal(format!("serializing {stage}: {e}")))?;
        writeln!(w).map_err(|source| CliError::Io {
            stage,
            path: path.to_path_buf(),
            source,
        })
    })
}

/// Trains the configured pipeline on the whole dataset, balanced first
/// when oversampling is on.
pub fn train_final(dataset: &Dataset, config: &PipelineConfig) -> Result<Model, CliError> {
    let seed = RngSeed(config.seed);
    let pipeline = config.pipeline();
    let balanced;
    let data = match &pipeline.smote {
        Some(smote) => {
            balanced = balance(dataset, smote, seed.derive(Purpose::Smote, 0)).stage("balance")?;
            &balanced
        }
        None => dataset,
    };
    let train = TrainSet::from_dataset(data).stage("train")?;
    pipeline
        .ensemble
        .fit(&pipeline.learner, &train, seed.derive(Purpose::Pipeline, 0))
        .stage("train")
}

/// Cross-validates one pipeline (or the six-way sweep), writes the JSON
/// report and returns the text table.
pub fn run(dataset_path: &Path, config: &PipelineConfig, options: &RunOptions<'_>) -> Result<String, CliError> {
    if options.sweep && options.model_out.is_some() {
        return Err(CliError::Usage("--model-out cannot be combined with --sweep".into()));
    }
    let dataset = read_dataset(dataset_path)?;
    let configs = if options.sweep {
        sweep_configs(config)
    } else {
        vec![config.clone()]
    };
    let mut reports: Vec<EvalReport> = Vec::with_capacity(configs.len());
    let mut rows = Vec::with_capacity(configs.len());
    for c in &configs {
        let report =
            cross_validate(&c.pipeline(), &dataset, c.k_folds, RngSeed(c.seed), c.mode).stage("cross-validate")?;
        rows.push(TableRow {
            classifier: c.classifier_name(),
            accuracy: report.accuracy,
            precision: report.macro_precision,
            recall: report.macro_recall,
        });
        reports.push(report);
    }
    if let Some(path) = options.report {
        if options.sweep {
            write_json(path, "write report", &reports)?;
        } else {
            write_json(path, "write report", &reports[0])?;
        }
    }
    if let Some(path) = options.summary_csv {
        write_atomic(path, "write summary", |w| {
            write_summary_csv(w, &rows).map_err(|source| CliError::Io {
                stage: "write summary",
                path: path.to_path_buf(),
                source,
            })
        })?;
    }
    if let Some(path) = options.model_out {
        let model = train_final(&dataset, config)?;
        write_atomic(path, "write model", |w| save_model(&model, w).stage("write model"))?;
    }
    Ok(format_table(&rows))
}

pub fn histogram(dataset_path: &Path, bins: usize, out: &Path) -> Result<usize, CliError> {
    let dataset = read_dataset(dataset_path)?;
    let hists = feature_histograms(&dataset, bins).stage("histogram")?;
    write_atomic(out, "write histogram", |w| {
        write_histograms_csv(w, &hists, &dataset.class_set).stage("write histogram")
    })?;
    Ok(hists.iter().map(|h| h.bins.len() * dataset.class_set.len()).sum())
}

/// Balances a dataset file; returns (original rows, synthetic rows).
pub fn smote(dataset_path: &Path, out: &Path, config: &PipelineConfig) -> Result<(usize, usize), CliError> {
    let dataset = read_dataset(dataset_path)?;
    let balanced = match config.smote_params() {
        Some(params) => balance(&dataset, &params, RngSeed(config.seed).derive(Purpose::Smote, 0)).stage("balance")?,
        None => dataset.clone(),
    };
    write_atomic(out, "write dataset", |w| {
        balanced.write_csv(w, true).stage("write dataset")
    })?;
    Ok((dataset.len(), balanced.len() - dataset.len()))
}

/// Applies a saved model to every row; writes
/// `location_id,label,predicted,p_<class>...`.
pub fn predict(model_path: &Path, dataset_path: &Path, out: &Path) -> Result<usize, CliError> {
    let model = load_model(open(model_path, "load model")?).stage("load model")?;
    let dataset = read_dataset(dataset_path)?;
    let predictions = dataset
        .rows
        .iter()
        .map(|row| model.predict(&row.values))
        .collect::<scenic_core::Result<Vec<_>>>()
        .stage("predict")?;
    write_atomic(out, "write predictions", |w| {
        let io_err = |source| CliError::Io {
            stage: "write predictions",
            path: out.to_path_buf(),
            source,
        };
        let mut header = vec!["location_id".to_string(), "label".into(), "predicted".into()];
        header.extend(model.classes().iter().map(|c| format!("p_{c}")));
        writeln!(w, "{}", header.join(",")).map_err(io_err)?;
        for (row, p) in dataset.rows.iter().zip(&predictions) {
            let shares: Vec<String> = p.distribution.iter().map(f64::to_string).collect();
            writeln!(
                w,
                "{},{},{},{}",
                csv_field(&row.location_id),
                row.label,
                p.label,
                shares.join(",")
            )
            .map_err(io_err)?;
        }
        Ok(())
    })?;
    Ok(predictions.len())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
