//! Per-location aggregate features over assigned photos.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Assignments, LocationRecord, PhotoMeta};
use crate::label::ClassLabel;

pub const N_FEATURES: usize = 11;

/// Column order of the feature vector and of the dataset file.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "photo_density",
    "total_views",
    "total_favorites",
    "total_comments",
    "avg_views",
    "avg_favorites",
    "avg_comments",
    "fav_to_view_ratio",
    "comment_to_view_ratio",
    "distinct_users",
    "max_photos_per_user",
];

pub const PHOTO_DENSITY: usize = 0;
pub const TOTAL_VIEWS: usize = 1;
pub const TOTAL_FAVORITES: usize = 2;
pub const TOTAL_COMMENTS: usize = 3;
pub const AVG_VIEWS: usize = 4;
pub const AVG_FAVORITES: usize = 5;
pub const AVG_COMMENTS: usize = 6;
pub const FAV_TO_VIEW: usize = 7;
pub const COMMENT_TO_VIEW: usize = 8;
pub const DISTINCT_USERS: usize = 9;
pub const MAX_PHOTOS_PER_USER: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub location_id: String,
    pub values: [f64; N_FEATURES],
    pub label: ClassLabel,
    /// Produced by oversampling rather than observed.
    #[serde(default)]
    pub synthetic: bool,
}

/// Ratio guarded so that an empty denominator yields 0.
fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Computes the eleven aggregates for one location.
///
/// Photo density is the photo count inside the (fixed-area) radius disk.
/// Averages over zero photos and ratios over zero views are 0.
pub fn extract_features<'a, I>(location: &LocationRecord, photos: I) -> FeatureVector
where
    I: IntoIterator<Item = &'a PhotoMeta>,
{
    let mut count = 0u64;
    let (mut views, mut favorites, mut comments) = (0u64, 0u64, 0u64);
    let mut per_owner: HashMap<&str, u64> = HashMap::new();
    for p in photos {
        count += 1;
        views += p.views;
        favorites += p.favorites;
        comments += p.comments;
        *per_owner.entry(p.owner_id.as_str()).or_default() += 1;
    }
    let (n, v, f, c) = (count as f64, views as f64, favorites as f64, comments as f64);
    let mut values = [0.0; N_FEATURES];
    values[PHOTO_DENSITY] = n;
    values[TOTAL_VIEWS] = v;
    values[TOTAL_FAVORITES] = f;
    values[TOTAL_COMMENTS] = c;
    values[AVG_VIEWS] = ratio(v, n);
    values[AVG_FAVORITES] = ratio(f, n);
    values[AVG_COMMENTS] = ratio(c, n);
    values[FAV_TO_VIEW] = ratio(f, v);
    values[COMMENT_TO_VIEW] = ratio(c, v);
    values[DISTINCT_USERS] = per_owner.len() as f64;
    values[MAX_PHOTOS_PER_USER] = per_owner.values().copied().max().unwrap_or(0) as f64;
    FeatureVector {
        location_id: location.location_id.clone(),
        values,
        label: location.label,
        synthetic: false,
    }
}

/// Labeled feature rows plus the ordered set of active classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<FeatureVector>,
    pub class_set: Vec<ClassLabel>,
}

impl Dataset {
    /// Builds a dataset whose class set is the observed labels, ascending.
    pub fn new(rows: Vec<FeatureVector>) -> Self {
        let class_set = rows
            .iter()
            .map(|r| r.label)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Dataset { rows, class_set }
    }

    pub fn with_classes(rows: Vec<FeatureVector>, mut class_set: Vec<ClassLabel>) -> Result<Self> {
        class_set.sort();
        class_set.dedup();
        if let Some(row) = rows.iter().find(|r| class_set.binary_search(&r.label).is_err()) {
            return Err(Error::InvalidParam(format!(
                "row `{}` has label {} outside the class set",
                row.location_id, row.label
            )));
        }
        Ok(Dataset { rows, class_set })
    }

    pub fn schema(&self) -> &'static [&'static str; N_FEATURES] {
        &FEATURE_NAMES
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Index of `label` within the class set.
    pub fn class_index(&self, label: ClassLabel) -> Option<usize> {
        self.class_set.binary_search(&label).ok()
    }

    /// Row counts per class, aligned with `class_set`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_set.len()];
        for row in &self.rows {
            if let Some(i) = self.class_index(row.label) {
                counts[i] += 1;
            }
        }
        counts
    }

    /// Removes locations that received no photos.
    pub fn drop_empty(self) -> Self {
        let rows = self
            .rows
            .into_iter()
            .filter(|r| r.values[PHOTO_DENSITY] > 0.0)
            .collect();
        Dataset::new(rows)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            class_set: self.class_set.clone(),
        }
    }

    /// Writes the dataset CSV; `with_synthetic` appends the `synthetic` column.
    pub fn write_csv<W: Write>(&self, out: W, with_synthetic: bool) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header = vec!["location_id"];
        header.extend(FEATURE_NAMES);
        header.push("label");
        if with_synthetic {
            header.push("synthetic");
        }
        writer.write_record(&header)?;
        for row in &self.rows {
            let mut record = Vec::with_capacity(header.len());
            record.push(row.location_id.clone());
            // `Display` for f64 is the shortest round-tripping form.
            record.extend(row.values.iter().map(|v| v.to_string()));
            record.push(row.label.to_string());
            if with_synthetic {
                record.push(row.synthetic.to_string());
            }
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads a dataset CSV, with or without the trailing `synthetic` column.
    pub fn read_csv<R: Read>(input: R) -> Result<Dataset> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut expected: Vec<&str> = vec!["location_id"];
        expected.extend(FEATURE_NAMES);
        expected.push("label");
        let with_synthetic = headers.len() == expected.len() + 1;
        if with_synthetic {
            expected.push("synthetic");
        }
        if headers != expected {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected dataset header `{}`", expected.join(",")),
            });
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let err = |message: String| Error::Parse { line, message };
            let mut values = [0.0; N_FEATURES];
            for (i, value) in values.iter_mut().enumerate() {
                let raw = record[i + 1].trim();
                *value = raw
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("{} is not a finite number: `{raw}`", FEATURE_NAMES[i])))?;
            }
            let label = record[N_FEATURES + 1].parse().map_err(|e: Error| err(e.to_string()))?;
            let synthetic = if with_synthetic {
                record[N_FEATURES + 2]
                    .trim()
                    .parse::<bool>()
                    .map_err(|_| err("synthetic must be true or false".into()))?
            } else {
                false
            };
            rows.push(FeatureVector {
                location_id: record[0].trim().to_string(),
                values,
                label,
                synthetic,
            });
        }
        Ok(Dataset::new(rows))
    }
}

/// One row per location, in location order. Locations missing from
/// `assignments` get an all-zero vector.
pub fn build_dataset(assignments: &Assignments<'_>, locations: &[LocationRecord]) -> Dataset {
    let rows = locations
        .par_iter()
        .map(|loc| {
            let photos = assignments.get(&loc.location_id).map(Vec::as_slice).unwrap_or(&[]);
            extract_features(loc, photos.iter().copied())
        })
        .collect();
    Dataset::new(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    /// Counts aligned with the dataset's class set.
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureHistogram {
    pub feature: &'static str,
    pub bins: Vec<HistogramBin>,
}

/// Equal-width histograms over each feature's observed range, split by class.
///
/// A feature with zero range collapses to a single bin.
pub fn feature_histograms(dataset: &Dataset, bins: usize) -> Result<Vec<FeatureHistogram>> {
    if bins == 0 {
        return Err(Error::InvalidParam("histogram needs at least one bin".into()));
    }
    let n_classes = dataset.class_set.len();
    let mut out = Vec::with_capacity(N_FEATURES);
    for (f, &feature) in FEATURE_NAMES.iter().enumerate() {
        if dataset.is_empty() {
            out.push(FeatureHistogram {
                feature,
                bins: Vec::new(),
            });
            continue;
        }
        let (min, max) = dataset
            .rows
            .iter()
            .map(|r| r.values[f])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let n_bins = if max > min { bins } else { 1 };
        let width = (max - min) / n_bins as f64;
        let mut hist: Vec<HistogramBin> = (0..n_bins)
            .map(|b| HistogramBin {
                low: min + b as f64 * width,
                high: if b + 1 == n_bins {
                    max
                } else {
                    min + (b + 1) as f64 * width
                },
                counts: vec![0; n_classes],
            })
            .collect();
        for row in &dataset.rows {
            let v = row.values[f];
            let b = if width > 0.0 {
                (((v - min) / width) as usize).min(n_bins - 1)
            } else {
                0
            };
            let class = dataset.class_index(row.label).expect("label in class set");
            hist[b].counts[class] += 1;
        }
        out.push(FeatureHistogram { feature, bins: hist });
    }
    Ok(out)
}

/// Writes histograms as `feature,bin_low,bin_high,class,count`, one line per
/// (feature, bin, class) including zero counts.
pub fn write_histograms_csv<W: Write>(out: W, histograms: &[FeatureHistogram], class_set: &[ClassLabel]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["feature", "bin_low", "bin_high", "class", "count"])?;
    for h in histograms {
        for bin in &h.bins {
            for (class, count) in class_set.iter().zip(&bin.counts) {
                writer.write_record([
                    h.feature.to_string(),
                    bin.low.to_string(),
                    bin.high.to_string(),
                    class.to_string(),
                    count.to_string(),
                ])?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}
