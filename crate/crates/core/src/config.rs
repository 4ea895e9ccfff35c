//! Experiment configuration.
//!
//! The file is a list of `key = value` lines. Blank lines and lines starting
//! with `#` are ignored. List values are comma separated.
//!
//! ```text
//! dataset.path = data/jureczko.csv
//! bucket.granularity_months = 6
//! pairs.gap_buckets = 1
//! pairs.configurations = CC, IC, CI, II
//! techniques = Amasaki15, Watanabe08, CamargoCruz09, Nam15, Ma12
//! seed = 42
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use thiserror::Error;

use crate::dataset::{parse_date, BucketAnchor, Schema};
use crate::pairs::ConfigurationKind;
use crate::stats::{DEFAULT_EXACT_MAX_N, DEFAULT_STABILITY_THRESHOLD};
use crate::treatments::{Technique, TreatmentParams};
use crate::tree::TreeParams;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {message}")]
    Value { line: usize, key: String, message: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset_path: PathBuf,
    pub schema: Schema,
    /// Keep only releases dated within `[from, to]`.
    pub date_from: Option<NaiveDate>,
    pub date_to: Option<NaiveDate>,
    pub granularity_months: u32,
    pub anchor: BucketAnchor,
    pub gap_buckets: usize,
    pub configurations: Vec<ConfigurationKind>,
    pub techniques: Vec<Technique>,
    pub tree: TreeParams,
    pub treatment: TreatmentParams,
    pub seed: u64,
    pub balance: bool,
    pub crossval_folds: Option<usize>,
    pub output_dir: PathBuf,
    pub stability_threshold: f64,
    pub exact_max_n: usize,
    pub prediction_threshold: f64,
}

const KEYS: &[&str] = &[
    "dataset.path",
    "dataset.columns.project",
    "dataset.columns.version",
    "dataset.columns.date",
    "dataset.columns.class",
    "dataset.columns.defects",
    "dataset.columns.features",
    "dataset.from",
    "dataset.to",
    "bucket.granularity_months",
    "bucket.anchor",
    "pairs.gap_buckets",
    "pairs.configurations",
    "techniques",
    "tree.pruning_confidence",
    "tree.min_leaf_weight",
    "tree.prune",
    "tree.prediction_threshold",
    "seed",
    "balance",
    "baseline.crossval_folds",
    "output.dir",
    "treatments.amasaki15.attr_mad_mult",
    "treatments.amasaki15.relevancy_mult",
    "treatments.nam15.violation_threshold",
    "stability.threshold",
    "stats.exact_max_n",
];

/// Raw `key -> (line, value)` map with syntax and key-name checks applied.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, (usize, String)>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: "expected `key = value`".into(),
            });
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { line, key: key.into() });
        }
        if out.insert(key.to_string(), (line, value.trim().to_string())).is_some() {
            return Err(ConfigError::Duplicate { line, key: key.into() });
        }
    }
    Ok(out)
}

struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.0
            .get(key)
            .map(|(line, v)| {
                v.parse::<T>().map_err(|e| ConfigError::Value {
                    line: *line,
                    key: key.into(),
                    message: e.to_string(),
                })
            })
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let Some((line, v)) = self.0.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>().map_err(|e| ConfigError::Value {
                    line: *line,
                    key: key.into(),
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    fn date(&self, key: &str) -> Result<Option<NaiveDate>, ConfigError> {
        self.0
            .get(key)
            .map(|(line, v)| {
                parse_date(v).ok_or_else(|| ConfigError::Value {
                    line: *line,
                    key: key.into(),
                    message: format!("`{v}` is not a YYYY-MM-DD date"),
                })
            })
            .transpose()
    }

    fn line(&self, key: &str) -> usize {
        self.0.get(key).map_or(0, |(l, _)| *l)
    }
}

impl ExperimentConfig {
    /// Parses configuration text. Relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let e = Entries(parse_entries(text)?);
        let dataset_path: PathBuf = e.get("dataset.path")?.ok_or(ConfigError::Missing("dataset.path"))?;
        let seed = e.get("seed")?.ok_or(ConfigError::Missing("seed"))?;

        let mut schema = Schema::default();
        for (key, slot) in [
            ("dataset.columns.project", &mut schema.project),
            ("dataset.columns.version", &mut schema.version),
            ("dataset.columns.date", &mut schema.date),
            ("dataset.columns.class", &mut schema.class),
            ("dataset.columns.defects", &mut schema.defects),
        ] {
            if let Some(v) = e.get::<String>(key)? {
                *slot = v;
            }
        }
        schema.features = e.list("dataset.columns.features")?.unwrap_or_default();

        let defaults = TreeParams::default();
        let tree = TreeParams {
            pruning_confidence: e.get("tree.pruning_confidence")?.unwrap_or(defaults.pruning_confidence),
            min_leaf_weight: e.get("tree.min_leaf_weight")?.unwrap_or(defaults.min_leaf_weight),
            prune: e.get("tree.prune")?.unwrap_or(defaults.prune),
            seed,
        };
        if let Err(err) = tree.validate() {
            return Err(ConfigError::Invalid(err.to_string()));
        }

        let mut treatment = TreatmentParams::default();
        if let Some(v) = e.get("treatments.amasaki15.attr_mad_mult")? {
            treatment.amasaki.attr_mad_mult = v;
        }
        if let Some(v) = e.get("treatments.amasaki15.relevancy_mult")? {
            treatment.amasaki.relevancy_mult = v;
        }
        treatment.nam.violation_threshold = e.get("treatments.nam15.violation_threshold")?;
        if let Some(t) = treatment.nam.violation_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(ConfigError::Value {
                    line: e.line("treatments.nam15.violation_threshold"),
                    key: "treatments.nam15.violation_threshold".into(),
                    message: "must lie in [0, 1]".into(),
                });
            }
        }

        let granularity_months = e.get("bucket.granularity_months")?.unwrap_or(6);
        if granularity_months == 0 {
            return Err(ConfigError::Value {
                line: e.line("bucket.granularity_months"),
                key: "bucket.granularity_months".into(),
                message: "must be at least 1".into(),
            });
        }
        let crossval_folds: Option<usize> = e.get("baseline.crossval_folds")?;
        if crossval_folds.is_some_and(|k| k < 2) {
            return Err(ConfigError::Value {
                line: e.line("baseline.crossval_folds"),
                key: "baseline.crossval_folds".into(),
                message: "need at least 2 folds".into(),
            });
        }
        let configurations = match e.list("pairs.configurations")? {
            Some(v) => v,
            None if crossval_folds.is_some() => Vec::new(),
            None => ConfigurationKind::ALL.to_vec(),
        };
        if configurations.is_empty() && crossval_folds.is_none() {
            return Err(ConfigError::Invalid(
                "no time-aware configuration and no cross-validation baseline".into(),
            ));
        }
        let techniques = e.list("techniques")?.unwrap_or_else(|| Technique::PUBLISHED.to_vec());
        if techniques.is_empty() {
            return Err(ConfigError::Invalid("at least one technique is required".into()));
        }

        let prediction_threshold = e.get("tree.prediction_threshold")?.unwrap_or(0.5);
        let output_dir: PathBuf = e.get("output.dir")?.unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self {
            dataset_path: base.join(dataset_path),
            schema,
            date_from: e.date("dataset.from")?,
            date_to: e.date("dataset.to")?,
            granularity_months,
            anchor: e.get("bucket.anchor")?.unwrap_or_default(),
            gap_buckets: e.get("pairs.gap_buckets")?.unwrap_or(1),
            configurations,
            techniques,
            tree,
            treatment,
            seed,
            balance: e.get("balance")?.unwrap_or(false),
            crossval_folds,
            output_dir: base.join(output_dir),
            stability_threshold: e.get("stability.threshold")?.unwrap_or(DEFAULT_STABILITY_THRESHOLD),
            exact_max_n: e.get("stats.exact_max_n")?.unwrap_or(DEFAULT_EXACT_MAX_N),
            prediction_threshold,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigLoadError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigLoadError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok(Self::parse(&text, base)?)
    }
}

#[derive(Debug, Error)]
pub enum ConfigLoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
}
