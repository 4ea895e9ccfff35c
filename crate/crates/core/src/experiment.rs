//! End-to-end runs: ingest, bucket, pair, treat, train, evaluate.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::{info, warn};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::dataset::{bucketize_anchored, dataset_summary, parse_dataset, DatasetError, Release, TimeSeriesDataset};
use crate::metrics::evaluate_pair;
use crate::pairs::{crossval_pairs, enumerate_pairs, PairError, TrainTestPair};
use crate::results::{write_results, ResultRecord, ResultsError};
use crate::stats::undersample;
use crate::treatments::{PairData, Technique};
use crate::tree::train_tree;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot open dataset {path}: {source}")]
    Open { path: PathBuf, source: std::io::Error },
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("no releases between the configured dates")]
    NoReleasesInRange,
    #[error("cross-validation baseline: {0}")]
    Pairs(#[from] PairError),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Results(#[from] ResultsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// True for problems with the user's input rather than the tool.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Self::Open { .. } | Self::Dataset(_) | Self::NoReleasesInRange | Self::Pairs(_)
        )
    }
}

#[derive(Debug, Clone)]
pub struct LoadedData {
    pub feature_names: Vec<String>,
    pub timeline: TimeSeriesDataset,
}

impl LoadedData {
    pub fn releases(&self) -> Vec<Arc<Release>> {
        self.timeline.releases().cloned().collect()
    }
}

/// Reads, date-filters and buckets the configured dataset.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<LoadedData, RunError> {
    let file = File::open(&cfg.dataset_path).map_err(|source| RunError::Open {
        path: cfg.dataset_path.clone(),
        source,
    })?;
    let parsed = parse_dataset(std::io::BufReader::new(file), &cfg.schema)?;
    let releases: Vec<Release> = parsed
        .releases
        .into_iter()
        .filter(|r| cfg.date_from.is_none_or(|d| r.release_date >= d))
        .filter(|r| cfg.date_to.is_none_or(|d| r.release_date <= d))
        .collect();
    if releases.is_empty() {
        return Err(RunError::NoReleasesInRange);
    }
    let timeline = bucketize_anchored(releases, cfg.granularity_months, cfg.anchor)?;
    Ok(LoadedData {
        feature_names: parsed.feature_names,
        timeline,
    })
}

/// Pairs in run order: each configuration in config order, then the
/// cross-validation baseline.
pub fn planned_pairs(cfg: &ExperimentConfig, data: &LoadedData) -> Result<Vec<TrainTestPair>, RunError> {
    let mut pairs: Vec<TrainTestPair> = cfg
        .configurations
        .iter()
        .flat_map(|&kind| enumerate_pairs(&data.timeline, kind, cfg.gap_buckets))
        .collect();
    if let Some(folds) = cfg.crossval_folds {
        pairs.extend(crossval_pairs(&data.releases(), folds, cfg.seed)?);
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub info: Vec<String>,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
}

impl Diagnostics {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Checks a configuration against its dataset without training anything.
pub fn validate(cfg: &ExperimentConfig) -> Diagnostics {
    let mut d = Diagnostics::default();
    let data = match load_dataset(cfg) {
        Ok(data) => data,
        Err(e) => {
            d.errors.push(e.to_string());
            return d;
        }
    };
    let ts = &data.timeline;
    d.info.push(format!(
        "{} releases, {} features, {} buckets of {} months",
        ts.releases().count(),
        data.feature_names.len(),
        ts.len(),
        ts.granularity_months
    ));
    for b in dataset_summary(ts) {
        d.info.push(format!(
            "bucket {} [{} .. {}): {} versions, {} instances",
            b.index, b.start, b.end, b.releases, b.instances
        ));
    }
    let mut time_aware = 0;
    for &kind in &cfg.configurations {
        let n = enumerate_pairs(ts, kind, cfg.gap_buckets).len();
        time_aware += n;
        d.info.push(format!("{kind}: {n} pairs"));
    }
    if !cfg.configurations.is_empty() && time_aware == 0 {
        d.warnings.push(format!(
            "no feasible time-aware pairs with {} buckets and gap {}",
            ts.len(),
            cfg.gap_buckets
        ));
    }
    if let Some(folds) = cfg.crossval_folds {
        match crossval_pairs(&data.releases(), folds, cfg.seed) {
            Ok(p) => {
                let tested: usize = p.iter().map(|p| p.test.len()).sum();
                let total = data.releases().len();
                d.info
                    .push(format!("CV: {} pairs testing {tested} of {total} releases", p.len()));
                if tested * 2 < total {
                    d.warnings.push(format!(
                        "strict filtering leaves only {tested} of {total} releases testable by the cross-validation baseline"
                    ));
                }
            }
            Err(e) => d.errors.push(format!("cross-validation baseline: {e}")),
        }
    }
    d
}

/// Stateless 64-bit mixer used to derive per-pair seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn pair_seed(seed: u64, ordinal: usize) -> u64 {
    splitmix64(seed ^ splitmix64(ordinal as u64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeDump {
    pub technique: Technique,
    pub ordinal: usize,
    pub pair: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutcome {
    pub records: Vec<ResultRecord>,
    pub pairs_planned: usize,
    /// (technique, pair) units attempted.
    pub units: usize,
    pub units_skipped: usize,
    /// Test versions across every unit that was processed.
    pub versions_expected: usize,
    pub versions_skipped: usize,
    pub trees: Vec<TreeDump>,
}

struct UnitResult {
    records: Vec<ResultRecord>,
    expected: usize,
    tree: Option<String>,
}

fn run_unit(
    cfg: &ExperimentConfig,
    technique: Technique,
    pair: &TrainTestPair,
    data: &PairData,
    dump: bool,
) -> Result<UnitResult, String> {
    let treated = technique.apply(data, &cfg.treatment).map_err(|e| e.to_string())?;
    let tree = train_tree(&treated.train, &cfg.tree).map_err(|e| e.to_string())?;
    let evaluations = evaluate_pair(&tree, &treated, cfg.prediction_threshold).map_err(|e| e.to_string())?;
    let spec = pair.spec;
    let records = evaluations
        .into_iter()
        .map(|e| ResultRecord {
            technique: technique.name().to_string(),
            kind: spec.kind,
            window: spec.window,
            split_index: spec.split_index,
            gap: spec.gap,
            test_project: e.version.project,
            test_version: e.version.version,
            confusion: e.confusion,
            scores: e.scores,
            auc_degenerate: e.auc_degenerate,
        })
        .collect();
    Ok(UnitResult {
        records,
        expected: pair.test.len(),
        tree: dump.then(|| tree.dump()),
    })
}

fn describe(pair: &TrainTestPair) -> String {
    let s = pair.spec;
    format!("{} k={} split={} gap={}", s.kind, s.window, s.split_index, s.gap)
}

/// Runs every technique on every planned pair. Work is spread over the rayon
/// pool; output order is technique, then pair, then test version.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    data: &LoadedData,
    threads: Option<usize>,
    dump_trees: bool,
) -> Result<RunOutcome, RunError> {
    let pairs = planned_pairs(cfg, data)?;
    let prepared: Vec<Result<PairData, String>> = pairs
        .iter()
        .enumerate()
        .map(|(ordinal, pair)| {
            let mut d = PairData::from_pair(pair);
            if cfg.balance {
                d.train = undersample(&d.train, pair_seed(cfg.seed, ordinal)).map_err(|e| e.to_string())?;
            }
            Ok(d)
        })
        .collect();
    let units: Vec<(Technique, usize)> = cfg
        .techniques
        .iter()
        .flat_map(|&t| (0..pairs.len()).map(move |i| (t, i)))
        .collect();
    let work = || -> Vec<Result<UnitResult, String>> {
        units
            .par_iter()
            .map(|&(t, i)| {
                let data = prepared[i].as_ref().map_err(Clone::clone)?;
                run_unit(cfg, t, &pairs[i], data, dump_trees)
            })
            .collect()
    };
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(work),
        None => work(),
    };

    let mut outcome = RunOutcome {
        pairs_planned: pairs.len(),
        units: units.len(),
        ..RunOutcome::default()
    };
    for (&(technique, ordinal), result) in units.iter().zip(results) {
        match result {
            Ok(unit) => {
                outcome.versions_expected += unit.expected;
                outcome.versions_skipped += unit.expected - unit.records.len();
                outcome.records.extend(unit.records);
                if let Some(text) = unit.tree {
                    outcome.trees.push(TreeDump {
                        technique,
                        ordinal,
                        pair: describe(&pairs[ordinal]),
                        text,
                    });
                }
            }
            Err(reason) => {
                warn!(
                    "{technique} on pair {ordinal} ({}) skipped: {reason}",
                    describe(&pairs[ordinal])
                );
                outcome.units_skipped += 1;
            }
        }
    }
    info!(
        "{} rows from {} of {} technique/pair units",
        outcome.records.len(),
        outcome.units - outcome.units_skipped,
        outcome.units
    );
    Ok(outcome)
}

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn manifest(outcome: &RunOutcome, config_text: &str, seed: u64) -> String {
    let mut m = String::new();
    let processed = outcome.units - outcome.units_skipped;
    for (k, v) in [
        ("tool_version", env!("CARGO_PKG_VERSION").to_string()),
        ("config_sha256", config_hash(config_text)),
        ("seed", seed.to_string()),
        ("pairs_planned", outcome.pairs_planned.to_string()),
        ("units", outcome.units.to_string()),
        ("units_processed", processed.to_string()),
        ("units_skipped", outcome.units_skipped.to_string()),
        ("test_versions_expected", outcome.versions_expected.to_string()),
        ("test_versions_skipped", outcome.versions_skipped.to_string()),
        ("rows_written", outcome.records.len().to_string()),
    ] {
        let _ = writeln!(m, "{k} = {v}");
    }
    m
}

/// Writes `results.csv`, `manifest.txt` and, if present, `trees/*.txt`.
pub fn write_run_outputs(outcome: &RunOutcome, config_text: &str, seed: u64, dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir)?;
    write_results(&outcome.records, BufWriter::new(File::create(dir.join("results.csv"))?))?;
    fs::write(dir.join("manifest.txt"), manifest(outcome, config_text, seed))?;
    if !outcome.trees.is_empty() {
        let trees = dir.join("trees");
        fs::create_dir_all(&trees)?;
        for t in &outcome.trees {
            let name = format!("{}_{:05}.txt", t.technique, t.ordinal);
            fs::write(trees.join(name), format!("# {}\n{}", t.pair, t.text))?;
        }
    }
    Ok(())
}
