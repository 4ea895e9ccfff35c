//! Train/test pair generation over a bucketed timeline.
//!
//! Four time-aware configurations are supported. The first letter says how
//! the training side is sized, the second how the test side is sized:
//! `C`onstant takes `K` buckets adjacent to the split, `I`ncreasing takes
//! every bucket available on that side.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::{Release, TimeSeriesDataset};

#[derive(Debug, Error, PartialEq)]
pub enum PairError {
    #[error("cross-validation needs at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("{folds} folds requested but only {releases} releases available")]
    FoldsExceedReleases { folds: usize, releases: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConfigurationKind {
    CC,
    IC,
    CI,
    II,
}

impl ConfigurationKind {
    pub const ALL: [ConfigurationKind; 4] = [Self::CC, Self::IC, Self::CI, Self::II];

    fn constant_train(self) -> bool {
        matches!(self, Self::CC | Self::CI)
    }

    fn constant_test(self) -> bool {
        matches!(self, Self::CC | Self::IC)
    }

    /// Window sizes swept for a timeline of `buckets` buckets.
    pub fn windows(self, buckets: usize) -> Vec<Window> {
        match self {
            Self::CC => (1..=buckets).map(Window::Bounded).collect(),
            Self::IC | Self::CI => (1..buckets).map(Window::Bounded).collect(),
            Self::II => vec![Window::Unbounded],
        }
    }
}

impl fmt::Display for ConfigurationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CC => "CC",
            Self::IC => "IC",
            Self::CI => "CI",
            Self::II => "II",
        })
    }
}

impl FromStr for ConfigurationKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CC" => Ok(Self::CC),
            "IC" => Ok(Self::IC),
            "CI" => Ok(Self::CI),
            "II" => Ok(Self::II),
            other => Err(format!("unknown configuration '{other}'")),
        }
    }
}

/// A time-aware configuration or the time-agnostic cross-validation baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairKind {
    TimeAware(ConfigurationKind),
    CrossValidation,
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TimeAware(k) => k.fmt(f),
            Self::CrossValidation => f.write_str("CV"),
        }
    }
}

impl FromStr for PairKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("CV") {
            Ok(Self::CrossValidation)
        } else {
            s.parse().map(Self::TimeAware)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Window {
    Bounded(usize),
    Unbounded,
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bounded(k) => write!(f, "{k}"),
            Self::Unbounded => f.write_str("inf"),
        }
    }
}

impl FromStr for Window {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" => Ok(Self::Unbounded),
            t => t.parse().map(Self::Bounded).map_err(|_| format!("bad window '{t}'")),
        }
    }
}

/// Identifies one pair. For cross-validation `split_index` is the fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairSpec {
    pub kind: PairKind,
    pub window: Window,
    pub split_index: usize,
    pub gap: usize,
}

impl PairSpec {
    pub fn new(kind: ConfigurationKind, window: Window, split_index: usize, gap: usize) -> Self {
        Self {
            kind: PairKind::TimeAware(kind),
            window,
            split_index,
            gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTestPair {
    pub spec: PairSpec,
    pub train: Vec<Arc<Release>>,
    pub test: Vec<Arc<Release>>,
}

impl TrainTestPair {
    pub fn train_projects(&self) -> BTreeSet<&str> {
        self.train.iter().map(|r| r.project_id.as_str()).collect()
    }

    /// True when some training release is dated after some test release.
    pub fn involves_time_travel(&self) -> bool {
        let latest_train = self.train.iter().map(|r| r.release_date).max();
        let earliest_test = self.test.iter().map(|r| r.release_date).min();
        matches!((latest_train, earliest_test), (Some(a), Some(b)) if a > b)
    }
}

fn collect(ts: &TimeSeriesDataset, range: std::ops::Range<usize>) -> Vec<Arc<Release>> {
    ts.buckets[range]
        .iter()
        .flat_map(|b| b.releases.iter().cloned())
        .collect()
}

/// Materialize the unfiltered pair for `spec`, or `None` when either side has
/// no releases.
pub fn generate_pair(ts: &TimeSeriesDataset, spec: PairSpec) -> Option<TrainTestPair> {
    let PairKind::TimeAware(kind) = spec.kind else {
        return None;
    };
    let n = ts.len();
    let split = spec.split_index;
    if split == 0 || split >= n {
        return None;
    }
    let k = match spec.window {
        Window::Bounded(k) => k,
        Window::Unbounded => usize::MAX,
    };
    let train_start = if kind.constant_train() {
        split.saturating_sub(k)
    } else {
        0
    };
    let test_start = split.checked_add(spec.gap)?;
    if test_start >= n {
        return None;
    }
    let test_end = if kind.constant_test() {
        test_start.saturating_add(k).min(n)
    } else {
        n
    };
    let train = collect(ts, train_start..split);
    let test = collect(ts, test_start..test_end);
    if train.is_empty() || test.is_empty() {
        return None;
    }
    Some(TrainTestPair { spec, train, test })
}

/// Drop test releases whose project also occurs in training. Returns `None`
/// if nothing is left to test on.
pub fn strict_cpdp_filter(mut pair: TrainTestPair) -> Option<TrainTestPair> {
    let projects: BTreeSet<String> = pair.train.iter().map(|r| r.project_id.clone()).collect();
    pair.test.retain(|r| !projects.contains(&r.project_id));
    if pair.test.is_empty() {
        None
    } else {
        Some(pair)
    }
}

/// Every strictly filtered pair of one configuration, ordered by window and
/// then split.
pub fn enumerate_pairs(ts: &TimeSeriesDataset, kind: ConfigurationKind, gap: usize) -> Vec<TrainTestPair> {
    let n = ts.len();
    kind.windows(n)
        .into_iter()
        .flat_map(|window| (1..n).map(move |split| PairSpec::new(kind, window, split, gap)))
        .filter_map(|spec| generate_pair(ts, spec))
        .filter_map(strict_cpdp_filter)
        .collect()
}

/// Release-level k-fold cross-validation, ignoring time.
///
/// Releases are shuffled with a seeded ChaCha8 stream and dealt round-robin
/// into folds. Strictness is enforced on the training side: releases of any
/// project under test are left out of training, so every release is tested
/// exactly once. Folds left without training data are dropped.
pub fn crossval_pairs(releases: &[Arc<Release>], folds: usize, seed: u64) -> Result<Vec<TrainTestPair>, PairError> {
    if folds < 2 {
        return Err(PairError::TooFewFolds(folds));
    }
    if folds > releases.len() {
        return Err(PairError::FoldsExceedReleases {
            folds,
            releases: releases.len(),
        });
    }
    let mut order: Vec<usize> = (0..releases.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0usize; releases.len()];
    for (pos, &idx) in order.iter().enumerate() {
        fold_of[idx] = pos % folds;
    }
    Ok((0..folds)
        .filter_map(|fold| {
            let (test, train): (Vec<_>, Vec<_>) = releases.iter().zip(&fold_of).partition(|(_, &f)| f == fold);
            let test: Vec<Arc<Release>> = test.into_iter().map(|(r, _)| r.clone()).collect();
            let tested: BTreeSet<&str> = test.iter().map(|r| r.project_id.as_str()).collect();
            let train: Vec<Arc<Release>> = train
                .into_iter()
                .map(|(r, _)| r)
                .filter(|r| !tested.contains(r.project_id.as_str()))
                .cloned()
                .collect();
            (!train.is_empty()).then_some(TrainTestPair {
                spec: PairSpec {
                    kind: PairKind::CrossValidation,
                    window: Window::Bounded(folds),
                    split_index: fold,
                    gap: 0,
                },
                train,
                test,
            })
        })
        .collect())
}

fn version_list(releases: &[Arc<Release>]) -> String {
    releases
        .iter()
        .map(|r| r.key().to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// CSV manifest: `kind,window_k,split_index,gap,train_versions,test_versions`.
pub fn write_pair_manifest<W: Write>(pairs: &[TrainTestPair], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "kind",
        "window_k",
        "split_index",
        "gap",
        "train_versions",
        "test_versions",
    ])?;
    for p in pairs {
        w.write_record([
            p.spec.kind.to_string(),
            p.spec.window.to_string(),
            p.spec.split_index.to_string(),
            p.spec.gap.to_string(),
            version_list(&p.train),
            version_list(&p.test),
        ])?;
    }
    w.flush()?;
    Ok(())
}
