#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::Arc;

use chrono::{Months, NaiveDate};
use ndarray::Array2;
use rand::Rng;
use timewise::dataset::{bucketize, Release, TimeSeriesDataset};
use timewise::pairs::{ConfigurationKind, TrainTestPair, Window};
use timewise::treatments::{Instances, PairData, TestSet};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// `(window, split, train keys, test keys)` with keys rendered `project:version`.
pub type PairRow = (Window, usize, Vec<String>, Vec<String>);

pub fn describe(pairs: &[TrainTestPair]) -> Vec<PairRow> {
    pairs
        .iter()
        .map(|p| {
            (
                p.spec.window,
                p.spec.split_index,
                p.train.iter().map(|r| r.key().to_string()).collect(),
                p.test.iter().map(|r| r.key().to_string()).collect(),
            )
        })
        .collect()
}

/// Pair enumeration written directly from the configuration definitions:
/// release-by-release membership tests instead of bucket ranges.
pub fn brute_force_pairs(ts: &TimeSeriesDataset, kind: ConfigurationKind, gap: usize) -> Vec<PairRow> {
    let n = ts.len();
    let (constant_train, constant_test) = match kind {
        ConfigurationKind::CC => (true, true),
        ConfigurationKind::IC => (false, true),
        ConfigurationKind::CI => (true, false),
        ConfigurationKind::II => (false, false),
    };
    let windows: Vec<Window> = match kind {
        ConfigurationKind::CC => (1..=n).map(Window::Bounded).collect(),
        ConfigurationKind::II => vec![Window::Unbounded],
        _ => (1..n).map(Window::Bounded).collect(),
    };
    let located: Vec<(usize, &Arc<Release>)> = ts
        .buckets
        .iter()
        .flat_map(|b| b.releases.iter().map(move |r| (b.index, r)))
        .collect();
    let mut out = Vec::new();
    for w in windows {
        for split in 1..n {
            let k = match w {
                Window::Bounded(k) => k as i64,
                Window::Unbounded => i64::MAX / 4,
            };
            let (s, g) = (split as i64, gap as i64);
            let train: Vec<&Arc<Release>> = located
                .iter()
                .filter(|(b, _)| {
                    let b = *b as i64;
                    b < s && (!constant_train || b >= s - k)
                })
                .map(|(_, r)| *r)
                .collect();
            let train_projects: BTreeSet<&str> = train.iter().map(|r| r.project_id.as_str()).collect();
            let test: Vec<&Arc<Release>> = located
                .iter()
                .filter(|(b, _)| {
                    let b = *b as i64;
                    b >= s + g && (!constant_test || b < s + g + k)
                })
                .map(|(_, r)| *r)
                .filter(|r| !train_projects.contains(r.project_id.as_str()))
                .collect();
            if !train.is_empty() && !test.is_empty() {
                out.push((
                    w,
                    split,
                    train.iter().map(|r| r.key().to_string()).collect(),
                    test.iter().map(|r| r.key().to_string()).collect(),
                ));
            }
        }
    }
    out
}

/// Random timeline of exactly `buckets` one-month buckets over `projects`
/// projects. Every release has one record.
pub fn random_timeline<R: Rng>(rng: &mut R, buckets: usize, projects: usize) -> TimeSeriesDataset {
    let origin = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let mut months: Vec<usize> = vec![0, buckets - 1];
    let extra = rng.gen_range(0..=2 * buckets);
    months.extend((0..extra).map(|_| rng.gen_range(0..buckets)));
    let mut versions: HashMap<usize, usize> = HashMap::new();
    let releases: Vec<Release> = months
        .into_iter()
        .map(|m| {
            let p = rng.gen_range(0..projects);
            let v = versions.entry(p).or_insert(0);
            *v += 1;
            let date =
                origin.checked_add_months(Months::new(m as u32)).unwrap() + chrono::Days::new(rng.gen_range(0..28));
            Release {
                project_id: format!("p{p}"),
                version_id: format!("v{v}"),
                release_date: date,
                records: Vec::new(),
            }
        })
        .collect();
    let ts = bucketize(releases, 1).unwrap();
    assert_eq!(ts.len(), buckets);
    ts
}

pub fn bucket_of(ts: &TimeSeriesDataset) -> HashMap<String, usize> {
    ts.buckets
        .iter()
        .flat_map(|b| b.releases.iter().map(move |r| (r.key().to_string(), b.index)))
        .collect()
}

/// A pair with one test version, built from row-major slices.
pub fn pair_data(train: &[&[f64]], labels: &[bool], test: &[&[f64]]) -> PairData {
    let d = train[0].len();
    let to_matrix = |rows: &[&[f64]]| {
        Array2::from_shape_vec((rows.len(), d), rows.iter().flat_map(|r| r.iter().copied()).collect()).unwrap()
    };
    PairData {
        train: Instances::new(to_matrix(train), labels.to_vec()),
        test: TestSet {
            features: to_matrix(test),
            labels: vec![false; test.len()],
            versions: vec![timewise::dataset::VersionKey {
                project: "t".into(),
                version: "1".into(),
            }],
            version_of: vec![0; test.len()],
        },
    }
}

fn keys(names: &[&str]) -> Vec<String> {
    names.iter().map(|n| format!("{n}:1")).collect()
}

/// The worked pair sets for releases i (2008), j (2009) and k (2010) with no
/// gap. Empty bucket slots in the published rows simply contribute nothing.
pub fn worked_expected(kind: ConfigurationKind) -> Vec<PairRow> {
    use ConfigurationKind::*;
    let b = Window::Bounded;
    let rows: Vec<(Window, usize, &[&str], &[&str])> = match kind {
        CC => vec![
            (b(1), 1, &["i"], &["j"]),
            (b(1), 2, &["j"], &["k"]),
            (b(2), 1, &["i"], &["j", "k"]),
            (b(2), 2, &["i", "j"], &["k"]),
        ],
        IC => vec![
            (b(1), 1, &["i"], &["j"]),
            (b(1), 2, &["i", "j"], &["k"]),
            (b(2), 1, &["i"], &["j", "k"]),
            (b(2), 2, &["i", "j"], &["k"]),
        ],
        CI => vec![
            (b(1), 1, &["i"], &["j", "k"]),
            (b(1), 2, &["j"], &["k"]),
            (b(2), 1, &["i"], &["j", "k"]),
            (b(2), 2, &["i", "j"], &["k"]),
        ],
        II => vec![
            (Window::Unbounded, 1, &["i"], &["j", "k"]),
            (Window::Unbounded, 2, &["i", "j"], &["k"]),
        ],
    };
    rows.into_iter()
        .map(|(w, s, tr, te)| (w, s, keys(tr), keys(te)))
        .collect()
}

pub fn worked_timeline() -> TimeSeriesDataset {
    let file = std::fs::File::open(fixture("three_releases.csv")).unwrap();
    let parsed = timewise::dataset::parse_dataset(file, &Default::default()).unwrap();
    bucketize(parsed.releases, 12).unwrap()
}

/// Checks one configuration against the worked example. Window sizes beyond
/// two only occur for CC and must repeat the K = 2 sets.
pub fn check_worked_example(kind: ConfigurationKind) -> Result<(), String> {
    let ts = worked_timeline();
    if ts.len() != 3 {
        return Err(format!("expected 3 buckets, got {}", ts.len()));
    }
    let got = describe(&timewise::pairs::enumerate_pairs(&ts, kind, 0));
    let expected = worked_expected(kind);
    let (within, beyond): (Vec<PairRow>, Vec<PairRow>) = got
        .into_iter()
        .partition(|r| !matches!(r.0, Window::Bounded(k) if k > 2));
    if within != expected {
        return Err(format!("{kind}: got {within:?}, expected {expected:?}"));
    }
    let k2: Vec<PairRow> = expected.iter().filter(|r| r.0 == Window::Bounded(2)).cloned().collect();
    let beyond: Vec<(usize, Vec<String>, Vec<String>)> = beyond.into_iter().map(|r| (r.1, r.2, r.3)).collect();
    let k2: Vec<(usize, Vec<String>, Vec<String>)> = k2.into_iter().map(|r| (r.1, r.2, r.3)).collect();
    match kind {
        ConfigurationKind::CC if beyond != k2 => Err(format!("CC K=3 rows {beyond:?} differ from K=2 rows")),
        ConfigurationKind::CC => Ok(()),
        _ if !beyond.is_empty() => Err(format!("{kind}: unexpected rows with K > 2")),
        _ => Ok(()),
    }
}

/// Runs the timeline invariants and the brute-force comparison on `count`
/// random datasets. Returns the number of pairs checked.
pub fn check_random_timelines(count: usize, seed: u64) -> Result<usize, String> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    for case in 0..count {
        let buckets = rng.gen_range(2..=25);
        let projects = rng.gen_range(1..=8);
        let gap = rng.gen_range(0..=2);
        let ts = random_timeline(&mut rng, buckets, projects);
        let bucket = bucket_of(&ts);
        for kind in ConfigurationKind::ALL {
            let pairs = timewise::pairs::enumerate_pairs(&ts, kind, gap);
            for p in &pairs {
                let s = p.spec.split_index;
                let train_projects = p.train_projects();
                for r in &p.train {
                    if bucket[&r.key().to_string()] >= s {
                        return Err(format!("case {case}: train release {} at/after split {s}", r.key()));
                    }
                }
                for r in &p.test {
                    if bucket[&r.key().to_string()] < s + gap {
                        return Err(format!("case {case}: test release {} inside gap", r.key()));
                    }
                    if train_projects.contains(r.project_id.as_str()) {
                        return Err(format!("case {case}: project {} on both sides", r.project_id));
                    }
                }
                let last_train = p.train.iter().map(|r| r.release_date).max().unwrap();
                let first_test = p.test.iter().map(|r| r.release_date).min().unwrap();
                if last_train >= first_test {
                    return Err(format!("case {case}: time travel in {:?}", p.spec));
                }
            }
            if describe(&pairs) != brute_force_pairs(&ts, kind, gap) {
                return Err(format!("case {case}: {kind} differs from brute force"));
            }
            checked += pairs.len();
        }
    }
    Ok(checked)
}
