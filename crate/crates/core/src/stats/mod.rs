//! Stability statistics, significance tests, effect sizes and rankings.
//!
//! Aggregation works on pair-level observations: each train/test pair
//! contributes the mean of its per-version scores, and standard deviations
//! are taken across pairs.

mod cliff;
mod rank;
mod sampling;
mod wilcoxon;

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use thiserror::Error;

use crate::metrics::ScoreSet;
use crate::pairs::{PairKind, Window};
use crate::results::ResultRecord;

pub use cliff::{cliffs_delta, Magnitude};
pub use rank::{rank_stability, rank_techniques, rankscores, RankRow};
pub use sampling::undersample;
pub use wilcoxon::{wilcoxon_rank_sum, DEFAULT_EXACT_MAX_N};

pub const DEFAULT_STABILITY_THRESHOLD: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    Empty,
    #[error("ranking needs at least 2 techniques, got {0}")]
    TooFewTechniques(usize),
    #[error("technique {technique} has no {metric} value")]
    MissingMetric { technique: String, metric: Metric },
    #[error("cannot balance a single-class training set")]
    SingleClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    FScore,
    Auc,
    Mcc,
    GMeasure,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Self::FScore, Self::Auc, Self::Mcc, Self::GMeasure];

    pub fn name(self) -> &'static str {
        match self {
            Self::FScore => "fscore",
            Self::Auc => "auc",
            Self::Mcc => "mcc",
            Self::GMeasure => "gmeasure",
        }
    }

    pub fn of(self, s: &ScoreSet) -> f64 {
        match self {
            Self::FScore => s.fscore,
            Self::Auc => s.auc,
            Self::Mcc => s.mcc,
            Self::GMeasure => s.gmeasure,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Identifies the pair a set of result rows came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairGroup {
    pub technique: String,
    pub kind: PairKind,
    pub window: Window,
    pub split_index: usize,
    pub gap: usize,
}

/// Scores of one pair averaged over its test versions. `auc` is `None` when
/// every test version had a single class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub fscore: f64,
    pub auc: Option<f64>,
    pub mcc: f64,
    pub gmeasure: f64,
}

impl Observation {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::FScore => Some(self.fscore),
            Metric::Auc => self.auc,
            Metric::Mcc => Some(self.mcc),
            Metric::GMeasure => Some(self.gmeasure),
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Collapses result rows to one observation per pair, in first-seen order.
pub fn pair_observations(records: &[ResultRecord]) -> Vec<(PairGroup, Observation)> {
    let mut index: HashMap<PairGroup, usize> = HashMap::new();
    let mut groups: Vec<(PairGroup, Vec<&ResultRecord>)> = Vec::new();
    for r in records {
        let key = PairGroup {
            technique: r.technique.clone(),
            kind: r.kind,
            window: r.window,
            split_index: r.split_index,
            gap: r.gap,
        };
        let i = *index.entry(key.clone()).or_insert_with(|| {
            groups.push((key, Vec::new()));
            groups.len() - 1
        });
        groups[i].1.push(r);
    }
    groups
        .into_iter()
        .map(|(key, rows)| {
            let avg = |m: Metric| mean(&rows.iter().map(|r| m.of(&r.scores)).collect::<Vec<_>>());
            let aucs: Vec<f64> = rows
                .iter()
                .filter(|r| !r.auc_degenerate)
                .map(|r| r.scores.auc)
                .collect();
            let obs = Observation {
                fscore: avg(Metric::FScore),
                auc: (!aucs.is_empty()).then(|| mean(&aucs)),
                mcc: avg(Metric::Mcc),
                gmeasure: avg(Metric::GMeasure),
            };
            (key, obs)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub stable: bool,
    /// Only one value was available, so `sd` is reported as 0.
    pub single: bool,
}

/// Mean and sample standard deviation (divisor `n - 1`).
pub fn aggregate(values: &[f64], threshold: f64) -> Result<MetricSummary, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = values.len();
    let m = mean(values);
    let sd = if n == 1 {
        0.0
    } else {
        (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Ok(MetricSummary {
        n,
        mean: m,
        sd,
        stable: sd < threshold,
        single: n == 1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub technique: String,
    pub kind: PairKind,
    /// Set when the group is restricted to one window size.
    pub window: Option<Window>,
    pub pairs: usize,
    /// Pairs left out of the AUC summary because no test version had both
    /// classes.
    pub auc_excluded: usize,
    pub metrics: Vec<(Metric, MetricSummary)>,
}

impl StabilityReport {
    pub fn metric(&self, m: Metric) -> Option<&MetricSummary> {
        self.metrics.iter().find(|(k, _)| *k == m).map(|(_, s)| s)
    }
}

/// One report per (technique, kind), or per (technique, kind, window) when
/// `by_window` is set. Groups keep first-seen technique order.
pub fn stability_reports(
    observations: &[(PairGroup, Observation)],
    by_window: bool,
    threshold: f64,
) -> Vec<StabilityReport> {
    let mut technique_order: Vec<&str> = Vec::new();
    for (g, _) in observations {
        if !technique_order.contains(&g.technique.as_str()) {
            technique_order.push(&g.technique);
        }
    }
    let mut keys: Vec<(usize, PairKind, Option<Window>)> = Vec::new();
    for (g, _) in observations {
        let pos = technique_order.iter().position(|t| *t == g.technique).unwrap_or(0);
        let key = (pos, g.kind, by_window.then_some(g.window));
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.sort();
    keys.into_iter()
        .map(|(pos, kind, window)| {
            let members: Vec<&Observation> = observations
                .iter()
                .filter(|(g, _)| {
                    g.technique == technique_order[pos] && g.kind == kind && window.is_none_or(|w| w == g.window)
                })
                .map(|(_, o)| o)
                .collect();
            let metrics = Metric::ALL
                .iter()
                .filter_map(|&m| {
                    let values: Vec<f64> = members.iter().filter_map(|o| o.get(m)).collect();
                    aggregate(&values, threshold).ok().map(|s| (m, s))
                })
                .collect();
            StabilityReport {
                technique: technique_order[pos].to_string(),
                kind,
                window,
                pairs: members.len(),
                auc_excluded: members.iter().filter(|o| o.auc.is_none()).count(),
                metrics,
            }
        })
        .collect()
}

pub fn write_stability_csv<W: Write>(reports: &[StabilityReport], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record([
        "technique",
        "kind",
        "window_k",
        "metric",
        "n",
        "mean",
        "sd",
        "stable",
        "single",
        "auc_excluded",
    ])?;
    for r in reports {
        for (m, s) in &r.metrics {
            w.write_record([
                r.technique.clone(),
                r.kind.to_string(),
                r.window.map_or_else(|| "all".to_string(), |k| k.to_string()),
                m.to_string(),
                s.n.to_string(),
                s.mean.to_string(),
                s.sd.to_string(),
                s.stable.to_string(),
                s.single.to_string(),
                r.auc_excluded.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::results::sample::{record, CC};
    use proptest::prelude::*;

    #[test]
    fn identical_values_are_stable() {
        let s = aggregate(&[0.4; 5], 0.05).unwrap();
        assert_eq!((s.mean, s.sd, s.stable), (0.4, 0.0, true));
    }

    #[test]
    fn two_values() {
        let s = aggregate(&[0.3, 0.5], 0.05).unwrap();
        assert!((s.mean - 0.4).abs() < 1e-15);
        assert!((s.sd - 0.02f64.sqrt()).abs() < 1e-15);
        assert!(!s.stable);
    }

    #[test]
    fn single_value_flagged() {
        let s = aggregate(&[0.7], 0.05).unwrap();
        assert!(s.single && s.stable && s.sd == 0.0);
        assert_eq!(aggregate(&[], 0.05), Err(StatsError::Empty));
    }

    #[test]
    fn pairs_average_their_versions() {
        let mut rows = vec![
            record("A", CC, 1, 0.2),
            record("A", CC, 1, 0.4),
            record("A", CC, 2, 0.9),
        ];
        rows[1].test_project = "q".into();
        rows[1].auc_degenerate = true;
        rows[2].auc_degenerate = true;
        let obs = pair_observations(&rows);
        assert_eq!(obs.len(), 2);
        assert!((obs[0].1.fscore - 0.3).abs() < 1e-15);
        assert_eq!(obs[0].1.auc, Some(0.7));
        assert_eq!(obs[1].1.auc, None);

        let reports = stability_reports(&obs, false, 0.05);
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].pairs, 2);
        assert_eq!(reports[0].auc_excluded, 1);
        assert!(reports[0].metric(Metric::Auc).unwrap().single);
        assert_eq!(reports[0].metric(Metric::FScore).unwrap().n, 2);
    }

    #[test]
    fn grouping_by_window() {
        let mut rows = vec![
            record("B", CC, 1, 0.2),
            record("A", CC, 1, 0.4),
            record("A", CC, 2, 0.5),
        ];
        rows[2].window = Window::Bounded(2);
        let obs = pair_observations(&rows);
        let all = stability_reports(&obs, false, 0.05);
        assert_eq!(all.iter().map(|r| r.technique.as_str()).collect::<Vec<_>>(), ["B", "A"]);
        let split = stability_reports(&obs, true, 0.05);
        assert_eq!(split.len(), 3);
        assert_eq!(split[2].window, Some(Window::Bounded(2)));
    }

    proptest! {
        #[test]
        fn matches_two_pass(values in prop::collection::vec(-1.0f64..1.0, 2..50)) {
            let s = aggregate(&values, 0.05).unwrap();
            let n = values.len() as f64;
            let mut total = 0.0;
            for v in &values { total += v; }
            let m = total / n;
            let mut ss = 0.0;
            for v in &values { ss += (v - m).powi(2); }
            prop_assert!((s.mean - m).abs() < 1e-12);
            prop_assert!((s.sd - (ss / (n - 1.0)).sqrt()).abs() < 1e-12);
        }
    }
}
