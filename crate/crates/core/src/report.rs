//! Summary reports derived from a results table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use log::warn;

use crate::pairs::{PairKind, Window};
use crate::results::ResultRecord;
use crate::stats::{
    cliffs_delta, pair_observations, rank_stability, rank_techniques, stability_reports, wilcoxon_rank_sum,
    write_stability_csv, Magnitude, Metric, Observation, PairGroup, RankRow, StabilityReport,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub technique: String,
    /// A configuration label, or `all` for every time-aware pair pooled.
    pub config: String,
    pub metric: Metric,
    pub p_value: f64,
    pub cliffs_delta: f64,
    pub magnitude: Magnitude,
}

/// Per technique rank SD for one kind, with the number of cells ranked.
pub type RankSpread = (PairKind, Vec<(String, f64)>, usize);

type Cell = Vec<(String, [Option<f64>; 4])>;

#[derive(Debug, Clone, PartialEq)]
pub struct Reports {
    pub observations: Vec<(PairGroup, Observation)>,
    pub stability: Vec<StabilityReport>,
    pub stability_by_window: Vec<StabilityReport>,
    pub ranks: Vec<(PairKind, Vec<RankRow>)>,
    pub rank_stability: Vec<RankSpread>,
    pub comparisons: Vec<Comparison>,
}

fn ordered<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

fn means(obs: &[&Observation]) -> [Option<f64>; 4] {
    Metric::ALL.map(|m| {
        let v: Vec<f64> = obs.iter().filter_map(|o| o.get(m)).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    })
}

pub fn build_reports(records: &[ResultRecord], stability_threshold: f64, exact_max_n: usize) -> Reports {
    let observations = pair_observations(records);
    let techniques: Vec<String> = ordered(observations.iter().map(|(g, _)| g.technique.clone()));
    let mut kinds: Vec<PairKind> = ordered(observations.iter().map(|(g, _)| g.kind));
    kinds.sort();

    let mut ranks = Vec::new();
    let mut rank_sd = Vec::new();
    for &kind in &kinds {
        let of_kind: Vec<&(PairGroup, Observation)> = observations.iter().filter(|(g, _)| g.kind == kind).collect();
        let names: Vec<String> = techniques
            .iter()
            .filter(|t| of_kind.iter().any(|(g, _)| &g.technique == *t))
            .cloned()
            .collect();
        let values: Vec<[Option<f64>; 4]> = names
            .iter()
            .map(|t| {
                means(
                    &of_kind
                        .iter()
                        .filter(|(g, _)| &g.technique == t)
                        .map(|(_, o)| o)
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        match rank_techniques(&names, &values) {
            Ok(rows) => ranks.push((kind, rows)),
            Err(e) => warn!("no ranking for {kind}: {e}"),
        }

        // One cell per pair position; a cell is ranked only when every
        // technique has every metric there.
        let mut cells: BTreeMap<(Window, usize, usize), Cell> = BTreeMap::new();
        for (g, o) in &of_kind {
            cells
                .entry((g.window, g.split_index, g.gap))
                .or_default()
                .push((g.technique.clone(), Metric::ALL.map(|m| o.get(m))));
        }
        let ranked: Vec<Vec<RankRow>> = cells
            .into_values()
            .filter(|c| c.len() == names.len())
            .filter_map(|c| {
                let (n, v): (Vec<String>, Vec<[Option<f64>; 4]>) = c.into_iter().unzip();
                rank_techniques(&n, &v).ok()
            })
            .collect();
        if !ranked.is_empty() {
            rank_sd.push((kind, rank_stability(&ranked), ranked.len()));
        }
    }

    let mut comparisons = Vec::new();
    let baseline: Vec<&(PairGroup, Observation)> = observations
        .iter()
        .filter(|(g, _)| g.kind == PairKind::CrossValidation)
        .collect();
    if !baseline.is_empty() {
        let time_aware: Vec<PairKind> = kinds
            .iter()
            .copied()
            .filter(|k| *k != PairKind::CrossValidation)
            .collect();
        let mut scopes: Vec<(String, Vec<PairKind>)> = time_aware.iter().map(|k| (k.to_string(), vec![*k])).collect();
        if time_aware.len() > 1 {
            scopes.push(("all".into(), time_aware.clone()));
        }
        for t in &techniques {
            for (label, scope) in &scopes {
                for m in Metric::ALL {
                    let a: Vec<f64> = observations
                        .iter()
                        .filter(|(g, _)| &g.technique == t && scope.contains(&g.kind))
                        .filter_map(|(_, o)| o.get(m))
                        .collect();
                    let b: Vec<f64> = baseline
                        .iter()
                        .filter(|(g, _)| &g.technique == t)
                        .filter_map(|(_, o)| o.get(m))
                        .collect();
                    let (Ok(p), Ok((d, mag))) = (wilcoxon_rank_sum(&a, &b, exact_max_n), cliffs_delta(&a, &b)) else {
                        continue;
                    };
                    comparisons.push(Comparison {
                        technique: t.clone(),
                        config: label.clone(),
                        metric: m,
                        p_value: p,
                        cliffs_delta: d,
                        magnitude: mag,
                    });
                }
            }
        }
    }

    Reports {
        stability: stability_reports(&observations, false, stability_threshold),
        stability_by_window: stability_reports(&observations, true, stability_threshold),
        observations,
        ranks,
        rank_stability: rank_sd,
        comparisons,
    }
}

fn writer(path: &Path) -> std::io::Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?)))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Writes every report CSV into `dir`. `comparisons.csv` is only written
/// when the results include a cross-validation baseline.
pub fn write_reports(reports: &Reports, has_baseline: bool, dir: &Path) -> Result<(), csv::Error> {
    fs::create_dir_all(dir)?;
    write_stability_csv(&reports.stability, File::create(dir.join("stability.csv"))?)?;
    write_stability_csv(
        &reports.stability_by_window,
        File::create(dir.join("stability_by_window.csv"))?,
    )?;

    let mut w = writer(&dir.join("ranks.csv"))?;
    w.write_record([
        "technique",
        "config",
        "rankscore_fscore",
        "rankscore_auc",
        "rankscore_mcc",
        "rankscore_gmeasure",
        "mean_rank_score",
        "rank",
    ])?;
    for (kind, rows) in &reports.ranks {
        for r in rows {
            let mut rec = vec![r.technique.clone(), kind.to_string()];
            rec.extend(r.rankscores.iter().map(f64::to_string));
            rec.push(r.mean_rank_score.to_string());
            rec.push(r.rank.to_string());
            w.write_record(rec)?;
        }
    }
    w.flush()?;

    let mut w = writer(&dir.join("rank_stability.csv"))?;
    w.write_record(["technique", "config", "rank_sd", "cells"])?;
    for (kind, rows, cells) in &reports.rank_stability {
        for (t, sd) in rows {
            w.write_record([t.clone(), kind.to_string(), sd.to_string(), cells.to_string()])?;
        }
    }
    w.flush()?;

    if has_baseline {
        let mut w = writer(&dir.join("comparisons.csv"))?;
        w.write_record(["technique", "config", "metric", "p_value", "cliffs_delta", "magnitude"])?;
        for c in &reports.comparisons {
            w.write_record([
                c.technique.clone(),
                c.config.clone(),
                c.metric.to_string(),
                c.p_value.to_string(),
                c.cliffs_delta.to_string(),
                c.magnitude.to_string(),
            ])?;
        }
        w.flush()?;
    }

    let mut w = writer(&dir.join("plot_data.csv"))?;
    w.write_record([
        "technique",
        "kind",
        "split_index",
        "window_k",
        "fscore",
        "auc",
        "mcc",
        "gmeasure",
    ])?;
    for (g, o) in &reports.observations {
        w.write_record([
            g.technique.clone(),
            g.kind.to_string(),
            g.split_index.to_string(),
            g.window.to_string(),
            o.fscore.to_string(),
            opt(o.auc),
            o.mcc.to_string(),
            o.gmeasure.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable overview printed by the CLI after a run.
pub fn render_summary(reports: &Reports) -> String {
    let mut out = String::new();
    for (kind, rows) in &reports.ranks {
        let _ = writeln!(out, "{kind}:");
        for r in rows {
            let s = reports
                .stability
                .iter()
                .find(|s| s.technique == r.technique && s.kind == *kind);
            let f = s.and_then(|s| s.metric(Metric::FScore));
            let _ = writeln!(
                out,
                "  rank {} {:<14} mean rank score {:.3}  fscore {}",
                r.rank,
                r.technique,
                r.mean_rank_score,
                f.map_or_else(|| "-".into(), |f| format!("{:.3} (sd {:.3})", f.mean, f.sd)),
            );
        }
    }
    out
}
