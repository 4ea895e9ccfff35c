//! Classification metrics per test version.
//!
//! Any metric with a zero denominator evaluates to 0. AUC is the
//! Mann-Whitney statistic over predicted defect probabilities with midranks
//! for ties.

use log::warn;
use thiserror::Error;

use crate::dataset::VersionKey;
use crate::treatments::TreatedPair;
use crate::tree::{DecisionTree, TreeError};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("length mismatch: {0} predictions, {1} labels")]
    LengthMismatch(usize, usize),
    #[error("no instances to evaluate")]
    Empty,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreSet {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
    pub gmeasure: f64,
    pub mcc: f64,
    pub auc: f64,
}

pub fn confusion(predicted: &[bool], actual: &[bool]) -> Result<ConfusionMatrix, MetricError> {
    if predicted.len() != actual.len() {
        return Err(MetricError::LengthMismatch(predicted.len(), actual.len()));
    }
    if predicted.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p, a) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Threshold metrics; the returned `auc` field is 0 and is filled in by the
/// caller from [`auc`].
pub fn scores(cm: &ConfusionMatrix) -> ScoreSet {
    let (tp, fp, tn, fn_) = (cm.tp as f64, cm.fp as f64, cm.tn as f64, cm.fn_ as f64);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let fscore = ratio(2.0 * precision * recall, precision + recall);
    let pf = ratio(fp, tn + fp);
    let gmeasure = ratio(2.0 * recall * (1.0 - pf), recall + (1.0 - pf));
    let radicand = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if radicand == 0.0 {
        0.0
    } else {
        ((tp * tn - fp * fn_) / radicand.sqrt()).clamp(-1.0, 1.0)
    };
    ScoreSet {
        precision,
        recall,
        fscore,
        gmeasure,
        mcc,
        auc: 0.0,
    }
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Returns `(0.5, true)` when only one class is present.
pub fn auc(scores: &[f64], actual: &[bool]) -> Result<(f64, bool), MetricError> {
    if scores.len() != actual.len() {
        return Err(MetricError::LengthMismatch(scores.len(), actual.len()));
    }
    let positives = actual.iter().filter(|&&a| a).count();
    let negatives = actual.len() - positives;
    if positives == 0 || negatives == 0 {
        return Ok((0.5, true));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j + 2) as f64 / 2.0;
        let tied_pos = order[i..=j].iter().filter(|&&k| actual[k]).count();
        positive_rank_sum += midrank * tied_pos as f64;
        i = j + 1;
    }
    let p = positives as f64;
    let u = positive_rank_sum - p * (p + 1.0) / 2.0;
    Ok((u / (p * negatives as f64), false))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VersionEvaluation {
    pub version: VersionKey,
    pub confusion: ConfusionMatrix,
    pub scores: ScoreSet,
    pub auc_degenerate: bool,
}

/// Scores every test version of a treated pair separately.
pub fn evaluate_pair(
    tree: &DecisionTree,
    treated: &TreatedPair,
    threshold: f64,
) -> Result<Vec<VersionEvaluation>, MetricError> {
    let test = &treated.test;
    let proba = test
        .features
        .rows()
        .into_iter()
        .map(|r| tree.predict_proba(&r.to_vec()))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut out = Vec::with_capacity(test.versions.len());
    for (v, key) in test.versions.iter().enumerate() {
        let rows: Vec<usize> = (0..test.len()).filter(|&i| test.version_of[i] == v).collect();
        if rows.is_empty() {
            warn!("test version {key} has no instances; skipped");
            continue;
        }
        let p: Vec<f64> = rows.iter().map(|&i| proba[i]).collect();
        let actual: Vec<bool> = rows.iter().map(|&i| test.labels[i]).collect();
        let predicted: Vec<bool> = p.iter().map(|&x| x >= threshold).collect();
        let cm = confusion(&predicted, &actual)?;
        let (a, degenerate) = auc(&p, &actual)?;
        let mut s = scores(&cm);
        s.auc = a;
        out.push(VersionEvaluation {
            version: key.clone(),
            confusion: cm,
            scores: s,
            auc_degenerate: degenerate,
        });
    }
    Ok(out)
}
