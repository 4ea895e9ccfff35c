use ndarray::{Array2, Axis};

use super::{column_medians, median, PairData, TreatedPair, TreatmentError};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NamParams {
    /// Metric violation threshold, as a fraction in `[0, 1]`. `None` uses the
    /// median violation score (per attribute, then per instance).
    pub violation_threshold: Option<f64>,
}

/// Unsupervised relabeling of the training data followed by metric and
/// instance selection on violation scores.
///
/// An instance's count is the number of attributes on which it lies strictly
/// above the attribute median; instances whose count is above the median
/// count are labelled defective. If that yields a single class the original
/// labels are kept and `relabel_fallback` is set.
pub fn nam15(data: &PairData, params: &NamParams) -> Result<TreatedPair, TreatmentError> {
    data.check_size(2)?;
    let x = &data.train.features;
    let (n, p) = x.dim();
    let medians = column_medians(x);
    let above = Array2::from_shape_fn((n, p), |(i, j)| x[(i, j)] > medians[j]);
    let counts: Vec<f64> = above
        .rows()
        .into_iter()
        .map(|r| r.iter().filter(|&&b| b).count() as f64)
        .collect();
    let count_median = median(&mut counts.clone());
    let generated: Vec<bool> = counts.iter().map(|&k| k > count_median).collect();
    let single_class = generated.iter().all(|&l| l) || generated.iter().all(|&l| !l);
    let (labels, relabel_fallback) = if single_class {
        (data.train.labels.clone(), true)
    } else {
        (generated, false)
    };

    // A value violates its label when a defective instance sits at or below
    // the median, or a clean instance above it.
    let violates = Array2::from_shape_fn((n, p), |(i, j)| above[(i, j)] != labels[i]);

    let attr_scores: Vec<f64> = violates
        .columns()
        .into_iter()
        .map(|c| c.iter().filter(|&&v| v).count() as f64 / n as f64)
        .collect();
    let attr_limit = params
        .violation_threshold
        .unwrap_or_else(|| median(&mut attr_scores.clone()));
    let selected: Vec<usize> = (0..p).filter(|&j| attr_scores[j] <= attr_limit).collect();
    if selected.is_empty() {
        return Err(TreatmentError::Degenerate(
            "nam15 metric selection dropped every attribute".into(),
        ));
    }

    let inst_scores: Vec<f64> = (0..n)
        .map(|i| selected.iter().filter(|&&j| violates[(i, j)]).count() as f64 / selected.len() as f64)
        .collect();
    let inst_limit = params
        .violation_threshold
        .unwrap_or_else(|| median(&mut inst_scores.clone()));
    let keep: Vec<usize> = (0..n).filter(|&i| inst_scores[i] <= inst_limit).collect();
    if keep.is_empty() {
        return Err(TreatmentError::Degenerate(
            "nam15 instance selection dropped every instance".into(),
        ));
    }

    let mut train = data.train.select_rows(&keep);
    train.features = train.features.select(Axis(1), &selected);
    train.labels = keep.iter().map(|&i| labels[i]).collect();
    Ok(TreatedPair {
        train,
        test: data.test.with_features(data.test.features.select(Axis(1), &selected)),
        selected_attributes: selected,
        relabel_fallback,
    })
}
