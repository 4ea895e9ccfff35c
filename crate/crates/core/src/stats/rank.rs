use super::{aggregate, Metric, StatsError};

/// `1 - #strictly higher / (n - 1)` for each value.
pub fn rankscores(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![1.0; n];
    }
    values
        .iter()
        .map(|&v| 1.0 - values.iter().filter(|&&w| w > v).count() as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub technique: String,
    /// In [`Metric::ALL`] order.
    pub rankscores: [f64; 4],
    pub mean_rank_score: f64,
    /// 1 plus the number of techniques with a strictly higher mean rank score.
    pub rank: usize,
}

/// Ranks techniques from one value per metric each, higher being better.
pub fn rank_techniques(techniques: &[String], values: &[[Option<f64>; 4]]) -> Result<Vec<RankRow>, StatsError> {
    if techniques.len() < 2 {
        return Err(StatsError::TooFewTechniques(techniques.len()));
    }
    let mut per_metric = [const { Vec::new() }; 4];
    for (m, column) in per_metric.iter_mut().enumerate() {
        *column = techniques
            .iter()
            .zip(values)
            .map(|(t, v)| {
                v[m].ok_or_else(|| StatsError::MissingMetric {
                    technique: t.clone(),
                    metric: Metric::ALL[m],
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        *column = rankscores(column);
    }
    let means: Vec<f64> = (0..techniques.len())
        .map(|i| per_metric.iter().map(|c| c[i]).sum::<f64>() / 4.0)
        .collect();
    Ok(techniques
        .iter()
        .enumerate()
        .map(|(i, t)| RankRow {
            technique: t.clone(),
            rankscores: [per_metric[0][i], per_metric[1][i], per_metric[2][i], per_metric[3][i]],
            mean_rank_score: means[i],
            rank: 1 + means.iter().filter(|&&m| m > means[i]).count(),
        })
        .collect())
}

/// Sample standard deviation of each technique's rank across cells, in the
/// order techniques first appear. Techniques ranked in a single cell get 0.
pub fn rank_stability(cells: &[Vec<RankRow>]) -> Vec<(String, f64)> {
    let mut names: Vec<&str> = Vec::new();
    for row in cells.iter().flatten() {
        if !names.contains(&row.technique.as_str()) {
            names.push(&row.technique);
        }
    }
    names
        .into_iter()
        .map(|t| {
            let ranks: Vec<f64> = cells
                .iter()
                .flatten()
                .filter(|r| r.technique == t)
                .map(|r| r.rank as f64)
                .collect();
            let sd = aggregate(&ranks, f64::INFINITY).map_or(0.0, |s| s.sd);
            (t.to_string(), sd)
        })
        .collect()
}
