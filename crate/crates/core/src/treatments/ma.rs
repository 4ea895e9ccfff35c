use super::{PairData, TreatedPair, TreatmentError};

/// Smallest weight an instance can receive. An instance with no attribute
/// inside the test range would otherwise get weight 0.
pub const MA12_WEIGHT_FLOOR: f64 = 1e-6;

/// `simatts / (p - simatts + 1)^2`, floored at [`MA12_WEIGHT_FLOOR`].
pub fn ma12_weight(simatts: usize, p: usize) -> f64 {
    let denom = (p - simatts + 1) as f64;
    (simatts as f64 / (denom * denom)).max(MA12_WEIGHT_FLOOR)
}

/// Weight training instances by how many of their attributes fall inside the
/// test data's `[min, max]` range for that attribute.
pub fn ma12_weights(data: &PairData) -> Result<TreatedPair, TreatmentError> {
    data.check_size(1)?;
    let ranges: Vec<(f64, f64)> = data
        .test
        .features
        .columns()
        .into_iter()
        .map(|c| {
            c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
        })
        .collect();
    let p = ranges.len();
    let mut train = data.train.clone();
    train.weights = data
        .train
        .features
        .rows()
        .into_iter()
        .map(|row| {
            let simatts = row
                .iter()
                .zip(&ranges)
                .filter(|(&v, &(lo, hi))| lo <= v && v <= hi)
                .count();
            ma12_weight(simatts, p)
        })
        .collect();
    Ok(TreatedPair::passthrough(data, train, data.test.clone()))
}
