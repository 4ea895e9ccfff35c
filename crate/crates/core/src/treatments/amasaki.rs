use ndarray::Axis;

use super::{log1p_checked, median, PairData, Side, TreatedPair, TreatmentError};

/// Closeness thresholds for attribute selection and relevancy filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmasakiParams {
    /// An attribute survives when every training value has a test value
    /// within `attr_mad_mult` median absolute deviations.
    pub attr_mad_mult: f64,
    /// A training instance survives when its nearest test instance is within
    /// `relevancy_mult` times the median nearest-neighbour distance.
    pub relevancy_mult: f64,
}

impl Default for AmasakiParams {
    fn default() -> Self {
        Self {
            attr_mad_mult: 1.0,
            relevancy_mult: 2.0,
        }
    }
}

fn mad(values: &mut [f64]) -> f64 {
    let m = median(values);
    let mut dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    median(&mut dev)
}

fn nearest_gap(sorted: &[f64], v: f64) -> f64 {
    let i = sorted.partition_point(|&x| x < v);
    let above = sorted.get(i).map(|&x| x - v);
    let below = i.checked_sub(1).map(|j| v - sorted[j]);
    match (below, above) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => f64::INFINITY,
    }
}

/// Log-transform, then drop attributes and training instances that are not
/// close to the test data.
pub fn amasaki15(data: &PairData, params: &AmasakiParams) -> Result<TreatedPair, TreatmentError> {
    data.check_size(1)?;
    let train = log1p_checked(&data.train.features, Side::Train)?;
    let test = log1p_checked(&data.test.features, Side::Test)?;

    let selected: Vec<usize> = (0..train.ncols())
        .filter(|&j| {
            let mut test_col = test.column(j).to_vec();
            test_col.sort_by(f64::total_cmp);
            let mut combined: Vec<f64> = train.column(j).iter().chain(&test_col).copied().collect();
            let limit = params.attr_mad_mult * mad(&mut combined);
            train.column(j).iter().all(|&v| nearest_gap(&test_col, v) <= limit)
        })
        .collect();
    if selected.is_empty() {
        return Err(TreatmentError::Degenerate(
            "amasaki15 attribute selection dropped every attribute".into(),
        ));
    }
    let train = train.select(Axis(1), &selected);
    let test = test.select(Axis(1), &selected);

    let nn: Vec<f64> = train
        .rows()
        .into_iter()
        .map(|r| {
            test.rows()
                .into_iter()
                .map(|t| r.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect();
    let limit = params.relevancy_mult * median(&mut nn.clone());
    let keep: Vec<usize> = (0..nn.len()).filter(|&i| nn[i] <= limit).collect();
    if keep.is_empty() {
        return Err(TreatmentError::Degenerate(
            "amasaki15 relevancy filtering dropped every instance".into(),
        ));
    }

    let mut kept = data.train.select_rows(&keep);
    kept.features = train.select(Axis(0), &keep);
    Ok(TreatedPair {
        train: kept,
        test: data.test.with_features(test),
        selected_attributes: selected,
        relabel_fallback: false,
    })
}

#[cfg(test)]
mod tests {
    use super::super::test_support::pair;
    use super::*;
    use ndarray::array;

    #[test]
    fn identical_sides_keep_everything() {
        let m = array![[1.0, 4.0, 0.0], [2.0, 8.0, 3.0], [5.0, 1.0, 9.0], [7.0, 2.0, 2.0]];
        let data = pair(m.clone(), vec![true, false, true, false], m.clone());
        let t = amasaki15(&data, &AmasakiParams::default()).unwrap();
        assert_eq!(t.selected_attributes, [0, 1, 2]);
        assert_eq!(t.train.len(), 4);
        assert_eq!(t.train.labels, data.train.labels);
    }

    #[test]
    fn zero_maps_to_zero() {
        let m = array![[0.0, 3.0], [1.0, 0.0]];
        let data = pair(m.clone(), vec![true, false], m);
        let t = amasaki15(&data, &AmasakiParams::default()).unwrap();
        assert_eq!(t.train.features[(0, 0)], 0.0);
        assert_eq!(t.test.features[(1, 1)], 0.0);
    }

    #[test]
    fn distant_instance_is_filtered() {
        // Attribute values cover the same range on both sides so no attribute
        // is dropped; row 4 sits far from every test row in the joint space.
        let train = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0], [1.0, 4.0],];
        let test = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]];
        let data = pair(train, vec![true, false, true, false, true], test);
        let t = amasaki15(&data, &AmasakiParams::default()).unwrap();
        assert_eq!(t.selected_attributes, [0, 1]);
        assert_eq!(t.train.len(), 4);
        assert_eq!(t.train.labels, [true, false, true, false]);
    }

    #[test]
    fn attribute_far_from_test_is_dropped() {
        let train = array![[1.0, 1.0], [2.0, 1000.0], [3.0, 5000.0]];
        let test = array![[1.0, 1.0], [2.0, 2.0], [3.0, 1.0]];
        let data = pair(train, vec![true, false, true], test);
        let t = amasaki15(&data, &AmasakiParams::default()).unwrap();
        assert_eq!(t.selected_attributes, [0]);
        assert_eq!(t.test.features.ncols(), 1);
    }

    #[test]
    fn all_attributes_dropped_is_degenerate() {
        let data = pair(
            array![[100.0], [2000.0], [5.0]],
            vec![true, false, true],
            array![[0.0], [0.0]],
        );
        assert!(matches!(
            amasaki15(&data, &AmasakiParams::default()),
            Err(TreatmentError::Degenerate(_))
        ));
    }
}
