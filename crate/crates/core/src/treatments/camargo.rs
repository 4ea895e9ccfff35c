use super::{column_medians, log1p_checked, PairData, Side, TreatedPair, TreatmentError};

/// Log-transform both sides and shift each training attribute so its median
/// lines up with the test median in log space.
pub fn camargocruz09(data: &PairData) -> Result<TreatedPair, TreatmentError> {
    data.check_size(1)?;
    let mut train = log1p_checked(&data.train.features, Side::Train)?;
    let test = log1p_checked(&data.test.features, Side::Test)?;
    let train_med = column_medians(&train);
    let test_med = column_medians(&test);
    for ((mut col, a), b) in train.columns_mut().into_iter().zip(&train_med).zip(&test_med) {
        col.mapv_inplace(|v| v + a - b);
    }
    let mut train_set = data.train.clone();
    train_set.features = train;
    Ok(TreatedPair::passthrough(data, train_set, data.test.with_features(test)))
}

#[cfg(test)]
mod tests {
    use super::super::test_support::pair;
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use std::f64::consts::E;

    #[test]
    fn equal_medians_reduce_to_log() {
        let data = pair(
            array![[0.0], [3.0], [8.0]],
            vec![true, false, true],
            array![[1.0], [3.0], [5.0]],
        );
        let t = camargocruz09(&data).unwrap();
        for (i, v) in [0.0f64, 3.0, 8.0].iter().enumerate() {
            assert!((t.train.features[(i, 0)] - v.ln_1p()).abs() < 1e-12);
        }
        assert!((t.test.features[(2, 0)] - 5f64.ln_1p()).abs() < 1e-12);
    }

    #[test]
    fn shift_by_median_difference() {
        // log(1+x) medians: train 2.0, test 1.0; a train value of e-1 maps to 2.0.
        let e2 = E * E - 1.0;
        let data = pair(
            array![[E - 1.0], [e2], [E.powi(3) - 1.0]],
            vec![true, false, true],
            array![[E - 1.0]],
        );
        let t = camargocruz09(&data).unwrap();
        assert!((t.train.features[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn negative_values_are_domain_errors() {
        let data = pair(array![[1.0, 2.0], [1.0, -3.0]], vec![true, false], array![[1.0, 1.0]]);
        assert_eq!(
            camargocruz09(&data).unwrap_err(),
            TreatmentError::Domain {
                side: Side::Train,
                row: 1,
                attribute: 1
            }
        );
    }

    proptest! {
        #[test]
        fn strictly_monotone_on_train(raw in prop::collection::vec(0u32..1_000_000, 2..30),
                                      test in prop::collection::vec(0.0f64..1e6, 1..10)) {
            let vals: Vec<f64> = raw.iter().map(|&v| v as f64).collect();
            let n = vals.len();
            let data = pair(
                Array2::from_shape_vec((n, 1), vals.clone()).unwrap(),
                vec![false; n],
                Array2::from_shape_vec((test.len(), 1), test).unwrap(),
            );
            let t = camargocruz09(&data).unwrap();
            for i in 0..n {
                for j in 0..n {
                    if vals[i] < vals[j] {
                        prop_assert!(t.train.features[(i, 0)] < t.train.features[(j, 0)]);
                    }
                }
            }
        }
    }
}
