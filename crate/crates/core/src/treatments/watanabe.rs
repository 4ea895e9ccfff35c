use ndarray::{Array2, Axis};

use super::{PairData, TreatedPair, TreatmentError};

/// Per-attribute ratio `mean(train) / mean(test)`. An attribute whose test
/// mean is zero gets factor 1.
pub fn watanabe08_factors(train: &Array2<f64>, test: &Array2<f64>) -> Vec<f64> {
    let train_means = train.mean_axis(Axis(0)).expect("non-empty train");
    let test_means = test.mean_axis(Axis(0)).expect("non-empty test");
    train_means
        .iter()
        .zip(test_means.iter())
        .map(|(&tr, &te)| if te == 0.0 { 1.0 } else { tr / te })
        .collect()
}

pub fn scale_test_columns(test: &Array2<f64>, factors: &[f64]) -> Array2<f64> {
    let mut out = test.clone();
    for (mut col, &f) in out.columns_mut().into_iter().zip(factors) {
        col.mapv_inplace(|v| v * f);
    }
    out
}

/// Rescale every test attribute so its mean matches the training mean.
/// Training features are left untouched.
pub fn watanabe08(data: &PairData) -> Result<TreatedPair, TreatmentError> {
    data.check_size(1)?;
    let factors = watanabe08_factors(&data.train.features, &data.test.features);
    let test = data
        .test
        .with_features(scale_test_columns(&data.test.features, &factors));
    Ok(TreatedPair::passthrough(data, data.train.clone(), test))
}

#[cfg(test)]
mod tests {
    use super::super::test_support::pair;
    use super::*;
    use ndarray::array;

    #[test]
    fn rescales_by_mean_ratio() {
        // train mean 4, test mean 2: a test value of 2 becomes 4.
        let data = pair(array![[3.0], [5.0]], vec![true, false], array![[2.0], [1.0], [3.0]]);
        let t = watanabe08(&data).unwrap();
        assert_eq!(t.test.features[(0, 0)], 4.0);
        assert_eq!(t.test.features[(1, 0)], 2.0);
        assert_eq!(t.train, data.train);
    }

    #[test]
    fn equal_means_leave_test_unchanged() {
        let data = pair(
            array![[1.0, 10.0], [3.0, 20.0]],
            vec![true, false],
            array![[2.0, 15.0], [2.0, 15.0]],
        );
        assert_eq!(watanabe08(&data).unwrap().test.features, data.test.features);
    }

    #[test]
    fn zero_stays_zero_and_zero_mean_passes_through() {
        let data = pair(
            array![[1.0, 7.0], [3.0, 9.0]],
            vec![true, false],
            array![[0.0, 0.0], [5.0, 0.0]],
        );
        let t = watanabe08(&data).unwrap();
        assert_eq!(t.test.features[(0, 0)], 0.0);
        assert_eq!(t.test.features.column(1).to_vec(), [0.0, 0.0]);
        assert_eq!(watanabe08_factors(&data.train.features, &data.test.features)[1], 1.0);
    }

    #[test]
    fn applying_twice_squares_the_ratio() {
        let train = array![[2.0, 9.0], [6.0, 3.0]];
        let test = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let f = watanabe08_factors(&train, &test);
        let twice = scale_test_columns(&scale_test_columns(&test, &f), &f);
        let squared: Vec<f64> = f.iter().map(|x| x * x).collect();
        let once = scale_test_columns(&test, &squared);
        for (a, b) in twice.iter().zip(once.iter()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}
