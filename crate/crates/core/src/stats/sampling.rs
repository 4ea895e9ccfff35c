use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::StatsError;
use crate::treatments::Instances;

/// Randomly drops majority-class instances until both classes are the same
/// size. Survivors keep their original order and weights.
pub fn undersample(train: &Instances, seed: u64) -> Result<Instances, StatsError> {
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..train.len()).partition(|&i| train.labels[i]);
    if pos.is_empty() || neg.is_empty() {
        return Err(StatsError::SingleClass);
    }
    let (minority, majority) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: Vec<usize> = sample(&mut rng, majority.len(), minority.len())
        .into_iter()
        .map(|i| majority[i])
        .chain(minority)
        .collect();
    keep.sort_unstable();
    Ok(train.select_rows(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn data(defective: usize, clean: usize) -> Instances {
        let n = defective + clean;
        let mut d = Instances::new(
            Array2::from_shape_fn((n, 1), |(i, _)| i as f64),
            (0..n).map(|i| i < defective).collect(),
        );
        d.weights = (0..n).map(|i| 1.0 + i as f64).collect();
        d
    }

    #[test]
    fn reduces_majority() {
        let out = undersample(&data(10, 4), 1).unwrap();
        assert_eq!(out.labels.iter().filter(|&&l| l).count(), 4);
        assert_eq!(out.labels.iter().filter(|&&l| !l).count(), 4);
        let ids: Vec<f64> = out.features.column(0).to_vec();
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        for (id, w) in ids.iter().zip(&out.weights) {
            assert_eq!(*w, id + 1.0);
        }
    }

    #[test]
    fn balanced_is_unchanged() {
        let d = data(3, 3);
        assert_eq!(undersample(&d, 9).unwrap(), d);
    }

    #[test]
    fn seeded() {
        let d = data(40, 7);
        assert_eq!(undersample(&d, 5).unwrap(), undersample(&d, 5).unwrap());
        assert_ne!(undersample(&d, 5).unwrap(), undersample(&d, 6).unwrap());
    }

    #[test]
    fn single_class_fails() {
        assert_eq!(undersample(&data(0, 5), 1), Err(StatsError::SingleClass));
    }
}
