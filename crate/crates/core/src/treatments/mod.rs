//! Cross-project data treatments applied to a pair before training.
//!
//! A treatment sees the training instances with labels and the test
//! instances' features only. Test labels travel alongside for evaluation and
//! are never read here.

mod amasaki;
mod camargo;
mod ma;
mod nam;
mod watanabe;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use thiserror::Error;

use crate::dataset::VersionKey;
use crate::pairs::TrainTestPair;

pub use amasaki::{amasaki15, AmasakiParams};
pub use camargo::camargocruz09;
pub use ma::{ma12_weight, ma12_weights, MA12_WEIGHT_FLOOR};
pub use nam::{nam15, NamParams};
pub use watanabe::{scale_test_columns, watanabe08, watanabe08_factors};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Train,
    Test,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Train => "train",
            Side::Test => "test",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TreatmentError {
    #[error("negative value in {side} row {row}, attribute {attribute}")]
    Domain { side: Side, row: usize, attribute: usize },
    #[error("degenerate treatment: {0}")]
    Degenerate(String),
    #[error("treatment needs at least {needed} training and 1 test instance")]
    TooSmall { needed: usize },
}

/// Labelled, weighted training instances.
#[derive(Debug, Clone, PartialEq)]
pub struct Instances {
    pub features: Array2<f64>,
    pub labels: Vec<bool>,
    pub weights: Vec<f64>,
}

impl Instances {
    pub fn new(features: Array2<f64>, labels: Vec<bool>) -> Self {
        let weights = vec![1.0; labels.len()];
        Self {
            features,
            labels,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Keep the rows at `rows` (in the given order).
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            weights: rows.iter().map(|&i| self.weights[i]).collect(),
        }
    }
}

/// Test instances tagged with the project version they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    pub features: Array2<f64>,
    pub labels: Vec<bool>,
    pub versions: Vec<VersionKey>,
    /// Index into `versions` for every row.
    pub version_of: Vec<usize>,
}

impl TestSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn with_features(&self, features: Array2<f64>) -> Self {
        Self {
            features,
            labels: self.labels.clone(),
            versions: self.versions.clone(),
            version_of: self.version_of.clone(),
        }
    }
}

/// Untreated matrices of one train/test pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairData {
    pub train: Instances,
    pub test: TestSet,
}

impl PairData {
    pub fn from_pair(pair: &TrainTestPair) -> Self {
        let d = pair
            .train
            .iter()
            .chain(&pair.test)
            .flat_map(|r| r.records.first())
            .map(|r| r.features.len())
            .next()
            .unwrap_or(0);
        let rows = |releases: &[std::sync::Arc<crate::dataset::Release>]| {
            let recs: Vec<_> = releases.iter().flat_map(|r| r.records.iter()).collect();
            let mut m = Array2::zeros((recs.len(), d));
            for (i, r) in recs.iter().enumerate() {
                for (j, &v) in r.features.iter().enumerate() {
                    m[(i, j)] = v;
                }
            }
            let labels = recs.iter().map(|r| r.defective()).collect::<Vec<_>>();
            (m, labels)
        };
        let (train_x, train_y) = rows(&pair.train);
        let (test_x, test_y) = rows(&pair.test);
        let versions: Vec<VersionKey> = pair.test.iter().map(|r| r.key()).collect();
        let version_of = pair
            .test
            .iter()
            .enumerate()
            .flat_map(|(i, r)| std::iter::repeat_n(i, r.records.len()))
            .collect();
        Self {
            train: Instances::new(train_x, train_y),
            test: TestSet {
                features: test_x,
                labels: test_y,
                versions,
                version_of,
            },
        }
    }

    pub fn attributes(&self) -> usize {
        self.train.features.ncols()
    }

    fn check_size(&self, needed: usize) -> Result<(), TreatmentError> {
        if self.train.len() < needed || self.test.is_empty() {
            Err(TreatmentError::TooSmall { needed })
        } else {
            Ok(())
        }
    }
}

/// Training-ready data after a treatment.
#[derive(Debug, Clone, PartialEq)]
pub struct TreatedPair {
    pub train: Instances,
    pub test: TestSet,
    /// Original (0-based) attribute indices backing the feature columns.
    pub selected_attributes: Vec<usize>,
    /// Set when Nam15 could not separate instances and kept the original
    /// labels.
    pub relabel_fallback: bool,
}

impl TreatedPair {
    fn passthrough(data: &PairData, train: Instances, test: TestSet) -> Self {
        Self {
            train,
            test,
            selected_attributes: (0..data.attributes()).collect(),
            relabel_fallback: false,
        }
    }
}

pub fn identity_treatment(data: &PairData) -> TreatedPair {
    TreatedPair::passthrough(data, data.train.clone(), data.test.clone())
}

/// Threshold overrides for the treatments that have any.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TreatmentParams {
    pub amasaki: AmasakiParams,
    pub nam: NamParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Technique {
    Amasaki15,
    Watanabe08,
    CamargoCruz09,
    Nam15,
    Ma12,
    Identity,
}

impl Technique {
    pub const PUBLISHED: [Technique; 5] = [
        Self::Amasaki15,
        Self::Watanabe08,
        Self::CamargoCruz09,
        Self::Nam15,
        Self::Ma12,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Amasaki15 => "amasaki15",
            Self::Watanabe08 => "watanabe08",
            Self::CamargoCruz09 => "camargocruz09",
            Self::Nam15 => "nam15",
            Self::Ma12 => "ma12",
            Self::Identity => "identity",
        }
    }

    pub fn apply(self, data: &PairData, params: &TreatmentParams) -> Result<TreatedPair, TreatmentError> {
        match self {
            Self::Amasaki15 => amasaki15(data, &params.amasaki),
            Self::Watanabe08 => watanabe08(data),
            Self::CamargoCruz09 => camargocruz09(data),
            Self::Nam15 => nam15(data, &params.nam),
            Self::Ma12 => ma12_weights(data),
            Self::Identity => Ok(identity_treatment(data)),
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technique {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        [Self::PUBLISHED.as_slice(), &[Self::Identity]]
            .concat()
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown technique '{s}'"))
    }
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n.is_multiple_of(2) {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    } else {
        values[n / 2]
    }
}

pub(crate) fn column_medians(m: &Array2<f64>) -> Vec<f64> {
    m.columns().into_iter().map(|c| median(&mut c.to_vec())).collect()
}

/// `log(1 + x)` elementwise; every entry must be non-negative.
pub(crate) fn log1p_checked(m: &Array2<f64>, side: Side) -> Result<Array2<f64>, TreatmentError> {
    if let Some(((row, attribute), _)) = m.indexed_iter().find(|(_, &v)| v < 0.0) {
        return Err(TreatmentError::Domain { side, row, attribute });
    }
    Ok(m.mapv(f64::ln_1p))
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use ndarray::Array2;

    pub fn pair(train: Array2<f64>, train_labels: Vec<bool>, test: Array2<f64>) -> PairData {
        let n = test.nrows();
        PairData {
            train: Instances::new(train, train_labels),
            test: TestSet {
                features: test,
                labels: (0..n).map(|i| i % 2 == 0).collect(),
                versions: vec![VersionKey {
                    project: "t".into(),
                    version: "1".into(),
                }],
                version_of: vec![0; n],
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::pair;
    use super::*;
    use ndarray::array;

    #[test]
    fn identity_passes_through() {
        let data = pair(array![[1.0, 2.0], [3.0, 4.0]], vec![true, false], array![[5.0, 6.0]]);
        let t = identity_treatment(&data);
        assert_eq!(t.train, data.train);
        assert_eq!(t.test, data.test);
        assert_eq!(t.train.weights, [1.0, 1.0]);
        assert_eq!(t.selected_attributes, [0, 1]);
    }

    #[test]
    fn technique_names_parse() {
        for t in Technique::PUBLISHED {
            assert_eq!(t.name().parse::<Technique>().unwrap(), t);
        }
        assert_eq!("Identity".parse::<Technique>().unwrap(), Technique::Identity);
        assert!("nosuch".parse::<Technique>().is_err());
    }

    #[test]
    fn test_labels_untouched_by_every_treatment() {
        let data = pair(
            array![[1.0, 5.0], [2.0, 0.0], [9.0, 3.0], [4.0, 4.0]],
            vec![true, false, true, false],
            array![[1.0, 4.0], [3.0, 1.0], [8.0, 2.0]],
        );
        for t in Technique::PUBLISHED {
            let treated = t.apply(&data, &TreatmentParams::default()).unwrap();
            assert_eq!(treated.test.labels, data.test.labels, "{t}");
            assert_eq!(treated.test.version_of, data.test.version_of, "{t}");
            assert!(treated.train.weights.iter().all(|&w| w > 0.0), "{t}");
            assert_eq!(treated.train.features.ncols(), treated.selected_attributes.len());
            assert_eq!(treated, t.apply(&data, &TreatmentParams::default()).unwrap());
        }
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
