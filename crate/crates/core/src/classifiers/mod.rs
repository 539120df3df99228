//! Standardization and the three classifiers (KNN, random forest, linear SVM).
//!
//! All models take already-prepared feature rows; the pipeline standardizes
//! and PCA-projects before fitting. Class-score ties always resolve to the
//! lowest class index unless a model documents otherwise.

mod forest;
mod knn;
mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use forest::{best_split, fit_rf, gini, ForestModel, ForestParams, Node, Split, Tree};
pub use knn::{fit_knn, KnnModel};
pub use svm::{fit_svm, SvmModel, SvmParams};

/// Feature rows with class labels in `0..class_names.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    x: Vec<Vec<f64>>,
    y: Vec<usize>,
    class_names: Vec<String>,
}

impl LabeledSet {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(x.len(), y.len()));
        }
        if let Some(&label) = y.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::LabelOutOfRange {
                label,
                classes: class_names.len(),
            });
        }
        if let Some(first) = x.first() {
            if let Some(bad) = x.iter().find(|r| r.len() != first.len()) {
                return Err(Error::LengthMismatch(first.len(), bad.len()));
            }
        }
        Ok(Self { x, y, class_names })
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    fn check_finite(&self) -> Result<()> {
        if self.x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(())
    }
}

/// Per-coordinate z-scoring with the unbiased (n-1) standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Near-zero deviations are stored as 1 so the coordinate is only shifted.
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let n = x.len();
        if n < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: n });
        }
        let d = x[0].len();
        let mut means = vec![0.0; d];
        for row in x {
            if row.len() != d {
                return Err(Error::LengthMismatch(d, row.len()));
            }
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);
        let mut stds = vec![0.0; d];
        for row in x {
            for ((s, v), m) in stds.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut stds {
            *s = (*s / (n - 1) as f64).sqrt();
            if s.is_nan() || *s < 1e-12 {
                *s = 1.0;
            }
        }
        Ok(Self { means, stds })
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.means.len() {
            return Err(Error::LengthMismatch(self.means.len(), x.len()));
        }
        Ok(x
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Knn,
    Rf,
    Svm,
}

impl ClassifierKind {
    /// Comparison-table column order.
    pub const ALL: [ClassifierKind; 3] = [ClassifierKind::Knn, ClassifierKind::Rf, ClassifierKind::Svm];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::Rf => "rf",
            ClassifierKind::Svm => "svm",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "KNN",
            ClassifierKind::Rf => "RF",
            ClassifierKind::Svm => "SVM",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knn" => Ok(ClassifierKind::Knn),
            "rf" => Ok(ClassifierKind::Rf),
            "svm" => Ok(ClassifierKind::Svm),
            other => Err(Error::InvalidParameter(format!("unknown classifier '{other}'"))),
        }
    }
}

/// Hyperparameters for all three classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub knn_k: usize,
    pub forest: ForestParams,
    pub svm: SvmParams,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            knn_k: 5,
            forest: ForestParams::default(),
            svm: SvmParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Knn(KnnModel),
    Rf(ForestModel),
    Svm(SvmModel),
}

impl TrainedModel {
    pub fn fit(kind: ClassifierKind, train: &LabeledSet, params: &ClassifierParams, seed: u64) -> Result<Self> {
        Ok(match kind {
            ClassifierKind::Knn => TrainedModel::Knn(fit_knn(train, params.knn_k)?),
            ClassifierKind::Rf => TrainedModel::Rf(fit_rf(train, &params.forest, seed)?),
            ClassifierKind::Svm => TrainedModel::Svm(fit_svm(train, &params.svm, seed)?),
        })
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::Knn(_) => ClassifierKind::Knn,
            TrainedModel::Rf(_) => ClassifierKind::Rf,
            TrainedModel::Svm(_) => ClassifierKind::Svm,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        match self {
            TrainedModel::Knn(m) => m.predict(x),
            TrainedModel::Rf(m) => m.predict(x),
            TrainedModel::Svm(m) => m.predict(x),
        }
    }

    /// Per-class scores: neighbour vote share, tree vote share, or SVM margin.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Knn(m) => m.scores(x),
            TrainedModel::Rf(m) => m.scores(x),
            TrainedModel::Svm(m) => m.decision_values(x),
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax_lowest<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::LengthMismatch(expected, x.len()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_examples() {
        let s = Standardizer::fit(&[vec![-1.0, 5.0], vec![1.0, 5.0]]).unwrap();
        assert_eq!(s.means, vec![0.0, 5.0]);
        assert!((s.stds[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.stds[1], 1.0);
        let z = s.apply(&[-1.0, 5.0]).unwrap();
        assert!((z[0] + 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(z[1], 0.0);
        assert_eq!(s.apply(&s.means.clone()).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(Standardizer::fit(&[vec![1.0]]), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn labeled_set_validation() {
        let names = vec!["a".to_string(), "b".to_string()];
        assert!(LabeledSet::new(vec![vec![1.0]], vec![2], names.clone()).is_err());
        assert!(LabeledSet::new(vec![vec![1.0]], vec![0, 1], names.clone()).is_err());
        assert!(LabeledSet::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0, 1], names).is_err());
    }

    #[test]
    fn kind_parsing() {
        for k in ClassifierKind::ALL {
            assert_eq!(k.name().parse::<ClassifierKind>().unwrap(), k);
        }
        assert_eq!("RF".parse::<ClassifierKind>().unwrap(), ClassifierKind::Rf);
        assert!("tree".parse::<ClassifierKind>().is_err());
    }

    #[test]
    fn argmax_ties_low() {
        assert_eq!(argmax_lowest(&[1, 3, 3]), 1);
        assert_eq!(argmax_lowest(&[2.0, 2.0]), 0);
    }
}
