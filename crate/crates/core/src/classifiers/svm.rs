//! One-vs-rest linear SVM trained by primal stochastic subgradient descent
//! (Pegasos step size `1 / (lambda * t)`).
//!
//! The bias is learned as the weight of a constant unit feature, so it is
//! shrunk together with `w`. No projection step is applied; the iterate is
//! `(1 / (lambda * t))` times a sum of at most `t` sample vectors and stays
//! bounded by `max |x| / lambda`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{argmax_lowest, check_dim, LabeledSet};
use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub params: SvmParams,
    pub seed: u64,
}

pub fn fit_svm(train: &LabeledSet, params: &SvmParams, seed: u64) -> Result<SvmModel> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if train.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: train.len(),
        });
    }
    if !(params.lambda > 0.0 && params.lambda.is_finite()) || params.epochs == 0 {
        return Err(Error::InvalidParameter(format!(
            "svm needs lambda > 0 and epochs >= 1, got {} / {}",
            params.lambda, params.epochs
        )));
    }
    train.check_finite()?;
    let d = train.dim();
    let n = train.len();
    let mut weights = Vec::with_capacity(train.n_classes());
    let mut biases = Vec::with_capacity(train.n_classes());
    let mut order: Vec<usize> = (0..n).collect();

    for class in 0..train.n_classes() {
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut t = 0u64;
        for epoch in 0..params.epochs {
            let counter = (class as u64) << 32 | epoch as u64;
            order.sort_unstable();
            order.shuffle(&mut stream_rng(seed, stream::SVM_EPOCH, counter));
            for &i in &order {
                t += 1;
                let eta = 1.0 / (params.lambda * t as f64);
                let x = &train.x()[i];
                let y = if train.y()[i] == class { 1.0 } else { -1.0 };
                let margin = y * (dot(&w, x) + b);
                let shrink = 1.0 - eta * params.lambda;
                w.iter_mut().for_each(|wi| *wi *= shrink);
                b *= shrink;
                if margin < 1.0 {
                    for (wi, xi) in w.iter_mut().zip(x) {
                        *wi += eta * y * xi;
                    }
                    b += eta * y;
                }
            }
        }
        if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        weights.push(w);
        biases.push(b);
    }
    Ok(SvmModel {
        weights,
        biases,
        params: *params,
        seed,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SvmModel {
    /// `w_c . x + b_c` for every class.
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.weights[0].len(), x)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, x) + b)
            .collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax_lowest(&self.decision_values(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_per_class() {
        let train = LabeledSet::new(
            vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            vec![0, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let m = fit_svm(&train, &SvmParams::default(), 42).unwrap();
        for x0 in [-2.0, -1.0, -0.5, -0.01] {
            assert_eq!(m.predict(&[x0, 0.0]).unwrap(), 0, "x0 = {x0}");
            assert_eq!(m.predict(&[-x0, 0.0]).unwrap(), 1, "x0 = {}", -x0);
        }
    }

    #[test]
    fn errors() {
        let names = vec!["a".to_string()];
        let empty = LabeledSet::new(vec![], vec![], names.clone()).unwrap();
        assert!(matches!(fit_svm(&empty, &SvmParams::default(), 1), Err(Error::EmptyTrainingSet)));
        let bad = LabeledSet::new(vec![vec![f64::NAN], vec![1.0]], vec![0, 0], names).unwrap();
        assert!(matches!(fit_svm(&bad, &SvmParams::default(), 1), Err(Error::NonFiniteInput)));
    }
}
