use serde::{Deserialize, Serialize};

use super::{check_dim, LabeledSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub n_classes: usize,
    pub k: usize,
}

pub fn fit_knn(train: &LabeledSet, k: usize) -> Result<KnnModel> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if k == 0 {
        return Err(Error::InvalidParameter("knn k must be >= 1".into()));
    }
    if k > train.len() {
        return Err(Error::KExceedsN { k, n: train.len() });
    }
    train.check_finite()?;
    Ok(KnnModel {
        x: train.x().to_vec(),
        y: train.y().to_vec(),
        n_classes: train.n_classes(),
        k,
    })
}

impl KnnModel {
    /// Row indices of the `k` nearest training rows, nearest first; equal
    /// distances keep the lower row index first.
    pub fn neighbours(&self, x: &[f64]) -> Result<Vec<usize>> {
        check_dim(self.x[0].len(), x)?;
        let mut dist: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let d: f64 = row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(dist.into_iter().take(self.k).map(|(_, i)| i).collect())
    }

    fn votes(&self, neighbours: &[usize]) -> Vec<usize> {
        let mut votes = vec![0usize; self.n_classes];
        for &i in neighbours {
            votes[self.y[i]] += 1;
        }
        votes
    }

    /// Majority vote; a tie between classes goes to whichever tied class
    /// owns the nearest neighbour.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let nn = self.neighbours(x)?;
        let votes = self.votes(&nn);
        let top = *votes.iter().max().expect("at least one class");
        Ok(nn
            .iter()
            .map(|&i| self.y[i])
            .find(|&c| votes[c] == top)
            .expect("a top class has a neighbour"))
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let nn = self.neighbours(x)?;
        Ok(self
            .votes(&nn)
            .into_iter()
            .map(|v| v as f64 / self.k as f64)
            .collect())
    }
}
