//! Principal component analysis via cyclic Jacobi eigen-decomposition of the
//! sample covariance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Off-diagonal Frobenius norm target, relative to `max(1, ||A||_F)`.
pub const JACOBI_TOLERANCE: f64 = 1e-11;
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k` rows of length `d`, orthonormal, sorted by descending eigenvalue.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub explained_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    /// Projects `x` onto the components: `components * (x - mean)`.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::LengthMismatch(self.mean.len(), x.len()));
        }
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(x.iter().zip(&self.mean))
                    .map(|(ci, (xi, mi))| ci * (xi - mi))
                    .sum()
            })
            .collect())
    }

    /// `mean + components^T * y`.
    pub fn inverse_transform(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.components.len() {
            return Err(Error::LengthMismatch(self.components.len(), y.len()));
        }
        let mut out = self.mean.clone();
        for (c, &yi) in self.components.iter().zip(y) {
            for (o, ci) in out.iter_mut().zip(c) {
                *o += ci * yi;
            }
        }
        Ok(out)
    }
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi rotations on a row-major `n x n` symmetric matrix.
///
/// Eigenvectors are sign-normalized so that their largest-magnitude entry is
/// positive, which makes the result a deterministic function of the input.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> Result<SymmetricEigen> {
    if matrix.len() != n * n {
        return Err(Error::LengthMismatch(n * n, matrix.len()));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let threshold = JACOBI_TOLERANCE * scale;

    let mut sweeps = 0;
    while off_diagonal_norm(&a, n) >= threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::ConvergenceFailure(sweeps));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- J^T A J, touching rows/columns p and q only.
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&col| {
            let mut vec: Vec<f64> = (0..n).map(|r| v[r * n + col]).collect();
            let pivot = vec
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best })
                .0;
            if vec[pivot] < 0.0 {
                vec.iter_mut().for_each(|x| *x = -*x);
            }
            vec
        })
        .collect();
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

/// Column means and the unbiased covariance of `rows`.
pub fn covariance(rows: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let d = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::LengthMismatch(d, bad.len()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![0.0; d * d];
    let mut centred = vec![0.0; d];
    for r in rows {
        for ((c, x), m) in centred.iter_mut().zip(r).zip(&mean) {
            *c = x - m;
        }
        for i in 0..d {
            for j in i..d {
                cov[i * d + j] += centred[i] * centred[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / (n - 1) as f64;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    Ok((mean, cov))
}

/// Fits a `k`-component PCA model to the rows of `x`.
pub fn fit_pca(x: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let d = x[0].len();
    if d == 0 {
        return Err(Error::InvalidParameter("feature dimension is zero".into()));
    }
    let max = d.min(n);
    if k == 0 || k > max {
        return Err(Error::KTooLarge { k, max });
    }
    let (mean, cov) = covariance(x)?;
    let eig = symmetric_eigen(&cov, d)?;
    let eigenvalues: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    let explained_ratio = eigenvalues[..k]
        .iter()
        .map(|l| if total > 0.0 { l / total } else { 0.0 })
        .collect();
    Ok(PcaModel {
        mean,
        components: eig.vectors.into_iter().take(k).collect(),
        eigenvalues: eigenvalues[..k].to_vec(),
        explained_ratio,
    })
}
