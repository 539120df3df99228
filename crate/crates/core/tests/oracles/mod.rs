//! Independent reference implementations used by the integration and
//! acceptance tests. Each one evaluates its definition as directly as
//! possible, trading speed for obviousness.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use railtex_core::texture::Glcm;
use railtex_core::{GrayImage, LabeledSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Co-occurrence counts by enumerating every ordered pair of pixels and
/// keeping those displaced by exactly `(dx, dy)`.
pub fn glcm_counts(data: &[u8], w: usize, h: usize, g: usize, dx: i64, dy: i64, symmetric: bool) -> Vec<u64> {
    let mut m = vec![0u64; g * g];
    for p in 0..w * h {
        let (px, py) = ((p % w) as i64, (p / w) as i64);
        for q in 0..w * h {
            let (qx, qy) = ((q % w) as i64, (q / w) as i64);
            if qx - px == dx && qy - py == dy {
                let (a, b) = (data[p] as usize, data[q] as usize);
                m[a * g + b] += 1;
                if symmetric {
                    m[b * g + a] += 1;
                }
            }
        }
    }
    m
}

/// Row-major probability matrix of a GLCM as nested rows.
pub fn matrix(glcm: &Glcm) -> Vec<Vec<f64>> {
    let g = glcm.levels();
    (0..g).map(|i| (0..g).map(|j| glcm.p(i, j)).collect()).collect()
}

pub fn contrast(p: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            s += ((i as f64) - (j as f64)).powi(2) * v;
        }
    }
    s
}

pub fn energy(p: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for row in p {
        for &v in row {
            s += v * v;
        }
    }
    s
}

pub fn homogeneity(p: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            s += v / (1.0 + ((i as f64) - (j as f64)).abs());
        }
    }
    s
}

pub fn entropy(p: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for row in p {
        for &v in row {
            if v > 0.0 {
                s -= v * v.ln();
            }
        }
    }
    s
}

/// Pearson correlation of the (row, column) index pair under `p`, with
/// separate row and column marginals. `None` when either variance is 0.
pub fn correlation(p: &[Vec<f64>]) -> Option<f64> {
    let g = p.len();
    let (mut mi, mut mj) = (0.0, 0.0);
    for i in 0..g {
        for j in 0..g {
            mi += i as f64 * p[i][j];
            mj += j as f64 * p[i][j];
        }
    }
    let (mut vi, mut vj, mut cov) = (0.0, 0.0, 0.0);
    for i in 0..g {
        for j in 0..g {
            let (a, b) = (i as f64 - mi, j as f64 - mj);
            vi += a * a * p[i][j];
            vj += b * b * p[i][j];
            cov += a * b * p[i][j];
        }
    }
    if vi < 1e-12 || vj < 1e-12 {
        None
    } else {
        Some(cov / (vi.sqrt() * vj.sqrt()))
    }
}

/// Exhaustive Otsu over `t = 0..=254` with class 0 = `{v <= t}`.
///
/// Between-class variance `w0*w1*(mu0-mu1)^2` equals
/// `(s0*n1 - s1*n0)^2 / (N^2 * n0 * n1)`; candidates are compared as exact
/// fractions, so histogram totals must stay below about 1e5.
pub fn otsu(hist: &[u64; 256]) -> Option<u8> {
    let mut best: Option<(u8, u128, u128)> = None;
    for t in 0..255usize {
        let (mut n0, mut s0, mut n1, mut s1) = (0u128, 0u128, 0u128, 0u128);
        for (v, &c) in hist.iter().enumerate() {
            if v <= t {
                n0 += c as u128;
                s0 += v as u128 * c as u128;
            } else {
                n1 += c as u128;
                s1 += v as u128 * c as u128;
            }
        }
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let d = (s0 * n1).abs_diff(s1 * n0);
        let (num, den) = (d * d, n0 * n1);
        let better = match best {
            None => true,
            Some((_, bn, bd)) => num * bd > bn * den,
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    best.map(|(t, ..)| t)
}

/// Equalized image from the cdf formula, counting `#{pixels <= v}` directly.
pub fn equalize(img: &GrayImage) -> GrayImage {
    let data = img.data();
    let n = data.len() as f64;
    let cdf = |v: u8| data.iter().filter(|&&p| p <= v).count() as f64;
    let min_level = *data.iter().min().unwrap();
    let cdf_min = cdf(min_level);
    if cdf_min == n {
        return img.clone();
    }
    let out = data
        .iter()
        .map(|&v| {
            let x = 255.0 * (cdf(v) - cdf_min) / (n - cdf_min);
            (x + 0.5).floor() as u8
        })
        .collect();
    GrayImage::new(img.width(), img.height(), out).unwrap()
}

/// Standard deviation of the 256 histogram bin counts.
pub fn bin_count_std(img: &GrayImage) -> f64 {
    let hist = img.histogram();
    let mean = hist.iter().sum::<u64>() as f64 / 256.0;
    (hist.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / 256.0).sqrt()
}

/// Eigenvalues of a symmetric positive semi-definite matrix by power
/// iteration with deflation, largest first.
pub fn power_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7 + k * 3) % 5) as f64).collect();
        let mut lambda = 0.0;
        for _ in 0..20_000 {
            let mut w = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    w[i] += m[i][j] * v[j];
                }
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-300 {
                lambda = 0.0;
                break;
            }
            w.iter_mut().for_each(|x| *x /= norm);
            let delta: f64 = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
            v = w;
            lambda = norm;
            if delta < 1e-14 {
                break;
            }
        }
        for i in 0..n {
            for j in 0..n {
                m[i][j] -= lambda * v[i] * v[j];
            }
        }
        out.push(lambda);
    }
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// Random symmetric positive semi-definite matrix `B^T B / n`.
pub fn random_covariance(r: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<Vec<f64>> {
    let b: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| r.random_range(-3.0..3.0)).collect())
        .collect();
    (0..d)
        .map(|i| (0..d).map(|j| b.iter().map(|row| row[i] * row[j]).sum::<f64>() / n as f64).collect())
        .collect()
}

pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|&c| (c as f64 / n as f64).powi(2)).sum::<f64>()
}

/// Best `(feature, threshold, decrease)` over every feature and every
/// midpoint between consecutive distinct values; `x <= threshold` goes left.
/// First strictly larger decrease wins when scanning features then thresholds
/// in ascending order.
pub fn best_split(x: &[Vec<f64>], y: &[usize], n_classes: usize, min_leaf: usize) -> Option<(usize, f64, f64)> {
    let n = y.len();
    let mut parent = vec![0; n_classes];
    y.iter().for_each(|&c| parent[c] += 1);
    let g_parent = gini(&parent);
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..x[0].len() {
        let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let mut left = vec![0; n_classes];
            let mut right = vec![0; n_classes];
            for (row, &c) in x.iter().zip(y) {
                if row[f] <= t {
                    left[c] += 1;
                } else {
                    right[c] += 1;
                }
            }
            let (nl, nr) = (left.iter().sum::<usize>(), right.iter().sum::<usize>());
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let dec = g_parent - (nl as f64 * gini(&left) + nr as f64 * gini(&right)) / n as f64;
            if dec > 1e-12 && best.is_none_or(|(_, _, b)| dec > b) {
                best = Some((f, t, dec));
            }
        }
    }
    best
}

/// Two 2-D clusters of `per_class` points each, uniform in discs of radius
/// 0.5 around (-3, 0) and (+3, 0).
pub fn two_clusters(r: &mut ChaCha8Rng, per_class: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    clusters(r, &[(-3.0, 0.0), (3.0, 0.0)], 0.5, per_class)
}

/// Points uniform in discs around `centres`; labels follow centre order.
pub fn clusters(r: &mut ChaCha8Rng, centres: &[(f64, f64)], radius: f64, per_class: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..per_class {
        for (c, &(cx, cy)) in centres.iter().enumerate() {
            let rad = radius * r.random::<f64>().sqrt();
            let th = r.random_range(0.0..std::f64::consts::TAU);
            x.push(vec![cx + rad * th.cos(), cy + rad * th.sin()]);
            y.push(c);
        }
    }
    (x, y)
}

/// Train and held-out sets for the separable cluster benchmark.
pub fn cluster_benchmark(seed: u64) -> (LabeledSet, Vec<Vec<f64>>, Vec<usize>) {
    let mut r = rng(seed);
    let (x, y) = two_clusters(&mut r, 50);
    let (tx, ty) = two_clusters(&mut r, 50);
    let train = LabeledSet::new(x, y, vec!["A".into(), "B".into()]).unwrap();
    (train, tx, ty)
}

pub fn random_image(r: &mut ChaCha8Rng, max_side: usize) -> GrayImage {
    let w = r.random_range(1..=max_side);
    let h = r.random_range(1..=max_side);
    let levels = r.random_range(2..=256usize);
    let palette: Vec<u8> = (0..levels).map(|_| r.random()).collect();
    GrayImage::from_fn(w, h, |_, _| palette[r.random_range(0..levels)]).unwrap()
}
