//! Gray-level co-occurrence matrices and texture descriptors.
//!
//! Feature vectors are laid out as: for each distance, for each GLCM
//! feature (contrast, correlation, energy, homogeneity, entropy), either the
//! four angles 0/45/90/135 in that order or their mean, followed by the six
//! first-order histogram statistics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_io::GrayImage;

pub const ANGLES: [u32; 4] = [0, 45, 90, 135];
pub const GLCM_FEATURES: [&str; 5] = ["contrast", "correlation", "energy", "homogeneity", "entropy"];
pub const FIRST_ORDER_FEATURES: [&str; 6] = [
    "fo_mean",
    "fo_std",
    "fo_smoothness",
    "fo_skewness",
    "fo_uniformity",
    "fo_entropy",
];

/// Raster of quantized gray levels in `0..levels`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedImage {
    width: usize,
    height: usize,
    levels: usize,
    data: Vec<u8>,
}

impl QuantizedImage {
    pub fn new(width: usize, height: usize, levels: usize, data: Vec<u8>) -> Result<Self> {
        if !(2..=256).contains(&levels) {
            return Err(Error::InvalidLevelCount(levels));
        }
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} raster with {} values",
                data.len()
            )));
        }
        if let Some(&v) = data.iter().find(|&&v| v as usize >= levels) {
            return Err(Error::InvalidImage(format!("level {v} outside 0..{levels}")));
        }
        Ok(Self {
            width,
            height,
            levels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

/// `v -> floor(v * levels / 256)`.
pub fn quantize(img: &GrayImage, levels: usize) -> Result<QuantizedImage> {
    if !(2..=256).contains(&levels) {
        return Err(Error::InvalidLevelCount(levels));
    }
    let data = img
        .data()
        .iter()
        .map(|&v| (v as usize * levels / 256) as u8)
        .collect();
    QuantizedImage::new(img.width(), img.height(), levels, data)
}

/// Co-occurrence counts and their normalized probabilities for one offset.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    levels: usize,
    counts: Vec<u64>,
    probs: Vec<f64>,
    offset: (i64, i64),
    symmetric: bool,
}

impl Glcm {
    /// Builds from a row-major `levels x levels` count table.
    pub fn from_counts(levels: usize, counts: Vec<u64>, offset: (i64, i64)) -> Result<Self> {
        if levels == 0 || counts.len() != levels * levels {
            return Err(Error::InvalidParameter(format!(
                "{} counts for {levels} levels",
                counts.len()
            )));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyGlcm);
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        let symmetric = is_symmetric(levels, &counts);
        Ok(Self {
            levels,
            counts,
            probs,
            offset,
            symmetric,
        })
    }

    /// Builds from a row-major probability table that must sum to one.
    pub fn from_probs(levels: usize, probs: Vec<f64>) -> Result<Self> {
        if levels == 0 || probs.len() != levels * levels {
            return Err(Error::InvalidParameter(format!(
                "{} probabilities for {levels} levels",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::UnnormalizedGlcm(f64::NAN));
        }
        let sum: f64 = probs.iter().sum();
        if sum == 0.0 {
            return Err(Error::EmptyGlcm);
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::UnnormalizedGlcm(sum));
        }
        let symmetric = is_symmetric(levels, &probs);
        Ok(Self {
            levels,
            counts: Vec::new(),
            probs,
            offset: (0, 0),
            symmetric,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Raw counts; empty when built from probabilities.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.levels + j]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.levels + j]
    }

    pub fn offset(&self) -> (i64, i64) {
        self.offset
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let g = self.levels;
        self.probs
            .iter()
            .enumerate()
            .map(move |(k, &p)| (k / g, k % g, p))
    }
}

fn is_symmetric<T: PartialEq>(g: usize, m: &[T]) -> bool {
    (0..g).all(|i| (i + 1..g).all(|j| m[i * g + j] == m[j * g + i]))
}

/// Counts pairs `(q(x, y), q(x + dx, y + dy))` with both pixels in bounds.
/// `symmetric` adds the transposed counts.
pub fn compute_glcm(q: &QuantizedImage, dx: i64, dy: i64, symmetric: bool) -> Result<Glcm> {
    if (dx, dy) == (0, 0) {
        return Err(Error::ZeroOffset);
    }
    let (w, h) = (q.width as i64, q.height as i64);
    if dx.abs() >= w || dy.abs() >= h {
        return Err(Error::OffsetExceedsImage {
            dx,
            dy,
            width: q.width,
            height: q.height,
        });
    }
    let g = q.levels;
    let mut counts = vec![0u64; g * g];
    let (x_lo, x_hi) = (0.max(-dx), w.min(w - dx));
    let (y_lo, y_hi) = (0.max(-dy), h.min(h - dy));
    for y in y_lo..y_hi {
        let row = (y * w) as usize;
        let nrow = ((y + dy) * w) as usize;
        for x in x_lo..x_hi {
            let a = q.data[row + x as usize] as usize;
            let b = q.data[nrow + (x + dx) as usize] as usize;
            counts[a * g + b] += 1;
        }
    }
    if symmetric {
        for i in 0..g {
            for j in i..g {
                let s = counts[i * g + j] + counts[j * g + i];
                counts[i * g + j] = s;
                counts[j * g + i] = s;
            }
        }
    }
    Glcm::from_counts(g, counts, (dx, dy))
}

/// Pixel displacement for one of the four standard directions; y grows downward.
pub fn angle_to_offset(angle: u32, distance: i64) -> Result<(i64, i64)> {
    let d = distance;
    match angle {
        0 => Ok((d, 0)),
        45 => Ok((d, -d)),
        90 => Ok((0, -d)),
        135 => Ok((-d, -d)),
        other => Err(Error::UnsupportedAngle(other)),
    }
}

pub fn glcm_contrast(g: &Glcm) -> f64 {
    g.cells()
        .map(|(i, j, p)| {
            let d = i as f64 - j as f64;
            d * d * p
        })
        .sum()
}

/// Marginal mean and variance of a GLCM (row marginal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlcmStats {
    pub mu: f64,
    pub sigma2: f64,
}

pub fn glcm_stats(g: &Glcm) -> GlcmStats {
    let mu: f64 = g.cells().map(|(i, _, p)| i as f64 * p).sum();
    let sigma2: f64 = g
        .cells()
        .map(|(i, _, p)| (i as f64 - mu) * (i as f64 - mu) * p)
        .sum();
    GlcmStats {
        mu,
        sigma2: sigma2.max(0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: f64,
    /// Set when the marginal variance vanishes and the value is reported as 0.
    pub degenerate: bool,
}

pub fn glcm_correlation(g: &Glcm) -> Result<Correlation> {
    if !g.is_symmetric() {
        return Err(Error::AsymmetricGlcm);
    }
    let GlcmStats { mu, sigma2 } = glcm_stats(g);
    if sigma2 < 1e-12 {
        return Ok(Correlation {
            value: 0.0,
            degenerate: true,
        });
    }
    let cov: f64 = g
        .cells()
        .map(|(i, j, p)| (i as f64 - mu) * (j as f64 - mu) * p)
        .sum();
    Ok(Correlation {
        value: (cov / sigma2).clamp(-1.0, 1.0),
        degenerate: false,
    })
}

pub fn glcm_energy(g: &Glcm) -> f64 {
    g.probs.iter().map(|p| p * p).sum()
}

pub fn glcm_homogeneity(g: &Glcm) -> f64 {
    g.cells()
        .map(|(i, j, p)| p / (1.0 + i.abs_diff(j) as f64))
        .sum()
}

/// Shannon entropy in nats.
pub fn glcm_entropy(g: &Glcm) -> f64 {
    -g.probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderStats {
    pub mean: f64,
    pub std: f64,
    pub smoothness: f64,
    pub skewness: f64,
    pub uniformity: f64,
    pub entropy: f64,
}

impl FirstOrderStats {
    pub fn to_array(self) -> [f64; 6] {
        [
            self.mean,
            self.std,
            self.smoothness,
            self.skewness,
            self.uniformity,
            self.entropy,
        ]
    }
}

/// Histogram statistics on the 0-255 scale. Skewness is the standardized
/// third moment (0 for a flat image); entropy is in nats.
pub fn first_order_stats(img: &GrayImage) -> FirstOrderStats {
    let n = img.len() as f64;
    let probs: Vec<(f64, f64)> = img
        .histogram()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(v, &c)| (v as f64, c as f64 / n))
        .collect();
    let mean: f64 = probs.iter().map(|(v, p)| v * p).sum();
    let var: f64 = probs.iter().map(|(v, p)| (v - mean).powi(2) * p).sum();
    let m3: f64 = probs.iter().map(|(v, p)| (v - mean).powi(3) * p).sum();
    let std = var.sqrt();
    FirstOrderStats {
        mean,
        std,
        smoothness: 1.0 - 1.0 / (1.0 + var),
        skewness: if std > 0.0 { m3 / (std * std * std) } else { 0.0 },
        uniformity: probs.iter().map(|(_, p)| p * p).sum(),
        entropy: -probs.iter().map(|(_, p)| p * p.ln()).sum::<f64>(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleMode {
    PerAngle,
    Averaged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub levels: usize,
    pub distances: Vec<u32>,
    pub angle_mode: AngleMode,
    pub symmetric: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            levels: 32,
            distances: vec![1],
            angle_mode: AngleMode::PerAngle,
            symmetric: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub image_id: String,
    pub schema: Vec<String>,
    pub values: Vec<f64>,
}

/// Ordered feature names produced by [`extract_features`] for `cfg`.
///
/// Distance 1 is implicit in the names; other distances carry a `_d<n>` suffix.
pub fn feature_schema(cfg: &FeatureConfig) -> Vec<String> {
    let mut names = Vec::new();
    for &d in &cfg.distances {
        let suffix = if d == 1 { String::new() } else { format!("_d{d}") };
        for f in GLCM_FEATURES {
            match cfg.angle_mode {
                AngleMode::PerAngle => {
                    names.extend(ANGLES.iter().map(|a| format!("{f}@{a}{suffix}")));
                }
                AngleMode::Averaged => names.push(format!("{f}@avg{suffix}")),
            }
        }
    }
    names.extend(FIRST_ORDER_FEATURES.iter().map(|s| s.to_string()));
    names
}

/// The five GLCM features of one matrix, in schema order.
pub fn glcm_feature_set(g: &Glcm) -> Result<[f64; 5]> {
    let corr = if g.is_symmetric() {
        glcm_correlation(g)?.value
    } else {
        0.0
    };
    Ok([
        glcm_contrast(g),
        corr,
        glcm_energy(g),
        glcm_homogeneity(g),
        glcm_entropy(g),
    ])
}

pub fn extract_features(img: &GrayImage, cfg: &FeatureConfig, image_id: &str) -> Result<FeatureVector> {
    if cfg.distances.is_empty() {
        return Err(Error::InvalidParameter("no GLCM distances configured".into()));
    }
    let q = quantize(img, cfg.levels)?;
    let mut values = Vec::new();
    for &d in &cfg.distances {
        let mut per_angle = [[0.0f64; 5]; 4];
        for (slot, &angle) in per_angle.iter_mut().zip(ANGLES.iter()) {
            let (dx, dy) = angle_to_offset(angle, d as i64)?;
            *slot = glcm_feature_set(&compute_glcm(&q, dx, dy, cfg.symmetric)?)?;
        }
        for f in 0..GLCM_FEATURES.len() {
            match cfg.angle_mode {
                AngleMode::PerAngle => values.extend(per_angle.iter().map(|a| a[f])),
                AngleMode::Averaged => {
                    values.push(per_angle.iter().map(|a| a[f]).sum::<f64>() / 4.0)
                }
            }
        }
    }
    values.extend(first_order_stats(img).to_array());
    Ok(FeatureVector {
        image_id: image_id.to_string(),
        schema: feature_schema(cfg),
        values,
    })
}

/// Formats like C's `%.9g`.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `image_id,label,<schema...>` then one row per vector.
pub fn write_features_csv<W: Write>(mut out: W, rows: &[(&FeatureVector, &str)]) -> std::io::Result<()> {
    let Some((first, _)) = rows.first() else {
        return writeln!(out, "image_id,label");
    };
    writeln!(out, "image_id,label,{}", first.schema.join(","))?;
    for (fv, label) in rows {
        let vals: Vec<String> = fv.values.iter().map(|&v| format_sig9(v)).collect();
        writeln!(out, "{},{},{}", fv.image_id, label, vals.join(","))?;
    }
    Ok(())
}
