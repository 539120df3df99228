//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Unknown keys are errors.
//! Relative paths resolve against the config file's directory.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `dataset_root` | `data` | one subdirectory per class |
//! | `report_dir` | `reports` | output directory for CSV/JSON/text artifacts |
//! | `work_width`, `work_height` | `128` | working dimensions after cropping |
//! | `mask_mode` | `otsu` | `otsu` or `fixed` |
//! | `mask_rect` | whole image | `x,y,w,h`; the fixed mask, or the Otsu fallback |
//! | `median_window` | `3` | odd |
//! | `gaussian_sigma` | `1.0` | |
//! | `gaussian_ksize` | `5` | odd |
//! | `sharpen_alpha` | `0.5` | `0` disables sharpening |
//! | `ahe_tiles` | `8x8` | columns x rows |
//! | `ahe_clip` | `2.0` | `none` disables clipping |
//! | `glcm_levels` | `32` | 2..=256 |
//! | `glcm_distances` | `1` | comma list |
//! | `angle_mode` | `per-angle` | `per-angle` or `averaged` |
//! | `glcm_symmetric` | `true` | |
//! | `pca_k` | `20` | clamped to the available dimension |
//! | `classifier` | `all` | `knn`, `rf`, `svm`, `all`, or a comma list |
//! | `knn_k` | `5` | |
//! | `rf_trees`, `rf_max_depth`, `rf_min_leaf` | `100`, `12`, `2` | |
//! | `rf_mtry` | `auto` | `auto` = round(sqrt(d)) |
//! | `svm_lambda`, `svm_epochs` | `1e-3`, `200` | |
//! | `split_ratio` | `0.7` | train fraction, in (0, 1) |
//! | `seed` | `42` | run seed |
//! | `parallel` | `true` | per-image work on a thread pool |

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::classifiers::{ClassifierKind, ClassifierParams};
use crate::error::{Error, Result};
use crate::preprocess::{MaskMode, PreprocessConfig, Rect};
use crate::texture::{AngleMode, FeatureConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset_root: PathBuf,
    pub report_dir: PathBuf,
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
    pub pca_k: usize,
    pub classifiers: Vec<ClassifierKind>,
    pub params: ClassifierParams,
    pub split_ratio: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset_root: PathBuf::from("data"),
            report_dir: PathBuf::from("reports"),
            preprocess: PreprocessConfig::default(),
            features: FeatureConfig::default(),
            pca_k: 20,
            classifiers: ClassifierKind::ALL.to_vec(),
            params: ClassifierParams::default(),
            split_ratio: 0.7,
            seed: 42,
            parallel: true,
        }
    }
}

/// Settings that determine the fitted model; paths, classifier selection and
/// threading are excluded.
#[derive(Serialize)]
struct Fingerprint<'a> {
    preprocess: &'a PreprocessConfig,
    features: &'a FeatureConfig,
    pca_k: usize,
    params: &'a ClassifierParams,
    split_ratio: f64,
    seed: u64,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn parse(text: &str, source: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut mask_mode = "otsu".to_string();
        let mut mask_rect: Option<Rect> = None;

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config {
                path: source.to_string(),
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            let p = Parser { key, value, err: &err };
            let f = &mut cfg.preprocess.filters;
            match key {
                "dataset_root" => cfg.dataset_root = base_dir.join(value),
                "report_dir" => cfg.report_dir = base_dir.join(value),
                "work_width" => cfg.preprocess.width = p.num()?,
                "work_height" => cfg.preprocess.height = p.num()?,
                "mask_mode" => mask_mode = value.to_ascii_lowercase(),
                "mask_rect" => mask_rect = Some(p.rect()?),
                "median_window" => f.median_window = p.num()?,
                "gaussian_sigma" => f.gaussian_sigma = p.num()?,
                "gaussian_ksize" => f.gaussian_ksize = p.num()?,
                "sharpen_alpha" => f.sharpen_alpha = p.num()?,
                "ahe_tiles" => f.ahe_tiles = p.grid()?,
                "ahe_clip" => {
                    f.ahe_clip = match value.to_ascii_lowercase().as_str() {
                        "none" | "off" => None,
                        _ => Some(p.num()?),
                    }
                }
                "glcm_levels" => cfg.features.levels = p.num()?,
                "glcm_distances" => cfg.features.distances = p.list()?,
                "angle_mode" => {
                    cfg.features.angle_mode = match value {
                        "per-angle" => AngleMode::PerAngle,
                        "averaged" => AngleMode::Averaged,
                        _ => return Err(err(format!("angle_mode must be per-angle or averaged, got '{value}'"))),
                    }
                }
                "glcm_symmetric" => cfg.features.symmetric = p.num()?,
                "pca_k" => cfg.pca_k = p.num()?,
                "classifier" => cfg.classifiers = p.classifiers()?,
                "knn_k" => cfg.params.knn_k = p.num()?,
                "rf_trees" => cfg.params.forest.n_trees = p.num()?,
                "rf_max_depth" => cfg.params.forest.max_depth = p.num()?,
                "rf_min_leaf" => cfg.params.forest.min_leaf = p.num()?,
                "rf_mtry" => {
                    cfg.params.forest.mtry = if value == "auto" { None } else { Some(p.num()?) }
                }
                "svm_lambda" => cfg.params.svm.lambda = p.num()?,
                "svm_epochs" => cfg.params.svm.epochs = p.num()?,
                "split_ratio" => cfg.split_ratio = p.num()?,
                "seed" => cfg.seed = p.num()?,
                "parallel" => cfg.parallel = p.num()?,
                _ => return Err(err(format!("unknown key '{key}'"))),
            }
        }

        cfg.preprocess.mask_mode = match mask_mode.as_str() {
            "otsu" => MaskMode::Otsu,
            "fixed" => MaskMode::FixedRect(mask_rect.ok_or_else(|| Error::Config {
                path: source.to_string(),
                line: 0,
                message: "mask_mode = fixed requires mask_rect".into(),
            })?),
            other => {
                return Err(Error::Config {
                    path: source.to_string(),
                    line: 0,
                    message: format!("mask_mode must be otsu or fixed, got '{other}'"),
                })
            }
        };
        cfg.preprocess.fallback_rect = mask_rect;
        cfg.validate().map_err(|e| Error::Config {
            path: source.to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.preprocess.filters.validate()?;
        if self.preprocess.width == 0 || self.preprocess.height == 0 {
            return Err(Error::ZeroDimension {
                width: self.preprocess.width,
                height: self.preprocess.height,
            });
        }
        if !(2..=256).contains(&self.features.levels) {
            return Err(Error::InvalidLevelCount(self.features.levels));
        }
        if self.features.distances.is_empty() || self.features.distances.contains(&0) {
            return Err(Error::InvalidParameter("glcm_distances must be positive".into()));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "split_ratio must lie in (0, 1), got {}",
                self.split_ratio
            )));
        }
        if self.pca_k == 0 {
            return Err(Error::InvalidParameter("pca_k must be >= 1".into()));
        }
        if self.classifiers.is_empty() {
            return Err(Error::InvalidParameter("no classifier selected".into()));
        }
        Ok(())
    }

    /// Canonical string of everything that shapes a trained model.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(&Fingerprint {
            preprocess: &self.preprocess,
            features: &self.features,
            pca_k: self.pca_k,
            params: &self.params,
            split_ratio: self.split_ratio,
            seed: self.seed,
        })
        .expect("config serializes")
    }
}

struct Parser<'a, F: Fn(String) -> Error> {
    key: &'a str,
    value: &'a str,
    err: &'a F,
}

impl<F: Fn(String) -> Error> Parser<'_, F> {
    fn num<T: FromStr>(&self) -> Result<T> {
        self.value
            .parse()
            .map_err(|_| (self.err)(format!("invalid value '{}' for {}", self.value, self.key)))
    }

    fn list<T: FromStr>(&self) -> Result<Vec<T>> {
        self.value
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| (self.err)(format!("invalid list item '{s}' for {}", self.key)))
            })
            .collect()
    }

    fn rect(&self) -> Result<Rect> {
        let v: Vec<usize> = self.list()?;
        match v[..] {
            [x, y, w, h] => Ok(Rect { x, y, w, h }),
            _ => Err((self.err)(format!("{} needs x,y,w,h", self.key))),
        }
    }

    fn grid(&self) -> Result<(usize, usize)> {
        let (a, b) = self
            .value
            .split_once(['x', 'X'])
            .ok_or_else(|| (self.err)(format!("{} needs COLSxROWS", self.key)))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| (self.err)(format!("invalid grid '{}'", self.value)))
        };
        Ok((parse(a)?, parse(b)?))
    }

    fn classifiers(&self) -> Result<Vec<ClassifierKind>> {
        if self.value.eq_ignore_ascii_case("all") {
            return Ok(ClassifierKind::ALL.to_vec());
        }
        let mut kinds = self
            .value
            .split(',')
            .map(|s| s.trim().parse::<ClassifierKind>().map_err(|e| (self.err)(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        kinds.sort();
        kinds.dedup();
        Ok(kinds)
    }
}
