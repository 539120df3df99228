//! Versioned model file: one header line followed by a JSON body.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierKind, Standardizer, TrainedModel};
use crate::error::{Error, Result};
use crate::pca::PcaModel;
use crate::preprocess::PreprocessConfig;
use crate::texture::FeatureConfig;

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "railtex-model";

/// Everything needed to classify a raw image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    /// Fingerprint of the run config that produced the model.
    pub fingerprint: String,
    pub seed: u64,
    pub class_names: Vec<String>,
    pub schema: Vec<String>,
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
    pub standardizer: Standardizer,
    pub pca: PcaModel,
    pub models: Vec<TrainedModel>,
}

impl ModelFile {
    pub fn model(&self, kind: ClassifierKind) -> Option<&TrainedModel> {
        self.models.iter().find(|m| m.kind() == kind)
    }

    pub fn kinds(&self) -> Vec<ClassifierKind> {
        self.models.iter().map(TrainedModel::kind).collect()
    }

    /// Standardized and projected form of a raw feature vector.
    pub fn prepare(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.pca.transform(&self.standardizer.apply(features)?)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = format!("{MAGIC} {}\n", self.format_version).into_bytes();
        serde_json::to_writer(&mut out, self)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::ModelVersion {
            path: path.to_path_buf(),
            reason,
        };
        let split = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("missing header line".into()))?;
        let header = std::str::from_utf8(&bytes[..split]).map_err(|_| bad("header is not text".into()))?;
        let version = header
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| bad(format!("unrecognised header {header:?}")))?;
        if version != MODEL_FORMAT_VERSION.to_string() {
            return Err(bad(format!(
                "file has version {version}, this build reads version {MODEL_FORMAT_VERSION}"
            )));
        }
        let model: ModelFile =
            serde_json::from_slice(&bytes[split + 1..]).map_err(|e| bad(format!("unreadable body: {e}")))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(bad(format!("body declares version {}", model.format_version)));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::FileMissing {
                path: path.to_path_buf(),
            });
        }
        let bytes = fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes, path)
    }
}
