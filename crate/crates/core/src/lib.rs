//! Rail surface classification from gray-level texture features.
//!
//! Images are masked, filtered and equalized ([`preprocess`]), described by
//! co-occurrence and first-order statistics ([`texture`]), reduced with PCA
//! ([`pca`]) and classified by KNN, a random forest or a linear SVM
//! ([`classifiers`]). [`metrics`] scores the predictions and [`pipeline`]
//! runs the whole flow from a dataset directory.

pub mod classifiers;
pub mod error;
pub mod image_io;
pub mod metrics;
pub mod pca;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod texture;

pub use classifiers::{ClassifierKind, ClassifierParams, LabeledSet, Standardizer, TrainedModel};
pub use error::{Error, Result};
pub use image_io::{load_gray, load_image, GrayImage, RgbImage};
pub use metrics::{Comparison, ConfusionMatrix, EvalReport, MetricSuite};
pub use pca::PcaModel;
pub use pipeline::{DatasetIndex, ModelFile, RunConfig};
pub use preprocess::{FilterConfig, MaskMode, PreprocessConfig, Rect};
pub use texture::{AngleMode, FeatureConfig, FeatureVector, Glcm};
