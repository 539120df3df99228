//! End-to-end flow: ingest, split, preprocess, extract, fit, evaluate, export.

pub mod config;
pub mod dataset;
pub mod model;
pub mod synth;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::RunConfig;
pub use dataset::{ingest_dataset, stratified_split, DatasetEntry, DatasetIndex, SplitIndices, IMAGE_EXTENSIONS};
pub use model::{ModelFile, MODEL_FORMAT_VERSION};
pub use synth::{generate_synthetic_dataset, render_rail, synth_image, SynthClass, SYNTH_CLASSES};

use crate::classifiers::{ClassifierKind, LabeledSet, Standardizer, TrainedModel};
use crate::error::{Error, Result, StageExt};
use crate::image_io::load_gray;
use crate::metrics::{confusion_matrix, render_comparison, render_report, Comparison, EvalReport};
use crate::pca::fit_pca;
use crate::preprocess::{preprocess_pipeline, PreprocessConfig};
use crate::texture::{extract_features, feature_schema, format_sig9, write_features_csv, FeatureConfig, FeatureVector};

fn features_for(entry: &DatasetEntry, pre: &PreprocessConfig, feat: &FeatureConfig) -> Result<FeatureVector> {
    let img = load_gray(&entry.path).stage("load")?;
    let img = preprocess_pipeline(&img, pre)
        .stage("preprocess")
        .map_err(|e| e.in_file(&entry.path))?;
    extract_features(&img, feat, &entry.id)
        .stage("features")
        .map_err(|e| e.in_file(&entry.path))
}

/// Feature vectors for `entries`, in input order whether or not `parallel` is set.
///
/// Every unreadable image is reported together; the first other failure aborts.
pub fn extract_entries(
    entries: &[&DatasetEntry],
    pre: &PreprocessConfig,
    feat: &FeatureConfig,
    parallel: bool,
) -> Result<Vec<FeatureVector>> {
    let results: Vec<Result<FeatureVector>> = if parallel {
        entries.par_iter().map(|e| features_for(e, pre, feat)).collect()
    } else {
        entries.iter().map(|e| features_for(e, pre, feat)).collect()
    };
    let mut unreadable = Vec::new();
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(v) => out.push(v),
            Err(Error::Stage { stage: "load", source }) => unreadable.push(source.to_string()),
            Err(e) => return Err(e),
        }
    }
    if !unreadable.is_empty() {
        return Err(Error::UnreadableImages(unreadable).at_stage("ingest"));
    }
    Ok(out)
}

/// Fits the standardizer, PCA and every selected classifier on training rows.
pub fn train_models(cfg: &RunConfig, class_names: &[String], rows: &[Vec<f64>], labels: &[usize]) -> Result<ModelFile> {
    let standardizer = Standardizer::fit(rows).stage("standardize")?;
    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| standardizer.apply(r))
        .collect::<Result<_>>()
        .stage("standardize")?;
    let d = z.first().map_or(0, Vec::len);
    let k = cfg.pca_k.min(d).min(z.len());
    if k < cfg.pca_k {
        log::warn!("pca_k = {} reduced to {k} (feature dimension {d}, {} training rows)", cfg.pca_k, z.len());
    }
    let pca = fit_pca(&z, k).stage("pca")?;
    let projected: Vec<Vec<f64>> = z.iter().map(|r| pca.transform(r)).collect::<Result<_>>().stage("pca")?;
    let train = LabeledSet::new(projected, labels.to_vec(), class_names.to_vec()).stage("train")?;
    let mut models = Vec::with_capacity(cfg.classifiers.len());
    for &kind in &cfg.classifiers {
        log::info!("training {kind} on {} rows", train.len());
        let m = TrainedModel::fit(kind, &train, &cfg.params, cfg.seed).map_err(|e| e.at_stage(kind.name()).at_stage("train"))?;
        models.push(m);
    }
    Ok(ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        fingerprint: cfg.fingerprint(),
        seed: cfg.seed,
        class_names: class_names.to_vec(),
        schema: feature_schema(&cfg.features),
        preprocess: cfg.preprocess.clone(),
        features: cfg.features.clone(),
        standardizer,
        pca,
        models,
    })
}

/// Index plus split of the configured dataset.
pub fn prepare_split(cfg: &RunConfig) -> Result<(DatasetIndex, SplitIndices)> {
    cfg.validate().stage("config")?;
    let idx = ingest_dataset(&cfg.dataset_root).stage("ingest")?;
    let split = stratified_split(&idx, cfg.split_ratio, cfg.seed).stage("split")?;
    log::info!(
        "{} images in {} classes: {} train, {} test",
        idx.len(),
        idx.class_names.len(),
        split.train.len(),
        split.test.len()
    );
    Ok((idx, split))
}

/// Trains on the training half of the split; test images are never opened.
pub fn run_train(cfg: &RunConfig) -> Result<ModelFile> {
    let (idx, split) = prepare_split(cfg)?;
    let entries: Vec<&DatasetEntry> = split.train.iter().map(|&i| &idx.entries[i]).collect();
    let feats = extract_entries(&entries, &cfg.preprocess, &cfg.features, cfg.parallel)?;
    let rows: Vec<Vec<f64>> = feats.into_iter().map(|f| f.values).collect();
    let labels: Vec<usize> = entries.iter().map(|e| e.class).collect();
    train_models(cfg, &idx.class_names, &rows, &labels)
}

/// Features for the whole dataset, written as CSV. Returns the row count.
pub fn run_extract(cfg: &RunConfig, out: impl AsRef<Path>) -> Result<usize> {
    cfg.validate().stage("config")?;
    let idx = ingest_dataset(&cfg.dataset_root).stage("ingest")?;
    let entries: Vec<&DatasetEntry> = idx.entries.iter().collect();
    let feats = extract_entries(&entries, &cfg.preprocess, &cfg.features, cfg.parallel)?;
    write_csv(out.as_ref(), &idx, &feats)?;
    Ok(feats.len())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path)).stage("export")
}

fn write_csv(path: &Path, idx: &DatasetIndex, feats: &[FeatureVector]) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path)).stage("export")?;
    let rows: Vec<(&FeatureVector, &str)> = feats
        .iter()
        .zip(&idx.entries)
        .map(|(f, e)| (f, idx.class_names[e.class].as_str()))
        .collect();
    let mut w = BufWriter::new(file);
    write_features_csv(&mut w, &rows)
        .and_then(|_| w.flush())
        .map_err(io_err(path))
        .stage("export")
}

/// `feature,class,mean,std` rows; std uses the n-1 divisor (0 for a single image).
pub fn feature_summary_csv(idx: &DatasetIndex, feats: &[FeatureVector]) -> String {
    let mut out = String::from("feature,class,mean,std\n");
    let Some(schema) = feats.first().map(|f| &f.schema) else {
        return out;
    };
    for (j, name) in schema.iter().enumerate() {
        for (c, class) in idx.class_names.iter().enumerate() {
            let vals: Vec<f64> = feats
                .iter()
                .zip(&idx.entries)
                .filter(|(_, e)| e.class == c)
                .map(|(f, _)| f.values[j])
                .collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let std = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            out.push_str(&format!("{name},{class},{},{}\n", format_sig9(mean), format_sig9(std)));
        }
    }
    out
}

fn hyperparameters(model: &TrainedModel, pca_k: usize) -> BTreeMap<String, String> {
    let mut hp = BTreeMap::new();
    hp.insert("pca_k".to_string(), pca_k.to_string());
    match model {
        TrainedModel::Knn(m) => {
            hp.insert("k".into(), m.k.to_string());
        }
        TrainedModel::Rf(m) => {
            hp.insert("n_trees".into(), m.params.n_trees.to_string());
            hp.insert("max_depth".into(), m.params.max_depth.to_string());
            hp.insert("min_leaf".into(), m.params.min_leaf.to_string());
            hp.insert("mtry".into(), m.mtry.to_string());
        }
        TrainedModel::Svm(m) => {
            hp.insert("lambda".into(), m.params.lambda.to_string());
            hp.insert("epochs".into(), m.params.epochs.to_string());
        }
    }
    hp
}

/// Result of [`run_eval`].
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub reports: Vec<EvalReport>,
    pub comparison_text: String,
    /// True when an existing model file with a matching fingerprint was used.
    pub model_reused: bool,
    pub artifacts: Vec<PathBuf>,
}

fn load_matching_model(cfg: &RunConfig, path: &Path, kinds: &[ClassifierKind]) -> Result<Option<ModelFile>> {
    if !path.exists() {
        return Ok(None);
    }
    let model = ModelFile::load(path).stage("model")?;
    if model.fingerprint != cfg.fingerprint() {
        log::warn!("{} was trained with different settings; retraining", path.display());
        return Ok(None);
    }
    if kinds.iter().any(|&k| model.model(k).is_none()) {
        log::warn!("{} lacks a requested classifier; retraining", path.display());
        return Ok(None);
    }
    Ok(Some(model))
}

/// Full run: features for every image, model fitted on the training split
/// (or reused from `model_path`), reports on the test split.
///
/// Writes `features.csv`, `feature_summary.csv`, `report_<kind>.{json,txt}`
/// and `comparison.{json,txt}` under the report directory.
pub fn run_eval(cfg: &RunConfig, model_path: impl AsRef<Path>, kinds: &[ClassifierKind]) -> Result<EvalOutcome> {
    let model_path = model_path.as_ref();
    let mut cfg = cfg.clone();
    let mut kinds = kinds.to_vec();
    kinds.sort_unstable();
    kinds.dedup();
    if kinds.is_empty() {
        kinds = cfg.classifiers.clone();
    }
    cfg.classifiers = kinds.clone();
    let (idx, split) = prepare_split(&cfg)?;
    let entries: Vec<&DatasetEntry> = idx.entries.iter().collect();
    let feats = extract_entries(&entries, &cfg.preprocess, &cfg.features, cfg.parallel)?;

    let (model, model_reused) = match load_matching_model(&cfg, model_path, &kinds)? {
        Some(m) => (m, true),
        None => {
            let rows: Vec<Vec<f64>> = split.train.iter().map(|&i| feats[i].values.clone()).collect();
            let labels: Vec<usize> = split.train.iter().map(|&i| idx.entries[i].class).collect();
            let m = train_models(&cfg, &idx.class_names, &rows, &labels)?;
            m.save(model_path).stage("model")?;
            (m, false)
        }
    };
    if model.class_names != idx.class_names {
        return Err(Error::InvalidParameter(format!(
            "model classes {:?} differ from dataset classes {:?}",
            model.class_names, idx.class_names
        ))
        .at_stage("model"));
    }

    let test_x: Vec<Vec<f64>> = split
        .test
        .iter()
        .map(|&i| model.prepare(&feats[i].values))
        .collect::<Result<_>>()
        .stage("evaluate")?;
    let y_true: Vec<usize> = split.test.iter().map(|&i| idx.entries[i].class).collect();
    let mut reports = Vec::new();
    for &kind in &kinds {
        let m = model.model(kind).expect("model holds every requested classifier");
        let y_pred: Vec<usize> = test_x.iter().map(|x| m.predict(x)).collect::<Result<_>>().stage("evaluate")?;
        let cm = confusion_matrix(&y_true, &y_pred, &idx.class_names).stage("evaluate")?;
        let report = EvalReport::new(kind.label(), cm, hyperparameters(m, model.pca.n_components()), cfg.seed)
            .stage("evaluate")?;
        reports.push(report);
    }

    let dir = &cfg.report_dir;
    fs::create_dir_all(dir).map_err(io_err(dir)).stage("export")?;
    let mut artifacts = Vec::new();
    let features_path = dir.join("features.csv");
    write_csv(&features_path, &idx, &feats)?;
    artifacts.push(features_path);
    let summary_path = dir.join("feature_summary.csv");
    write_file(&summary_path, feature_summary_csv(&idx, &feats).as_bytes())?;
    artifacts.push(summary_path);
    for (kind, report) in kinds.iter().zip(&reports) {
        let json = dir.join(format!("report_{}.json", kind.name()));
        write_file(&json, &pretty_json(report)?)?;
        let txt = dir.join(format!("report_{}.txt", kind.name()));
        write_file(&txt, render_report(report).as_bytes())?;
        artifacts.extend([json, txt]);
    }
    let comparison_text = render_comparison(&reports);
    let comparison = Comparison {
        reports: reports.clone(),
    };
    let json = dir.join("comparison.json");
    write_file(&json, &pretty_json(&comparison)?)?;
    let txt = dir.join("comparison.txt");
    write_file(&txt, comparison_text.as_bytes())?;
    artifacts.extend([json, txt]);

    Ok(EvalOutcome {
        reports,
        comparison_text,
        model_reused,
        artifacts,
    })
}

fn pretty_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Classification of a single image.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub classifier: ClassifierKind,
    pub class_index: usize,
    pub class_name: String,
    pub scores: Vec<f64>,
}

/// Runs the stored preprocessing, features, standardizer, PCA and classifier
/// on one image. Without `kind`, RF is used when present, else the first model.
pub fn predict_image(model: &ModelFile, path: impl AsRef<Path>, kind: Option<ClassifierKind>) -> Result<Prediction> {
    let path = path.as_ref();
    let m = match kind {
        Some(k) => model.model(k).ok_or_else(|| {
            Error::InvalidParameter(format!("model file holds no {k} classifier")).at_stage("predict")
        })?,
        None => model
            .model(ClassifierKind::Rf)
            .or_else(|| model.models.first())
            .ok_or_else(|| Error::InvalidParameter("model file holds no classifiers".into()).at_stage("predict"))?,
    };
    let entry = DatasetEntry {
        path: path.to_path_buf(),
        id: path.display().to_string(),
        class: 0,
    };
    let feats = features_for(&entry, &model.preprocess, &model.features)?;
    let x = model.prepare(&feats.values).stage("predict")?;
    let class_index = m.predict(&x).stage("predict")?;
    Ok(Prediction {
        classifier: m.kind(),
        class_index,
        class_name: model.class_names[class_index].clone(),
        scores: m.scores(&x).stage("predict")?,
    })
}
