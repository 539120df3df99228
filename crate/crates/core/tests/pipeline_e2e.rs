use std::fs;
use std::path::Path;

use railtex_core::pipeline::*;
use railtex_core::preprocess::{FilterConfig, MaskMode, Rect};
use railtex_core::texture::{extract_features, FeatureConfig};
use railtex_core::{load_gray, ClassifierKind, Error};

fn small_config(root: &Path, reports: &Path) -> RunConfig {
    let mut cfg = RunConfig {
        dataset_root: root.to_path_buf(),
        report_dir: reports.to_path_buf(),
        ..RunConfig::default()
    };
    cfg.preprocess.width = 48;
    cfg.preprocess.height = 48;
    cfg.preprocess.filters = FilterConfig {
        ahe_tiles: (4, 4),
        ..FilterConfig::default()
    };
    cfg.params.forest.n_trees = 20;
    cfg.params.svm.epochs = 30;
    cfg.pca_k = 8;
    cfg
}

fn synth(dir: &Path, per_class: usize, seed: u64) {
    generate_synthetic_dataset(dir, per_class, seed, 64, 64).unwrap();
}

#[test]
fn synth_trees_are_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let pa = generate_synthetic_dataset(a.path(), 5, 1, 128, 128).unwrap();
    let pb = generate_synthetic_dataset(b.path(), 5, 1, 128, 128).unwrap();
    assert_eq!(pa.len(), 15);
    for (x, y) in pa.iter().zip(&pb) {
        assert_eq!(x.strip_prefix(a.path()).unwrap(), y.strip_prefix(b.path()).unwrap());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        let img = load_gray(x).unwrap();
        assert_eq!((img.width(), img.height()), (128, 128));
    }
    assert!(generate_synthetic_dataset(a.path(), 1, 1, 128, 128).is_err());
}

#[test]
fn defective_images_have_more_contrast() {
    let cfg = FeatureConfig::default();
    let mean_contrast = |class: SynthClass| {
        let mut s = 0.0;
        for i in 0..50 {
            let img = synth_image(class, i, 42, 128, 128).unwrap();
            let f = extract_features(&img, &cfg, "x").unwrap();
            s += f.values[0..4].iter().sum::<f64>() / 4.0;
        }
        s / 50.0
    };
    let (d, h) = (mean_contrast(SynthClass::Defective), mean_contrast(SynthClass::Healthy));
    assert!(d > h, "defective {d} vs healthy {h}");
}

#[test]
fn ingest_orders_classes_and_files() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 2, 3);
    fs::write(dir.path().join("healthy").join("readme.txt"), "skip me").unwrap();
    let idx = ingest_dataset(dir.path()).unwrap();
    assert_eq!(idx.class_names, ["defective", "healthy", "junction"]);
    assert_eq!(idx.len(), 6);
    assert_eq!(idx.entries[0].id, "defective/defective_0000.pgm");
    assert_eq!(idx.entries[5].class, 2);
    assert_eq!(ingest_dataset(dir.path()).unwrap(), idx);

    fs::create_dir(dir.path().join("zzz")).unwrap();
    assert!(matches!(ingest_dataset(dir.path()), Err(Error::EmptyClass(p)) if p.ends_with("zzz")));
    assert!(matches!(ingest_dataset(dir.path().join("nope")), Err(Error::MissingRoot(_))));
}

#[test]
fn unreadable_images_are_listed_together() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 3, 4);
    fs::write(dir.path().join("healthy").join("healthy_0001.pgm"), b"P5\n4 4\n255\nxx").unwrap();
    fs::write(dir.path().join("junction").join("junction_0002.pgm"), b"garbage").unwrap();
    let reports = dir.path().join("reports");
    let cfg = small_config(dir.path(), &reports);
    let err = run_extract(&cfg, dir.path().join("f.csv")).unwrap_err();
    match err.root() {
        Error::UnreadableImages(list) => {
            assert_eq!(list.len(), 2);
            assert!(list[0].contains("healthy_0001.pgm"));
            assert!(list[1].contains("junction_0002.pgm"));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn eval_writes_all_artifacts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    synth(&data, 12, 5);
    let reports = dir.path().join("reports");
    let cfg = small_config(&data, &reports);
    let model = dir.path().join("model.rtx");
    let first = run_eval(&cfg, &model, &ClassifierKind::ALL).unwrap();
    assert!(!first.model_reused);
    assert_eq!(first.reports.len(), 3);
    let snapshot: Vec<(String, Vec<u8>)> = first
        .artifacts
        .iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(p).unwrap()))
        .collect();
    let names: Vec<&str> = snapshot.iter().map(|(n, _)| n.as_str()).collect();
    for want in ["features.csv", "feature_summary.csv", "report_rf.json", "report_svm.txt", "comparison.json", "comparison.txt"] {
        assert!(names.contains(&want), "{want} missing from {names:?}");
    }

    let csv = String::from_utf8(snapshot[0].1.clone()).unwrap();
    assert_eq!(csv.lines().count(), 1 + 36);
    let width = csv.lines().next().unwrap().split(',').count();
    assert!(csv.lines().all(|l| l.split(',').count() == width));

    // Reuse the saved model, then retrain from scratch: same bytes either way.
    let second = run_eval(&cfg, &model, &ClassifierKind::ALL).unwrap();
    assert!(second.model_reused);
    let model_bytes = fs::read(&model).unwrap();
    fs::remove_file(&model).unwrap();
    let third = run_eval(&cfg, &model, &ClassifierKind::ALL).unwrap();
    assert!(!third.model_reused);
    assert_eq!(fs::read(&model).unwrap(), model_bytes);
    for (name, bytes) in &snapshot {
        assert_eq!(&fs::read(reports.join(name)).unwrap(), bytes, "{name} changed");
    }
}

#[test]
fn parallel_and_sequential_agree() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 6, 6);
    let mut cfg = small_config(dir.path(), &dir.path().join("r"));
    let idx = ingest_dataset(dir.path()).unwrap();
    let entries: Vec<&DatasetEntry> = idx.entries.iter().collect();
    let par = extract_entries(&entries, &cfg.preprocess, &cfg.features, true).unwrap();
    let seq = extract_entries(&entries, &cfg.preprocess, &cfg.features, false).unwrap();
    assert_eq!(par, seq);
    let a = run_train(&cfg).unwrap();
    cfg.parallel = false;
    let b = run_train(&cfg).unwrap();
    assert_eq!(a.to_bytes().unwrap(), b.to_bytes().unwrap());
}

#[test]
fn training_never_reads_test_images() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 8, 7);
    let cfg = small_config(dir.path(), &dir.path().join("r"));
    let before = run_train(&cfg).unwrap().to_bytes().unwrap();
    let (idx, split) = prepare_split(&cfg).unwrap();
    for &i in &split.test {
        fs::write(&idx.entries[i].path, b"not an image").unwrap();
    }
    let after = run_train(&cfg).unwrap().to_bytes().unwrap();
    assert_eq!(before, after);
}

#[test]
fn model_file_round_trip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 5, 8);
    let cfg = small_config(dir.path(), &dir.path().join("r"));
    let model = run_train(&cfg).unwrap();
    let path = dir.path().join("m.rtx");
    model.save(&path).unwrap();
    let back = ModelFile::load(&path).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.to_bytes().unwrap(), model.to_bytes().unwrap());

    let mut bytes = fs::read(&path).unwrap();
    bytes.truncate(bytes.len() / 2);
    fs::write(&path, &bytes).unwrap();
    let err = ModelFile::load(&path).unwrap_err();
    assert!(err.to_string().contains("model-version-mismatch"), "{err}");
    fs::write(&path, b"railtex-model 99\n{}").unwrap();
    assert!(matches!(ModelFile::load(&path), Err(Error::ModelVersion { .. })));
}

#[test]
fn single_class_model_predicts_that_class() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    synth(&data, 10, 9);
    fs::remove_dir_all(data.join("defective")).unwrap();
    fs::remove_dir_all(data.join("junction")).unwrap();
    let cfg = small_config(&data, &dir.path().join("r"));
    let model = run_train(&cfg).unwrap();
    let image = data.join("healthy").join("healthy_0000.pgm");
    for kind in ClassifierKind::ALL {
        let p = predict_image(&model, &image, Some(kind)).unwrap();
        assert_eq!(p.class_name, "healthy");
    }
}

#[test]
fn predict_reports_preprocess_stage_for_small_images() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 4, 10);
    let mut cfg = small_config(dir.path(), &dir.path().join("r"));
    cfg.preprocess.mask_mode = MaskMode::FixedRect(Rect { x: 0, y: 0, w: 60, h: 60 });
    let model = run_train(&cfg).unwrap();
    let small = dir.path().join("small.pgm");
    railtex_core::image_io::save_pgm(&railtex_core::GrayImage::filled(20, 20, 9).unwrap(), &small).unwrap();
    let err = predict_image(&model, &small, None).unwrap_err();
    assert!(err.to_string().contains("preprocess"), "{err}");
    assert!(matches!(err.root(), Error::RectOutOfBounds { .. }));
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(
        &path,
        "# test\ndataset_root = data\nclassifier = svm, knn\nangle_mode = averaged\npca_k = 50\nahe_clip = none\n",
    )
    .unwrap();
    let cfg = RunConfig::load(&path).unwrap();
    assert_eq!(cfg.dataset_root, dir.path().join("data"));
    assert_eq!(cfg.classifiers, [ClassifierKind::Knn, ClassifierKind::Svm]);
    assert_eq!(cfg.pca_k, 50);
    assert_eq!(cfg.preprocess.filters.ahe_clip, None);
    fs::write(&path, "dataset_rot = data\n").unwrap();
    let err = RunConfig::load(&path).unwrap_err();
    assert!(matches!(err, Error::Config { line: 1, .. }), "{err}");
}
