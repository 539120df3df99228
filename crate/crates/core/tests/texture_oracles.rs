mod oracles;

use proptest::prelude::*;
use rand::Rng;

use railtex_core::texture::*;
use railtex_core::GrayImage;

fn random_quantized(r: &mut rand_chacha::ChaCha8Rng) -> QuantizedImage {
    let w = r.random_range(2..=32);
    let h = r.random_range(2..=32);
    let g = r.random_range(2..=16);
    let data = (0..w * h).map(|_| r.random_range(0..g) as u8).collect();
    QuantizedImage::new(w, h, g, data).unwrap()
}

#[test]
fn glcm_matches_pair_enumeration() {
    let mut r = oracles::rng(1);
    for _ in 0..200 {
        let q = random_quantized(&mut r);
        for angle in ANGLES {
            let (dx, dy) = angle_to_offset(angle, 1).unwrap();
            for symmetric in [false, true] {
                let g = compute_glcm(&q, dx, dy, symmetric).unwrap();
                let expected = oracles::glcm_counts(q.data(), q.width(), q.height(), q.levels(), dx, dy, symmetric);
                assert_eq!(g.counts(), expected.as_slice());
            }
        }
    }
}

#[test]
fn longer_distances_match_oracle() {
    let mut r = oracles::rng(2);
    for _ in 0..40 {
        let q = random_quantized(&mut r);
        for d in 2..4 {
            for angle in ANGLES {
                let (dx, dy) = angle_to_offset(angle, d).unwrap();
                if dx.unsigned_abs() as usize >= q.width() || dy.unsigned_abs() as usize >= q.height() {
                    assert!(compute_glcm(&q, dx, dy, true).is_err());
                    continue;
                }
                let g = compute_glcm(&q, dx, dy, true).unwrap();
                let expected = oracles::glcm_counts(q.data(), q.width(), q.height(), q.levels(), dx, dy, true);
                assert_eq!(g.counts(), expected.as_slice());
            }
        }
    }
}

fn random_symmetric_glcm(r: &mut rand_chacha::ChaCha8Rng) -> Glcm {
    let g = r.random_range(2..=16);
    let mut counts = vec![0u64; g * g];
    for i in 0..g {
        for j in i..g {
            let c = if r.random_bool(0.3) { 0 } else { r.random_range(0..50) };
            counts[i * g + j] = c;
            counts[j * g + i] = c;
        }
    }
    counts[0] += 1;
    Glcm::from_counts(g, counts, (1, 0)).unwrap()
}

fn random_prob_glcm(r: &mut rand_chacha::ChaCha8Rng) -> Glcm {
    let g = r.random_range(2..=16);
    let raw: Vec<f64> = (0..g * g).map(|_| if r.random_bool(0.2) { 0.0 } else { r.random::<f64>() }).collect();
    let total: f64 = raw.iter().sum::<f64>() + 1e-3;
    let mut probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
    probs[0] += 1e-3 / total;
    Glcm::from_probs(g, probs).unwrap()
}

#[test]
fn feature_formulas_match_double_loops() {
    let mut r = oracles::rng(3);
    for k in 0..500 {
        let g = if k % 2 == 0 {
            random_symmetric_glcm(&mut r)
        } else {
            random_prob_glcm(&mut r)
        };
        let p = oracles::matrix(&g);
        assert!((glcm_contrast(&g) - oracles::contrast(&p)).abs() <= 1e-12);
        assert!((glcm_energy(&g) - oracles::energy(&p)).abs() <= 1e-12);
        assert!((glcm_homogeneity(&g) - oracles::homogeneity(&p)).abs() <= 1e-12);
        assert!((glcm_entropy(&g) - oracles::entropy(&p)).abs() <= 1e-12);
        if g.is_symmetric() {
            let c = glcm_correlation(&g).unwrap();
            match oracles::correlation(&p) {
                Some(v) => assert!((c.value - v).abs() <= 1e-12, "{} vs {v}", c.value),
                None => assert!(c.degenerate && c.value == 0.0),
            }
        }
    }
}

#[test]
fn worked_example_contrast() {
    let q = QuantizedImage::new(4, 4, 4, vec![0, 0, 1, 1, 0, 0, 1, 1, 0, 2, 2, 2, 2, 2, 3, 3]).unwrap();
    let g = compute_glcm(&q, 1, 0, false).unwrap();
    assert!((glcm_contrast(&g) - 7.0 / 12.0).abs() <= 1e-12);
}

#[test]
fn feature_ranges() {
    let mut r = oracles::rng(4);
    for _ in 0..300 {
        let g = random_symmetric_glcm(&mut r);
        let levels = g.levels() as f64;
        assert!(glcm_contrast(&g) >= 0.0);
        let e = glcm_energy(&g);
        assert!(e > 0.0 && e <= 1.0 + 1e-15);
        let h = glcm_homogeneity(&g);
        assert!(h > 0.0 && h <= 1.0 + 1e-15);
        let s = glcm_entropy(&g);
        assert!(s >= 0.0 && s <= 2.0 * levels.ln() + 1e-12);
        let c = glcm_correlation(&g).unwrap();
        assert!((-1.0..=1.0).contains(&c.value));
    }
}

fn rotate90(img: &GrayImage) -> GrayImage {
    // Counter-clockwise: (x, y) -> (y, w - 1 - x).
    let (w, h) = (img.width(), img.height());
    GrayImage::from_fn(h, w, |nx, ny| img.get(w - 1 - ny, nx)).unwrap()
}

#[test]
fn rotation_permutes_angles() {
    let mut r = oracles::rng(5);
    let cfg = FeatureConfig::default();
    let schema = feature_schema(&cfg);
    let pos = |name: &str| schema.iter().position(|s| s == name).unwrap();
    for _ in 0..30 {
        let w = r.random_range(4..=24);
        let h = r.random_range(4..=24);
        let img = GrayImage::from_fn(w, h, |_, _| r.random()).unwrap();
        let a = extract_features(&img, &cfg, "a").unwrap();
        let b = extract_features(&rotate90(&img), &cfg, "b").unwrap();
        for f in GLCM_FEATURES {
            for (from, to) in [(0, 90), (90, 0), (45, 135), (135, 45)] {
                let va = a.values[pos(&format!("{f}@{from}"))];
                let vb = b.values[pos(&format!("{f}@{to}"))];
                assert!((va - vb).abs() <= 1e-12, "{f}@{from}: {va} vs {vb}");
            }
        }
    }
}

#[test]
fn extraction_is_deterministic() {
    let mut r = oracles::rng(6);
    let img = GrayImage::from_fn(40, 30, |_, _| r.random()).unwrap();
    for cfg in [
        FeatureConfig::default(),
        FeatureConfig {
            angle_mode: AngleMode::Averaged,
            distances: vec![1, 2],
            ..FeatureConfig::default()
        },
    ] {
        let a = extract_features(&img, &cfg, "x").unwrap();
        let b = extract_features(&img, &cfg, "x").unwrap();
        assert_eq!(a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(a.schema.len(), a.values.len());
    }
}

#[test]
fn first_order_matches_pixel_loop() {
    let mut r = oracles::rng(7);
    for _ in 0..100 {
        let img = oracles::random_image(&mut r, 20);
        let n = img.len() as f64;
        let px: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
        let mean = px.iter().sum::<f64>() / n;
        let var = px.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let m3 = px.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
        let s = first_order_stats(&img);
        let tol = 1e-9 * (1.0 + var);
        assert!((s.mean - mean).abs() <= 1e-9);
        assert!((s.std - var.sqrt()).abs() <= 1e-9);
        assert!((s.smoothness - (1.0 - 1.0 / (1.0 + var))).abs() <= 1e-12);
        if var > 0.0 {
            assert!((s.skewness - m3 / var.powf(1.5)).abs() <= tol);
        }
        let mut uni = 0.0;
        let mut ent = 0.0;
        for level in 0..=255u8 {
            let p = img.data().iter().filter(|&&v| v == level).count() as f64 / n;
            uni += p * p;
            if p > 0.0 {
                ent -= p * p.ln();
            }
        }
        assert!((s.uniformity - uni).abs() <= 1e-12);
        assert!((s.entropy - ent).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn symmetric_counts_are_transpose_invariant(
        w in 2usize..20, h in 2usize..20, g in 2usize..9, angle in 0usize..4, seed in any::<u64>()
    ) {
        let mut r = oracles::rng(seed);
        let data = (0..w * h).map(|_| r.random_range(0..g) as u8).collect();
        let q = QuantizedImage::new(w, h, g, data).unwrap();
        let (dx, dy) = angle_to_offset(ANGLES[angle], 1).unwrap();
        let m = compute_glcm(&q, dx, dy, true).unwrap();
        for i in 0..g {
            for j in 0..g {
                prop_assert_eq!(m.count(i, j), m.count(j, i));
            }
        }
        let total: u64 = m.counts().iter().sum();
        let pairs = (w as i64 - dx.abs()) * (h as i64 - dy.abs());
        prop_assert_eq!(total, 2 * pairs as u64);
    }

    #[test]
    fn quantize_stays_in_range(data in proptest::collection::vec(any::<u8>(), 1..200), levels in 2usize..=256) {
        let img = GrayImage::new(data.len(), 1, data.clone()).unwrap();
        let q = quantize(&img, levels).unwrap();
        for (&v, &orig) in q.data().iter().zip(&data) {
            prop_assert!((v as usize) < levels);
            prop_assert_eq!(v as usize, orig as usize * levels / 256);
        }
    }

    #[test]
    fn sig9_round_trips_to_nine_digits(v in -1e12f64..1e12) {
        let s = format_sig9(v);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - v).abs() <= 1e-8 * v.abs().max(1e-300) + f64::MIN_POSITIVE);
    }
}
