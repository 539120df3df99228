//! Seeded synthetic rail images in three classes.
//!
//! Each image is a bright rail head (a smooth vertical gradient with
//! Gaussian noise, sigma 4) running top to bottom between dark ballast
//! margins, so the Otsu mask isolates the rail as it would on camera frames.
//!
//! * `healthy`: the plain rail.
//! * `junction`: a dark horizontal gap of 6-10 rows across the rail.
//! * `defective`: 3-8 high-contrast speckle blobs and a random crack polyline.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image_io::{round_to_u8, save_pgm, GrayImage};
use crate::rng::{stream, stream_rng};

/// Class directories in sorted order.
pub const SYNTH_CLASSES: [&str; 3] = ["defective", "healthy", "junction"];

const NOISE_SIGMA: f64 = 4.0;
const BALLAST_LEVEL: f64 = 22.0;
const GAP_LEVEL: f64 = 55.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthClass {
    Defective,
    Healthy,
    Junction,
}

impl SynthClass {
    pub const ALL: [SynthClass; 3] = [SynthClass::Defective, SynthClass::Healthy, SynthClass::Junction];

    pub fn name(self) -> &'static str {
        SYNTH_CLASSES[self as usize]
    }
}

struct Canvas {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

impl Canvas {
    fn set(&mut self, x: f64, y: f64, value: f64) {
        let (xi, yi) = (x.round(), y.round());
        if xi >= 0.0 && yi >= 0.0 && (xi as usize) < self.w && (yi as usize) < self.h {
            self.v[yi as usize * self.w + xi as usize] = value;
        }
    }
}

/// Renders one image; all randomness comes from `rng`.
pub fn render_rail(class: SynthClass, width: usize, height: usize, rng: &mut ChaCha8Rng) -> Result<GrayImage> {
    if width < 16 || height < 16 {
        return Err(Error::InvalidParameter(format!(
            "synthetic images need at least 16x16 pixels, got {width}x{height}"
        )));
    }
    let noise = Normal::new(0.0, NOISE_SIGMA).expect("valid sigma");
    let (wf, hf) = (width as f64, height as f64);
    let jitter = (wf * 0.03).max(1.0) as i64;
    let x0 = ((wf * 0.2) as i64 + rng.random_range(-jitter..=jitter)).max(1) as usize;
    let x1 = ((wf * 0.8) as i64 + rng.random_range(-jitter..=jitter)).min(width as i64 - 1) as usize;
    let base = 150.0 + rng.random_range(-8.0..8.0);
    let slope = 35.0 + rng.random_range(-5.0..5.0);

    let mut c = Canvas {
        w: width,
        h: height,
        v: vec![BALLAST_LEVEL; width * height],
    };
    for y in 0..height {
        let level = base + slope * y as f64 / hf;
        for x in x0..x1 {
            c.v[y * width + x] = level;
        }
    }

    match class {
        SynthClass::Healthy => {}
        SynthClass::Junction => {
            let gap = rng.random_range(6..=10usize);
            let top = rng.random_range(height / 5..(4 * height / 5).saturating_sub(gap).max(height / 5 + 1));
            for y in top..(top + gap).min(height) {
                for x in x0..x1 {
                    c.v[y * width + x] = GAP_LEVEL;
                }
            }
        }
        SynthClass::Defective => {
            let blobs = rng.random_range(3..=8usize);
            for _ in 0..blobs {
                let cx = rng.random_range(x0 as f64..x1 as f64);
                let cy = rng.random_range(0.0..hf);
                let r: f64 = rng.random_range(2.0..5.0);
                let value = if rng.random_bool(0.5) { 30.0 } else { 245.0 };
                let ri = r.ceil() as i64;
                for dy in -ri..=ri {
                    for dx in -ri..=ri {
                        let (fx, fy) = (dx as f64, dy as f64);
                        if fx * fx + fy * fy <= r * r {
                            c.set(cx + fx, cy + fy, value);
                        }
                    }
                }
            }
            let mut px = rng.random_range(x0 as f64 + 2.0..x1 as f64 - 2.0);
            let mut py = rng.random_range(0.0..hf);
            let mut heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            for _ in 0..rng.random_range(4..=7) {
                heading += rng.random_range(-0.8..0.8);
                let len = rng.random_range(6.0..16.0);
                let steps = (len * 2.0) as usize;
                for s in 0..steps {
                    let t = s as f64 * 0.5;
                    let (x, y) = (px + t * heading.cos(), py + t * heading.sin());
                    if (x as usize) >= x0 && (x as usize) < x1 {
                        c.set(x, y, 35.0);
                    }
                }
                px = (px + len * heading.cos()).clamp(x0 as f64, x1 as f64 - 1.0);
                py = (py + len * heading.sin()).clamp(0.0, hf - 1.0);
            }
        }
    }

    let data = c.v.iter().map(|&v| round_to_u8(v + noise.sample(rng))).collect();
    GrayImage::new(width, height, data)
}

/// Image `index` of `class` for a given run seed.
pub fn synth_image(class: SynthClass, index: usize, seed: u64, width: usize, height: usize) -> Result<GrayImage> {
    let counter = (class as u64) << 32 | index as u64;
    render_rail(class, width, height, &mut stream_rng(seed, stream::SYNTH_IMAGE, counter))
}

/// Writes `out/<class>/<class>_NNNN.pgm` for every class; returns the paths.
pub fn generate_synthetic_dataset(
    out: impl AsRef<Path>,
    per_class: usize,
    seed: u64,
    width: usize,
    height: usize,
) -> Result<Vec<PathBuf>> {
    if per_class < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 images per class, got {per_class}"
        )));
    }
    let out = out.as_ref();
    let mut written = Vec::with_capacity(per_class * 3);
    for class in SynthClass::ALL {
        let dir = out.join(class.name());
        fs::create_dir_all(&dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        for i in 0..per_class {
            let img = synth_image(class, i, seed, width, height)?;
            let path = dir.join(format!("{}_{:04}.pgm", class.name(), i));
            save_pgm(&img, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}
