//! Rail-region masking, the denoise/sharpen filter stack and contrast
//! enhancement.
//!
//! The fixed stage order of [`preprocess_pipeline`] is:
//!
//! 1. mask (Otsu, falling back to a fixed rectangle) and crop to its bounding box
//! 2. bilinear resize to the working dimensions
//! 3. median filter
//! 4. Gaussian blur
//! 5. Laplacian sharpening
//! 6. adaptive (tiled, clip-limited) histogram equalization
//!
//! Every neighbourhood operation replicates edge pixels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StageExt};
use crate::image_io::{resize, round_to_u8, GrayImage};

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn full(img: &GrayImage) -> Rect {
        Rect {
            x: 0,
            y: 0,
            w: img.width(),
            h: img.height(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} mask cells", width * height),
                actual: data.len().to_string(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Tight bounding box of the true cells, if any.
    pub fn bounding_box(&self) -> Option<Rect> {
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        (x0 != usize::MAX).then(|| Rect {
            x: x0,
            y: y0,
            w: x1 - x0 + 1,
            h: y1 - y0 + 1,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    Otsu,
    FixedRect(Rect),
}

/// Parameters of the filter stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub median_window: usize,
    pub gaussian_sigma: f64,
    pub gaussian_ksize: usize,
    pub sharpen_alpha: f64,
    /// Tile grid as (columns, rows).
    pub ahe_tiles: (usize, usize),
    pub ahe_clip: Option<f64>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            median_window: 3,
            gaussian_sigma: 1.0,
            gaussian_ksize: 5,
            sharpen_alpha: 0.5,
            ahe_tiles: (8, 8),
            ahe_clip: Some(2.0),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.median_window == 0 || self.median_window.is_multiple_of(2) {
            return Err(Error::EvenWindow(self.median_window));
        }
        check_kernel(self.gaussian_sigma, self.gaussian_ksize)?;
        if !(self.sharpen_alpha >= 0.0 && self.sharpen_alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sharpen_alpha must be >= 0, got {}",
                self.sharpen_alpha
            )));
        }
        if self.ahe_tiles.0 == 0 || self.ahe_tiles.1 == 0 {
            return Err(Error::InvalidTileGrid(self.ahe_tiles.0, self.ahe_tiles.1));
        }
        check_clip(self.ahe_clip)
    }
}

/// Everything [`preprocess_pipeline`] needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub width: usize,
    pub height: usize,
    pub mask_mode: MaskMode,
    /// Rectangle used when Otsu masking fails; `None` means the whole image.
    pub fallback_rect: Option<Rect>,
    pub filters: FilterConfig,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            mask_mode: MaskMode::Otsu,
            fallback_rect: None,
            filters: FilterConfig::default(),
        }
    }
}

/// Otsu threshold of an image. Class 0 is `<= t`, foreground is `> t`.
pub fn otsu_threshold(img: &GrayImage) -> Result<u8> {
    otsu_threshold_from_histogram(&img.histogram())
}

/// Otsu threshold over a 256-bin histogram, maximising
/// `w0 * w1 * (mu0 - mu1)^2`; the smallest maximising `t` wins.
///
/// The criterion equals `(N*S0 - n0*S)^2 / (N^2 * n0 * n1)`, compared
/// exactly in integers (valid up to 2^28 pixels).
pub fn otsu_threshold_from_histogram(hist: &[u64; 256]) -> Result<u8> {
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    // (quotient, remainder, divisor) of diff^2 / (n0 * n1)
    let mut best: Option<(u8, u128, u128, u128)> = None;
    let (mut n0, mut s0) = (0u64, 0u64);
    for (t, &c) in hist.iter().enumerate().take(255) {
        n0 += c;
        s0 += t as u64 * c;
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let diff = (total as i128 * s0 as i128 - n0 as i128 * total_sum as i128).unsigned_abs();
        let num = diff * diff;
        let den = n0 as u128 * n1 as u128;
        let (q, r) = (num / den, num % den);
        let better = match best {
            None => true,
            Some((_, bq, br, bd)) => q > bq || (q == bq && r * bd > br * den),
        };
        if better {
            best = Some((t as u8, q, r, den));
        }
    }
    best.map(|(t, ..)| t).ok_or(Error::DegenerateImage)
}

pub fn make_mask(img: &GrayImage, mode: MaskMode) -> Result<BinaryMask> {
    match mode {
        MaskMode::Otsu => {
            let t = otsu_threshold(img)?;
            let data: Vec<bool> = img.data().iter().map(|&v| v > t).collect();
            let mask = BinaryMask::new(img.width(), img.height(), data)?;
            if mask.count() == 0 {
                return Err(Error::EmptyMask);
            }
            Ok(mask)
        }
        MaskMode::FixedRect(r) => {
            let fits = r.w > 0
                && r.h > 0
                && r.x.checked_add(r.w).is_some_and(|e| e <= img.width())
                && r.y.checked_add(r.h).is_some_and(|e| e <= img.height());
            if !fits {
                return Err(Error::RectOutOfBounds {
                    x: r.x,
                    y: r.y,
                    w: r.w,
                    h: r.h,
                    width: img.width(),
                    height: img.height(),
                });
            }
            let mut data = vec![false; img.len()];
            for y in r.y..r.y + r.h {
                data[y * img.width() + r.x..y * img.width() + r.x + r.w].fill(true);
            }
            BinaryMask::new(img.width(), img.height(), data)
        }
    }
}

/// Crops to the mask's bounding box, zeroing unmasked pixels inside it.
pub fn apply_mask(img: &GrayImage, mask: &BinaryMask) -> Result<GrayImage> {
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", img.width(), img.height()),
            actual: format!("{}x{}", mask.width(), mask.height()),
        });
    }
    let bb = mask.bounding_box().ok_or(Error::EmptyMask)?;
    GrayImage::from_fn(bb.w, bb.h, |x, y| {
        let (sx, sy) = (bb.x + x, bb.y + y);
        if mask.get(sx, sy) {
            img.get(sx, sy)
        } else {
            0
        }
    })
}

pub fn median_filter(img: &GrayImage, window: usize) -> Result<GrayImage> {
    if window.is_multiple_of(2) {
        return Err(Error::EvenWindow(window));
    }
    let side = img.width().min(img.height());
    if window > side {
        return Err(Error::WindowTooLarge { window, side });
    }
    if window == 1 {
        return Ok(img.clone());
    }
    let r = (window / 2) as isize;
    let mid = window * window / 2;
    let mut buf = Vec::with_capacity(window * window);
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        buf.clear();
        for dy in -r..=r {
            for dx in -r..=r {
                buf.push(img.get_clamped(x as isize + dx, y as isize + dy));
            }
        }
        *buf.select_nth_unstable(mid).1
    })
}

fn check_kernel(sigma: f64, ksize: usize) -> Result<()> {
    if ksize == 0 || ksize.is_multiple_of(2) {
        return Err(Error::InvalidKernel(format!("ksize {ksize} must be odd")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidKernel(format!("sigma {sigma} must be > 0")));
    }
    Ok(())
}

/// Normalized 1-D Gaussian weights of length `ksize`.
pub fn gaussian_kernel(sigma: f64, ksize: usize) -> Result<Vec<f64>> {
    check_kernel(sigma, ksize)?;
    let r = (ksize / 2) as f64;
    let raw: Vec<f64> = (0..ksize)
        .map(|i| {
            let d = i as f64 - r;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / sum).collect())
}

/// Separable Gaussian blur; rounding happens once after both passes.
pub fn gaussian_blur(img: &GrayImage, sigma: f64, ksize: usize) -> Result<GrayImage> {
    let kernel = gaussian_kernel(sigma, ksize)?;
    if ksize == 1 {
        return Ok(img.clone());
    }
    let (w, h) = (img.width(), img.height());
    let r = (ksize / 2) as isize;
    let mut horizontal = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            horizontal[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * img.get_clamped(x as isize + i as isize - r, y as isize) as f64)
                .sum();
        }
    }
    GrayImage::from_fn(w, h, |x, y| {
        let v: f64 = kernel
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let sy = (y as isize + i as isize - r).clamp(0, h as isize - 1) as usize;
                k * horizontal[sy * w + x]
            })
            .sum();
        round_to_u8(v)
    })
}

/// `clamp(img - alpha * laplacian(img))` with the 4-neighbour kernel.
pub fn laplacian_sharpen(img: &GrayImage, alpha: f64) -> GrayImage {
    if alpha == 0.0 {
        return img.clone();
    }
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let (xi, yi) = (x as isize, y as isize);
        let c = img.get(x, y) as f64;
        let lap = img.get_clamped(xi - 1, yi) as f64
            + img.get_clamped(xi + 1, yi) as f64
            + img.get_clamped(xi, yi - 1) as f64
            + img.get_clamped(xi, yi + 1) as f64
            - 4.0 * c;
        round_to_u8(c - alpha * lap)
    })
    .expect("dimensions come from a valid image")
}

fn check_clip(clip: Option<f64>) -> Result<()> {
    match clip {
        Some(c) if !(c >= 1.0 && c.is_finite()) => Err(Error::InvalidParameter(format!(
            "ahe clip limit must be >= 1, got {c}"
        ))),
        _ => Ok(()),
    }
}

/// Histogram-equalization lookup table:
/// `round(255 * (cdf(v) - cdf_min) / (N - cdf_min))`.
/// A single occupied bin maps every level to itself.
pub fn equalization_lut(hist: &[u64; 256]) -> [u8; 256] {
    let total: u64 = hist.iter().sum();
    let cdf_min = hist.iter().copied().find(|&c| c > 0).unwrap_or(0);
    let mut lut = [0u8; 256];
    if total == cdf_min {
        for (v, slot) in lut.iter_mut().enumerate() {
            *slot = v as u8;
        }
        return lut;
    }
    let denom = (total - cdf_min) as f64;
    let mut cdf = 0u64;
    for (v, &c) in hist.iter().enumerate() {
        cdf += c;
        lut[v] = round_to_u8(255.0 * (cdf as f64 - cdf_min as f64) / denom);
    }
    lut
}

pub fn global_hist_eq(img: &GrayImage) -> GrayImage {
    let lut = equalization_lut(&img.histogram());
    GrayImage::new(
        img.width(),
        img.height(),
        img.data().iter().map(|&v| lut[v as usize]).collect(),
    )
    .expect("dimensions come from a valid image")
}

/// Clips each bin at `limit` and spreads the excess evenly across all bins.
fn clip_histogram(hist: &mut [u64; 256], limit: u64) {
    let mut excess = 0u64;
    for c in hist.iter_mut() {
        if *c > limit {
            excess += *c - limit;
            *c = limit;
        }
    }
    let per_bin = excess / 256;
    let mut residual = (excess % 256) as usize;
    for c in hist.iter_mut() {
        *c += per_bin;
    }
    if let Some(step) = 256usize.checked_div(residual) {
        let mut i = 0;
        while i < 256 && residual > 0 {
            hist[i] += 1;
            residual -= 1;
            i += step;
        }
    }
}

/// Tiled histogram equalization with optional clip limit; tile mappings are
/// blended bilinearly between tile centres. A 1x1 grid without clipping is
/// exactly [`global_hist_eq`]. Tiles holding a single gray level keep it,
/// as global equalization does.
pub fn adaptive_hist_eq(img: &GrayImage, tiles: (usize, usize), clip: Option<f64>) -> Result<GrayImage> {
    let (tx, ty) = tiles;
    let (w, h) = (img.width(), img.height());
    if tx == 0 || ty == 0 || tx > w || ty > h {
        return Err(Error::InvalidTileGrid(tx, ty));
    }
    check_clip(clip)?;
    if (tx, ty) == (1, 1) && clip.is_none() {
        return Ok(global_hist_eq(img));
    }

    let bounds = |i: usize, n: usize, len: usize| (i * len / n, (i + 1) * len / n);
    let mut luts = Vec::with_capacity(tx * ty);
    for j in 0..ty {
        let (y0, y1) = bounds(j, ty, h);
        for i in 0..tx {
            let (x0, x1) = bounds(i, tx, w);
            let mut hist = [0u64; 256];
            for y in y0..y1 {
                for x in x0..x1 {
                    hist[img.get(x, y) as usize] += 1;
                }
            }
            let occupied = hist.iter().filter(|&&c| c > 0).count();
            if occupied == 1 {
                luts.push(std::array::from_fn(|v| v as u8));
                continue;
            }
            if let Some(c) = clip {
                let area = ((x1 - x0) * (y1 - y0)) as f64;
                let limit = ((c * area / 256.0) as u64).max(1);
                clip_histogram(&mut hist, limit);
            }
            luts.push(equalization_lut(&hist));
        }
    }

    // Neighbouring tile indices and blend weight along one axis.
    let taps = |p: usize, n: usize, len: usize| -> (usize, usize, f64) {
        let g = (p as f64 + 0.5) * n as f64 / len as f64 - 0.5;
        let i0 = g.floor().clamp(0.0, (n - 1) as f64) as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, (g - i0 as f64).clamp(0.0, 1.0))
    };
    let col_taps: Vec<_> = (0..w).map(|x| taps(x, tx, w)).collect();
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let (j0, j1, wy) = taps(y, ty, h);
        for (x, &(i0, i1, wx)) in col_taps.iter().enumerate() {
            let v = img.get(x, y) as usize;
            let m = |i: usize, j: usize| luts[j * tx + i][v] as f64;
            let top = m(i0, j0) * (1.0 - wx) + m(i1, j0) * wx;
            let bottom = m(i0, j1) * (1.0 - wx) + m(i1, j1) * wx;
            data.push(round_to_u8(top * (1.0 - wy) + bottom * wy));
        }
    }
    GrayImage::new(w, h, data)
}

/// Maps `img` so its cdf follows `reference`'s. Each source level goes to the
/// reference level whose cdf is closest; ties pick the lower level.
pub fn histogram_match(img: &GrayImage, reference: &GrayImage) -> GrayImage {
    let cumulative = |hist: [u64; 256]| -> [u64; 256] {
        let mut acc = 0;
        hist.map(|c| {
            acc += c;
            acc
        })
    };
    let src = cumulative(img.histogram());
    let dst = cumulative(reference.histogram());
    let (n_src, n_dst) = (img.len() as i128, reference.len() as i128);

    // Compare a/n_src against b/n_dst exactly via cross-multiplication.
    let mut lut = [0u8; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        let a = src[v] as i128 * n_dst;
        let mut best = (i128::MAX, 0usize);
        for (r, &b) in dst.iter().enumerate() {
            let d = (a - b as i128 * n_src).abs();
            if d < best.0 {
                best = (d, r);
            }
        }
        *slot = best.1 as u8;
    }
    GrayImage::new(
        img.width(),
        img.height(),
        img.data().iter().map(|&v| lut[v as usize]).collect(),
    )
    .expect("dimensions come from a valid image")
}

/// Full preprocessing chain; see the module docs for the stage order.
pub fn preprocess_pipeline(img: &GrayImage, cfg: &PreprocessConfig) -> Result<GrayImage> {
    cfg.filters.validate().stage("config")?;
    let fallback = MaskMode::FixedRect(cfg.fallback_rect.unwrap_or_else(|| Rect::full(img)));
    let mask = match cfg.mask_mode {
        MaskMode::Otsu => match make_mask(img, MaskMode::Otsu) {
            Err(Error::DegenerateImage | Error::EmptyMask) => {
                log::debug!("otsu mask unusable, falling back to fixed rectangle");
                make_mask(img, fallback)
            }
            other => other,
        },
        fixed => make_mask(img, fixed),
    }
    .stage("mask")?;
    let cropped = apply_mask(img, &mask).stage("mask")?;
    let resized = resize(&cropped, cfg.width, cfg.height).stage("resize")?;
    let f = &cfg.filters;
    let denoised = median_filter(&resized, f.median_window).stage("median")?;
    let blurred = gaussian_blur(&denoised, f.gaussian_sigma, f.gaussian_ksize).stage("gaussian")?;
    let sharpened = laplacian_sharpen(&blurred, f.sharpen_alpha);
    adaptive_hist_eq(&sharpened, f.ahe_tiles, f.ahe_clip).stage("ahe")
}
