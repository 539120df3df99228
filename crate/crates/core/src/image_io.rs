//! Raster types, decoding, grayscale conversion, resizing and PGM output.
//!
//! PGM/PPM (binary `P5`/`P6`) are parsed here directly; PNG and JPEG go
//! through the `image` crate.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rectangular 8-bit luminance raster stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension { width, height });
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{}x{} raster needs {} values, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Pixel lookup with coordinates clamped to the border (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    /// 256-bin histogram of the pixel values.
    pub fn histogram(&self) -> [u64; 256] {
        let mut hist = [0u64; 256];
        for &v in &self.data {
            hist[v as usize] += 1;
        }
        hist
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Rectangular RGB raster stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension { width, height });
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{}x{} raster needs {} pixels, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
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

    pub fn data(&self) -> &[[u8; 3]] {
        &self.data
    }
}

/// Rounds half away from zero and clamps into the 8-bit range.
#[inline]
pub fn round_to_u8(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    v.round().clamp(0.0, 255.0) as u8
}

/// BT.601 luma of one pixel.
#[inline]
pub fn luma(rgb: [u8; 3]) -> u8 {
    round_to_u8(0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64)
}

pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        data: img.data.iter().map(|&p| luma(p)).collect(),
    }
}

/// Decodes a PNG, JPEG, or binary PGM/PPM file.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::FileMissing {
                path: path.to_path_buf(),
            })
        }
        Err(source) => {
            return Err(Error::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    decode_image(&bytes).map_err(|e| match e {
        DecodeError::Unsupported => Error::UnsupportedFormat {
            path: path.to_path_buf(),
        },
        DecodeError::Corrupt(reason) => Error::CorruptData {
            path: path.to_path_buf(),
            reason,
        },
    })
}

/// Loads any supported file straight to grayscale.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    load_image(path).map(|img| to_grayscale(&img))
}

#[derive(Debug)]
enum DecodeError {
    Unsupported,
    Corrupt(String),
}

fn decode_image(bytes: &[u8]) -> Result<RgbImage, DecodeError> {
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        return decode_pnm(bytes);
    }
    let format = if bytes.starts_with(b"\x89PNG") {
        image::ImageFormat::Png
    } else if bytes.starts_with(&[0xFF, 0xD8, 0xFF]) {
        image::ImageFormat::Jpeg
    } else {
        return Err(DecodeError::Unsupported);
    };
    let decoded = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| DecodeError::Corrupt(e.to_string()))?
        .to_rgb8();
    let (w, h) = decoded.dimensions();
    let data = decoded.pixels().map(|p| p.0).collect();
    RgbImage::new(w as usize, h as usize, data).map_err(|e| DecodeError::Corrupt(e.to_string()))
}

fn decode_pnm(bytes: &[u8]) -> Result<RgbImage, DecodeError> {
    let channels = if bytes[1] == b'5' { 1 } else { 3 };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        *field = next_pnm_number(bytes, &mut pos)?;
    }
    let [width, height, maxval] = fields;
    // Exactly one whitespace byte separates the header from the payload.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(DecodeError::Corrupt("missing payload".into()));
    }
    pos += 1;
    if width == 0 || height == 0 {
        return Err(DecodeError::Corrupt(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(DecodeError::Corrupt(format!("unsupported maxval {maxval}")));
    }
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| DecodeError::Corrupt("dimensions overflow".into()))?;
    let payload = &bytes[pos..];
    if payload.len() < need {
        return Err(DecodeError::Corrupt(format!(
            "truncated payload: {} of {} bytes",
            payload.len(),
            need
        )));
    }
    let scale = |v: u8| -> u8 {
        if maxval == 255 {
            v
        } else {
            round_to_u8(v.min(maxval as u8) as f64 * 255.0 / maxval as f64)
        }
    };
    let data = payload[..need]
        .chunks_exact(channels)
        .map(|c| {
            if channels == 1 {
                let v = scale(c[0]);
                [v, v, v]
            } else {
                [scale(c[0]), scale(c[1]), scale(c[2])]
            }
        })
        .collect();
    RgbImage::new(width, height, data).map_err(|e| DecodeError::Corrupt(e.to_string()))
}

fn next_pnm_number(bytes: &[u8], pos: &mut usize) -> Result<usize, DecodeError> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(DecodeError::Corrupt("truncated header".into())),
        }
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(DecodeError::Corrupt("malformed header".into()));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| DecodeError::Corrupt("header number out of range".into()))
}

/// Encodes `img` as a binary PGM byte buffer.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Encodes `img` as a binary PPM byte buffer.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.data.iter().flatten());
    out
}

pub fn save_ppm(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ppm(img)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Bilinear resize with half-pixel centers and clamped edges.
pub fn resize(img: &GrayImage, width: usize, height: usize) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension { width, height });
    }
    if width == img.width && height == img.height {
        return Ok(img.clone());
    }
    let sx = img.width as f64 / width as f64;
    let sy = img.height as f64 / height as f64;
    let max_x = (img.width - 1) as f64;
    let max_y = (img.height - 1) as f64;

    // Per-column source taps are shared by every row.
    let cols: Vec<(usize, usize, f64)> = (0..width)
        .map(|x| {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(img.width - 1);
            (x0, x1, fx - x0 as f64)
        })
        .collect();

    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(img.height - 1);
        let wy = fy - y0 as f64;
        for &(x0, x1, wx) in &cols {
            let top = img.get(x0, y0) as f64 * (1.0 - wx) + img.get(x1, y0) as f64 * wx;
            let bottom = img.get(x0, y1) as f64 * (1.0 - wx) + img.get(x1, y1) as f64 * wx;
            data.push(round_to_u8(top * (1.0 - wy) + bottom * wy));
        }
    }
    GrayImage::new(width, height, data)
}
