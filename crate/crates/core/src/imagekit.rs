//! Grayscale image ingestion/serialization and image-quality metrics.
//!
//! Pixel intensities are kept as `f64` in memory so that iterative solvers
//! can work with fractional values; quantization to 8-bit happens only when
//! an image is written to disk. The nominal intensity range is `[0, 255]`
//! (files are always read and written in that range) but in-memory grids may
//! temporarily leave it during reconstruction.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("image too small: {width}x{height}, need at least 8x8")]
    ImageTooSmall { width: usize, height: usize },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("invalid image data: {0}")]
    InvalidData(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A 2D grid of real-valued grayscale intensities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl GrayImage {
    /// Builds an image from row-major data. Rejects grids smaller than 8x8,
    /// size mismatches and non-finite intensities.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        if height < 8 || width < 8 {
            return Err(ImageError::ImageTooSmall { width, height });
        }
        if data.len() != height * width {
            return Err(ImageError::InvalidData(format!(
                "expected {} samples, got {}",
                height * width,
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(ImageError::InvalidData("non-finite intensity".into()));
        }
        Ok(Self { height, width, data })
    }

    /// Constant-valued image.
    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self, ImageError> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col]
    }

    pub fn same_dims(&self, other: &GrayImage) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Bilinear sample at fractional (x=col, y=row). Returns `None` outside
    /// the valid interpolation rectangle `[0, w-1] x [0, h-1]`.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<f64> {
        if !(x.is_finite() && y.is_finite()) {
            return None;
        }
        if x < 0.0 || y < 0.0 || x > (self.width - 1) as f64 || y > (self.height - 1) as f64 {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let v00 = self.get(y0, x0);
        let v01 = self.get(y0, x1);
        let v10 = self.get(y1, x0);
        let v11 = self.get(y1, x1);
        Some(v00 * (1.0 - fx) * (1.0 - fy) + v01 * fx * (1.0 - fy) + v10 * (1.0 - fx) * fy + v11 * fx * fy)
    }

    /// Rounds to nearest integer and clamps to `[0, 255]`.
    pub fn quantized_bytes(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// PSNR in decibels, with a distinguished value for identical images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Infinite,
    Db(f64),
}

impl Psnr {
    /// Finite value in dB, `None` when infinite.
    pub fn as_db(&self) -> Option<f64> {
        match self {
            Psnr::Infinite => None,
            Psnr::Db(v) => Some(*v),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Psnr::Infinite)
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Infinite => write!(f, "inf"),
            Psnr::Db(v) => write!(f, "{v:.4}"),
        }
    }
}

/// `10 * log10(255^2 / MSE)` with an 8-bit peak regardless of the actual
/// image maximum. Identical inputs give [`Psnr::Infinite`].
pub fn psnr(reference: &GrayImage, test: &GrayImage) -> Result<Psnr, ImageError> {
    if !reference.same_dims(test) {
        return Err(ImageError::DimensionMismatch(
            reference.height,
            reference.width,
            test.height,
            test.width,
        ));
    }
    let n = reference.data.len() as f64;
    let mse: f64 = reference
        .data
        .iter()
        .zip(&test.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        Ok(Psnr::Infinite)
    } else {
        Ok(Psnr::Db(10.0 * (255.0 * 255.0 / mse).log10()))
    }
}

/// Loads an 8-bit grayscale image from a P5 PGM or grayscale PNG file.
/// Color, 16-bit and malformed inputs are rejected.
pub fn load_image(path: &Path) -> Result<GrayImage, ImageError> {
    if !path.exists() {
        return Err(ImageError::FileNotFound(path.to_path_buf()));
    }
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "pgm" => load_pgm(path),
        "png" => load_png(path),
        other => Err(ImageError::UnsupportedFormat(format!(
            "unknown extension '{other}', expected pgm or png"
        ))),
    }
}

/// Writes `img` as 8-bit P5 PGM or grayscale PNG depending on the file
/// extension. Intensities are rounded to nearest and clamped to `[0, 255]`.
pub fn save_image(img: &GrayImage, path: &Path) -> Result<(), ImageError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let bytes = img.quantized_bytes();
    match ext.as_str() {
        "pgm" => {
            let file = fs::File::create(path)?;
            let mut w = BufWriter::new(file);
            write!(w, "P5\n{} {}\n255\n", img.width, img.height)?;
            w.write_all(&bytes)?;
            w.flush()?;
            Ok(())
        }
        "png" => {
            let buf = image::GrayImage::from_raw(img.width as u32, img.height as u32, bytes)
                .expect("buffer size matches dimensions");
            buf.save_with_format(path, image::ImageFormat::Png)
                .map_err(|e| match e {
                    image::ImageError::IoError(io) => ImageError::Io(io),
                    other => ImageError::InvalidData(other.to_string()),
                })
        }
        other => Err(ImageError::UnsupportedFormat(format!(
            "unknown extension '{other}', expected pgm or png"
        ))),
    }
}

fn load_pgm(path: &Path) -> Result<GrayImage, ImageError> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;

    fn next_token(bytes: &[u8], pos: &mut usize) -> Option<Vec<u8>> {
        // Skip whitespace and '#' comments between header tokens.
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        if *pos >= bytes.len() {
            return None;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        Some(bytes[start..*pos].to_vec())
    }

    let magic = next_token(&bytes, &mut pos)
        .ok_or_else(|| ImageError::UnsupportedFormat("empty PGM".into()))?;
    if magic != b"P5" {
        return Err(ImageError::UnsupportedFormat(format!(
            "PGM magic '{}', only binary P5 is supported",
            String::from_utf8_lossy(&magic)
        )));
    }
    let parse_num = |tok: Option<Vec<u8>>| -> Result<usize, ImageError> {
        let tok = tok.ok_or_else(|| ImageError::UnsupportedFormat("truncated PGM header".into()))?;
        String::from_utf8_lossy(&tok)
            .parse::<usize>()
            .map_err(|_| ImageError::UnsupportedFormat("non-numeric PGM header field".into()))
    };
    let width = parse_num(next_token(&bytes, &mut pos))?;
    let height = parse_num(next_token(&bytes, &mut pos))?;
    let maxval = parse_num(next_token(&bytes, &mut pos))?;
    if maxval != 255 {
        return Err(ImageError::UnsupportedFormat(format!(
            "PGM maxval {maxval}, only 8-bit (255) is supported"
        )));
    }
    // Exactly one whitespace byte separates the header from raster data.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(ImageError::UnsupportedFormat("malformed PGM header".into()));
    }
    pos += 1;
    let expected = width * height;
    if bytes.len() < pos + expected {
        return Err(ImageError::UnsupportedFormat("truncated PGM raster".into()));
    }
    let data: Vec<f64> = bytes[pos..pos + expected].iter().map(|&b| b as f64).collect();
    GrayImage::new(height, width, data)
}

fn load_png(path: &Path) -> Result<GrayImage, ImageError> {
    let dynimg = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => ImageError::Io(io),
        other => ImageError::UnsupportedFormat(other.to_string()),
    })?;
    match dynimg {
        image::DynamicImage::ImageLuma8(g) => {
            let (w, h) = (g.width() as usize, g.height() as usize);
            let data: Vec<f64> = g.into_raw().into_iter().map(|b| b as f64).collect();
            GrayImage::new(h, w, data)
        }
        other => Err(ImageError::UnsupportedFormat(format!(
            "PNG color type {:?}, only 8-bit grayscale is supported",
            other.color()
        ))),
    }
}

/// A dataset listing: image paths with subject labels, resolved against a
/// root directory.
///
/// The on-disk form is plain text, one `relative/path<TAB>label` per line;
/// blank lines and lines starting with `#` are ignored.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: String,
}

impl DatasetManifest {
    /// Parses a manifest file. Every referenced image must exist and every
    /// label must be nonempty.
    pub fn load(path: &Path) -> Result<Self, ImageError> {
        if !path.exists() {
            return Err(ImageError::FileNotFound(path.to_path_buf()));
        }
        let root = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let text = fs::read_to_string(path)?;
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (rel, label) = line.split_once('\t').ok_or_else(|| {
                ImageError::Manifest(format!("line {}: expected 'path<TAB>label'", lineno + 1))
            })?;
            if label.trim().is_empty() {
                return Err(ImageError::Manifest(format!("line {}: empty label", lineno + 1)));
            }
            let full = root.join(rel);
            if !full.is_file() {
                return Err(ImageError::Manifest(format!(
                    "line {}: unreadable image '{}'",
                    lineno + 1,
                    full.display()
                )));
            }
            entries.push(ManifestEntry {
                path: full,
                label: label.trim().to_string(),
            });
        }
        if entries.is_empty() {
            return Err(ImageError::Manifest("manifest lists no images".into()));
        }
        Ok(Self { root, entries })
    }
}
