//! Seeded random pixel subsampling: masks and measurement vectors.
//!
//! The measurement operator is a masked identity — it observes a random
//! subset of pixels. Mask generation is fully specified so that the same
//! (dims, fraction, seed) reproduce the same mask on any platform:
//!
//! 1. kept count `m` = `floor(fraction * height * width + 0.5)` (half-up);
//! 2. Fisher-Yates shuffle of indices `0..n` driven by the splitmix64
//!    generator whose initial state is [`mix64`]`(seed)`, bounded draws by
//!    rejection sampling;
//! 3. the first `m` shuffled indices, sorted into row-major order, are kept.

use thiserror::Error;

use crate::imagekit::GrayImage;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("invalid sampling fraction {0}: kept pixel count must be in [1, height*width]")]
    InvalidFraction(f64),
    #[error("dimension mismatch: image {0}x{1} vs mask {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}

/// splitmix64 finalizer. Applied to the seed before shuffling so that
/// nearby seeds (sequential experiment cells) give decorrelated streams.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// splitmix64 step: advances `state` and returns the next 64-bit output.
///
/// Reference constants from Steele, Lea & Flood's SplitMix generator; this
/// exact sequence is part of the mask reproducibility contract.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    mix64(*state)
}

// Unbiased draw in [0, bound) by rejection.
fn next_below(state: &mut u64, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let v = splitmix64(state);
        if v < zone {
            return v % bound;
        }
    }
}

/// Which pixels the measurement operator observes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMask {
    pub height: usize,
    pub width: usize,
    pub kept: Vec<bool>,
    pub fraction: f64,
    pub seed: u64,
}

impl SampleMask {
    pub fn kept_count(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }

    pub fn is_kept(&self, row: usize, col: usize) -> bool {
        self.kept[row * self.width + col]
    }

    /// P4 (binary PBM) rendering of the mask, kept pixels black.
    pub fn to_pbm(&self) -> Vec<u8> {
        let mut out = format!("P4\n{} {}\n", self.width, self.height).into_bytes();
        for row in 0..self.height {
            let mut byte = 0u8;
            let mut nbits = 0;
            for col in 0..self.width {
                byte = (byte << 1) | u8::from(self.is_kept(row, col));
                nbits += 1;
                if nbits == 8 {
                    out.push(byte);
                    byte = 0;
                    nbits = 0;
                }
            }
            if nbits > 0 {
                out.push(byte << (8 - nbits));
            }
        }
        out
    }
}

/// Observed pixel values with their positions, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    pub height: usize,
    pub width: usize,
    /// `(row, col, intensity)` triples, strictly increasing in row-major
    /// position.
    pub values: Vec<(usize, usize, f64)>,
}

impl Measurements {
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|&(_, _, v)| v).sum::<f64>() / self.values.len() as f64
    }

    /// CSV dump, `row,col,value` per line with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,value\n");
        for &(r, c, v) in &self.values {
            out.push_str(&format!("{r},{c},{v}\n"));
        }
        out
    }
}

/// Draws a uniform without-replacement pixel mask. The kept count is
/// `round(fraction * height * width)` (half-up) and must be at least 1.
pub fn generate_mask(
    height: usize,
    width: usize,
    fraction: f64,
    seed: u64,
) -> Result<SampleMask, SamplingError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(SamplingError::InvalidFraction(fraction));
    }
    let n = height * width;
    let m = (fraction * n as f64 + 0.5).floor() as usize;
    if m == 0 || m > n {
        return Err(SamplingError::InvalidFraction(fraction));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut state = mix64(seed);
    for i in (1..n).rev() {
        let j = next_below(&mut state, (i + 1) as u64) as usize;
        indices.swap(i, j);
    }
    let mut kept = vec![false; n];
    for &idx in &indices[..m] {
        kept[idx] = true;
    }
    Ok(SampleMask {
        height,
        width,
        kept,
        fraction,
        seed,
    })
}

/// Gathers the kept pixels of `img` in row-major order.
pub fn measure(img: &GrayImage, mask: &SampleMask) -> Result<Measurements, SamplingError> {
    if img.height() != mask.height || img.width() != mask.width {
        return Err(SamplingError::DimensionMismatch(
            img.height(),
            img.width(),
            mask.height,
            mask.width,
        ));
    }
    let mut values = Vec::with_capacity(mask.kept_count());
    for row in 0..mask.height {
        for col in 0..mask.width {
            if mask.is_kept(row, col) {
                values.push((row, col, img.get(row, col)));
            }
        }
    }
    Ok(Measurements {
        height: mask.height,
        width: mask.width,
        values,
    })
}

/// Scatters measurements back onto a full grid, filling unmeasured pixels
/// with `fill`. Used to initialize solvers.
pub fn embed(measurements: &Measurements, fill: f64) -> GrayImage {
    let mut data = vec![fill; measurements.height * measurements.width];
    for &(r, c, v) in &measurements.values {
        data[r * measurements.width + c] = v;
    }
    GrayImage::new(measurements.height, measurements.width, data)
        .expect("measurement dimensions are valid image dimensions")
}
