//! Orthonormal 2D DCT and unitary 2D DFT sparsity bases, plus coefficient
//! thresholding.
//!
//! Both transforms share a single energy convention: the DCT is the separable
//! orthonormal DCT-II/DCT-III pair and the DFT is scaled by `1/sqrt(MN)` in
//! both directions, so Parseval holds for either domain and one threshold
//! schedule serves both. Transforms are applied as dense basis-matrix
//! products per row/column; the matrices are cached per (kind, size).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use thiserror::Error;

use crate::imagekit::GrayImage;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("dimension mismatch: coefficient grid is {0}x{1}, expected {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("invalid keep fraction {0}, expected a value in (0, 1]")]
    InvalidFraction(f64),
}

/// Sparsity basis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformDomain {
    Dct,
    Dft,
}

impl TransformDomain {
    pub fn name(&self) -> &'static str {
        match self {
            TransformDomain::Dct => "dct",
            TransformDomain::Dft => "dft",
        }
    }
}

impl std::str::FromStr for TransformDomain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dct" => Ok(TransformDomain::Dct),
            "dft" => Ok(TransformDomain::Dft),
            other => Err(format!("unknown transform domain '{other}'")),
        }
    }
}

/// Transform-domain coefficients of an image. Imaginary parts are
/// numerically zero for the DCT of a real image.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffGrid {
    pub height: usize,
    pub width: usize,
    pub values: Vec<Complex64>,
}

impl CoeffGrid {
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.width + col]
    }

    pub fn max_magnitude(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

// 1D orthonormal DCT-II basis: row k is c_k * cos(pi*(2x+1)*k / (2n)),
// c_0 = sqrt(1/n), c_k = sqrt(2/n) otherwise. The transpose is the inverse.
fn dct_matrix(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for k in 0..n {
        let scale = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        for x in 0..n {
            m[k * n + x] = scale * (PI * (2 * x + 1) as f64 * k as f64 / (2.0 * n as f64)).cos();
        }
    }
    m
}

// 1D unitary DFT basis: entry (k, x) = exp(-2*pi*i*k*x/n) / sqrt(n).
fn dft_matrix(n: usize) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    let scale = 1.0 / (n as f64).sqrt();
    for k in 0..n {
        for x in 0..n {
            let phase = -2.0 * PI * (k as f64) * (x as f64) / n as f64;
            m[k * n + x] = Complex64::from_polar(scale, phase);
        }
    }
    m
}

#[derive(Clone)]
enum Basis {
    Real(Arc<Vec<f64>>),
    Complex(Arc<Vec<Complex64>>),
}

static BASIS_CACHE: Lazy<Mutex<HashMap<(TransformDomain, usize), Basis>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn basis(domain: TransformDomain, n: usize) -> Basis {
    let mut cache = BASIS_CACHE.lock().unwrap();
    cache
        .entry((domain, n))
        .or_insert_with(|| match domain {
            TransformDomain::Dct => Basis::Real(Arc::new(dct_matrix(n))),
            TransformDomain::Dft => Basis::Complex(Arc::new(dft_matrix(n))),
        })
        .clone()
}

// y = M * x for an n x n basis matrix, optionally conjugated (DFT inverse).
fn apply_basis(b: &Basis, conjugate: bool, x: &[Complex64], y: &mut [Complex64]) {
    let n = x.len();
    match b {
        Basis::Real(m) => {
            for k in 0..n {
                let row = &m[k * n..(k + 1) * n];
                let mut acc = Complex64::new(0.0, 0.0);
                for (coef, v) in row.iter().zip(x) {
                    acc += v * *coef;
                }
                y[k] = acc;
            }
        }
        Basis::Complex(m) => {
            for k in 0..n {
                let row = &m[k * n..(k + 1) * n];
                let mut acc = Complex64::new(0.0, 0.0);
                if conjugate {
                    for (coef, v) in row.iter().zip(x) {
                        acc += v * coef.conj();
                    }
                } else {
                    for (coef, v) in row.iter().zip(x) {
                        acc += v * *coef;
                    }
                }
                y[k] = acc;
            }
        }
    }
}

// Separable 2D transform: 1D pass along every row, then along every column.
// `inverse` selects the transposed (DCT) / conjugated (DFT) basis.
fn transform_2d(
    height: usize,
    width: usize,
    data: &[Complex64],
    domain: TransformDomain,
    inverse: bool,
) -> Vec<Complex64> {
    let row_basis_raw = basis(domain, width);
    let col_basis_raw = basis(domain, height);
    // For the DCT the inverse is the transpose; build it once here rather
    // than caching a second matrix per size.
    let transpose_real = |m: &Arc<Vec<f64>>, n: usize| -> Basis {
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                t[j * n + i] = m[i * n + j];
            }
        }
        Basis::Real(Arc::new(t))
    };
    let (row_basis, col_basis, conj) = if inverse {
        match (&row_basis_raw, &col_basis_raw) {
            (Basis::Real(r), Basis::Real(c)) => {
                (transpose_real(r, width), transpose_real(c, height), false)
            }
            // Unitary DFT matrix is symmetric, so the inverse is its conjugate.
            _ => (row_basis_raw, col_basis_raw, true),
        }
    } else {
        (row_basis_raw, col_basis_raw, false)
    };

    let mut mid = vec![Complex64::new(0.0, 0.0); height * width];
    let mut buf = vec![Complex64::new(0.0, 0.0); width.max(height)];
    for r in 0..height {
        apply_basis(&row_basis, conj, &data[r * width..(r + 1) * width], &mut buf[..width]);
        mid[r * width..(r + 1) * width].copy_from_slice(&buf[..width]);
    }
    let mut out = vec![Complex64::new(0.0, 0.0); height * width];
    let mut col_in = vec![Complex64::new(0.0, 0.0); height];
    for c in 0..width {
        for r in 0..height {
            col_in[r] = mid[r * width + c];
        }
        apply_basis(&col_basis, conj, &col_in, &mut buf[..height]);
        for r in 0..height {
            out[r * width + c] = buf[r];
        }
    }
    out
}

/// Analysis transform of an image into the chosen domain.
pub fn forward(img: &GrayImage, domain: TransformDomain) -> CoeffGrid {
    let data: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let values = transform_2d(img.height(), img.width(), &data, domain, false);
    CoeffGrid {
        height: img.height(),
        width: img.width(),
        values,
    }
}

/// Synthesis transform back to the pixel domain. Returns the real part of
/// the synthesis plus the largest discarded imaginary magnitude (nonzero
/// only for DFT coefficients without conjugate symmetry).
pub fn inverse(coeffs: &CoeffGrid, domain: TransformDomain) -> (GrayImage, f64) {
    let values = transform_2d(coeffs.height, coeffs.width, &coeffs.values, domain, true);
    let mut discarded = 0.0f64;
    let data: Vec<f64> = values
        .iter()
        .map(|c| {
            discarded = discarded.max(c.im.abs());
            c.re
        })
        .collect();
    let img = GrayImage::new(coeffs.height, coeffs.width, data)
        .expect("synthesis preserves dimensions and finiteness");
    (img, discarded)
}

/// Keeps the `ceil(keep_fraction * M * N)` largest-magnitude coefficients
/// and zeroes the rest. Ties are broken by row-major index (lower kept).
pub fn hard_threshold(coeffs: &CoeffGrid, keep_fraction: f64) -> Result<CoeffGrid, TransformError> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(TransformError::InvalidFraction(keep_fraction));
    }
    let n = coeffs.values.len();
    let keep = ((keep_fraction * n as f64).ceil() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        coeffs.values[b]
            .norm()
            .partial_cmp(&coeffs.values[a].norm())
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut out = CoeffGrid {
        height: coeffs.height,
        width: coeffs.width,
        values: vec![Complex64::new(0.0, 0.0); n],
    };
    for &idx in order.iter().take(keep) {
        out.values[idx] = coeffs.values[idx];
    }
    Ok(out)
}
