//! Compressive-sensing reconstruction from pixel subsamples.
//!
//! Three solver modes share one loop skeleton:
//!
//! - `Tv` — projected gradient descent on the smoothed total-variation
//!   functional, projecting onto the data-fidelity ball after each step;
//! - `L1` — iterative soft thresholding in a transform domain with a
//!   geometrically decaying threshold;
//! - `TvDomain` — the thresholding iteration with a hard (keep-or-kill)
//!   threshold plus one smoothed-TV gradient step per iteration. This is the
//!   mode the harness runs per sparsity domain, so the domain choice
//!   genuinely changes the result.
//!
//! The data constraint is `||x_kept - y||^2 <= epsilon^2`; with the default
//! `epsilon = 0` the measured pixels are reimposed exactly.

use serde::Serialize;
use thiserror::Error;

use crate::imagekit::GrayImage;
use crate::sampling::{Measurements, SampleMask};
use crate::transforms::{self, CoeffGrid, TransformDomain};

#[derive(Debug, Error)]
pub enum ReconError {
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("inconsistent measurements: position ({0}, {1}) is not kept by the mask")]
    InconsistentMeasurements(usize, usize),
    #[error("dimension mismatch between measurements and mask")]
    DimensionMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    Tv,
    L1,
    TvDomain,
}

impl std::str::FromStr for SolverMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tv" => Ok(SolverMode::Tv),
            "l1" => Ok(SolverMode::L1),
            "tv_domain" | "tvdomain" => Ok(SolverMode::TvDomain),
            other => Err(format!("unknown solver mode '{other}'")),
        }
    }
}

/// Solver knobs. All fields are overridable from the harness config file.
#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub mode: SolverMode,
    /// Sparsity domain; required for `L1` and `TvDomain`.
    pub domain: Option<TransformDomain>,
    /// Data-fidelity tolerance, intensity units (squared in the constraint).
    pub epsilon: f64,
    pub max_iters: usize,
    pub step_size: f64,
    /// Smoothing of the TV gradient, strictly positive.
    pub tv_smoothing: f64,
    /// Threshold schedule: value at iteration k is
    /// `threshold_start * threshold_decay^k` (as a fraction of the current
    /// maximum coefficient magnitude).
    pub threshold_start: f64,
    pub threshold_decay: f64,
    /// Relative image change below which iteration stops.
    pub convergence_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: SolverMode::TvDomain,
            domain: Some(TransformDomain::Dct),
            epsilon: 0.0,
            max_iters: 300,
            step_size: 0.25,
            tv_smoothing: 1e-3,
            threshold_start: 0.30,
            threshold_decay: 0.95,
            convergence_tol: 1e-5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ReconError> {
        if self.epsilon < 0.0 {
            return Err(ReconError::InvalidConfig("epsilon must be >= 0".into()));
        }
        if self.max_iters < 1 {
            return Err(ReconError::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(self.step_size > 0.0) {
            return Err(ReconError::InvalidConfig("step_size must be > 0".into()));
        }
        if !(self.tv_smoothing > 0.0) {
            return Err(ReconError::InvalidConfig("tv_smoothing must be > 0".into()));
        }
        if !(self.threshold_decay > 0.0 && self.threshold_decay <= 1.0) {
            return Err(ReconError::InvalidConfig(
                "threshold_decay must be in (0, 1]".into(),
            ));
        }
        if matches!(self.mode, SolverMode::L1 | SolverMode::TvDomain) && self.domain.is_none() {
            return Err(ReconError::InvalidConfig(
                "l1 and tv_domain modes need a transform domain".into(),
            ));
        }
        Ok(())
    }
}

/// What the solver did: iteration count, objective trace, convergence flag.
#[derive(Debug, Clone, Serialize)]
pub struct ReconReport {
    pub iterations: usize,
    pub final_tv: f64,
    pub final_residual: f64,
    pub converged: bool,
    pub tv_trace: Vec<f64>,
    /// Largest imaginary magnitude discarded when synthesizing from a
    /// complex (DFT) domain; diagnostic only.
    pub discarded_imag_max: f64,
}

/// Total variation: sum over pixels of the Euclidean norm of the forward
/// difference pair, with differences across the boundary treated as zero.
pub fn tv(img: &GrayImage) -> f64 {
    let (h, w) = (img.height(), img.width());
    let mut total = 0.0;
    for i in 0..h {
        for j in 0..w {
            let dv = if i + 1 < h { img.get(i + 1, j) - img.get(i, j) } else { 0.0 };
            let dh = if j + 1 < w { img.get(i, j + 1) - img.get(i, j) } else { 0.0 };
            total += (dv * dv + dh * dh).sqrt();
        }
    }
    total
}

/// Gradient of the smoothed functional
/// `sum_ij sqrt(dv^2 + dh^2 + smoothing^2)`.
pub fn tv_gradient(img: &GrayImage, smoothing: f64) -> Vec<f64> {
    assert!(smoothing > 0.0, "smoothing must be positive");
    let (h, w) = (img.height(), img.width());
    let s2 = smoothing * smoothing;
    // Per-pixel forward differences and smoothed term norms.
    let mut dv = vec![0.0; h * w];
    let mut dh = vec![0.0; h * w];
    let mut norm = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let idx = i * w + j;
            if i + 1 < h {
                dv[idx] = img.get(i + 1, j) - img.get(i, j);
            }
            if j + 1 < w {
                dh[idx] = img.get(i, j + 1) - img.get(i, j);
            }
            norm[idx] = (dv[idx] * dv[idx] + dh[idx] * dh[idx] + s2).sqrt();
        }
    }
    let mut grad = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let idx = i * w + j;
            let mut g = (-dv[idx] - dh[idx]) / norm[idx];
            if i > 0 {
                let up = (i - 1) * w + j;
                g += dv[up] / norm[up];
            }
            if j > 0 {
                let left = i * w + j - 1;
                g += dh[left] / norm[left];
            }
            grad[idx] = g;
        }
    }
    grad
}

// Projects x onto { x : ||x_kept - y||^2 <= eps^2 } by rescaling the
// residual on the kept set; eps = 0 reduces to reimposing the measurements.
fn project_data(x: &mut [f64], meas: &Measurements, width: usize, epsilon: f64) {
    if epsilon == 0.0 {
        for &(r, c, v) in &meas.values {
            x[r * width + c] = v;
        }
        return;
    }
    let mut norm2 = 0.0;
    for &(r, c, v) in &meas.values {
        let d = x[r * width + c] - v;
        norm2 += d * d;
    }
    let norm = norm2.sqrt();
    if norm > epsilon {
        let scale = epsilon / norm;
        for &(r, c, v) in &meas.values {
            let idx = r * width + c;
            x[idx] = v + (x[idx] - v) * scale;
        }
    }
}

fn residual_on_kept(x: &[f64], meas: &Measurements, width: usize) -> f64 {
    meas.values
        .iter()
        .map(|&(r, c, v)| {
            let d = x[r * width + c] - v;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

// Soft threshold on coefficient magnitude, preserving phase.
fn soft_threshold(coeffs: &mut CoeffGrid, tau: f64) {
    for v in &mut coeffs.values {
        let mag = v.norm();
        if mag <= tau {
            *v = num_complex::Complex64::new(0.0, 0.0);
        } else {
            *v *= (mag - tau) / mag;
        }
    }
}

// Hard threshold at magnitude tau, expressed through the fraction-based
// keep-or-kill primitive so tie handling stays in one place. At least one
// coefficient always survives.
fn hard_threshold_by_magnitude(coeffs: &CoeffGrid, tau: f64) -> CoeffGrid {
    let n = coeffs.values.len();
    let survivors = coeffs.values.iter().filter(|v| v.norm() >= tau).count().max(1);
    transforms::hard_threshold(coeffs, survivors as f64 / n as f64)
        .expect("fraction in (0, 1] by construction")
}

/// Recovers a full image from pixel subsamples. Non-convergence within
/// `max_iters` is reported, not an error. The output is clamped to
/// `[0, 255]` only after the final data projection.
pub fn reconstruct(
    meas: &Measurements,
    mask: &SampleMask,
    cfg: &SolverConfig,
) -> Result<(GrayImage, ReconReport), ReconError> {
    cfg.validate()?;
    if meas.height != mask.height || meas.width != mask.width {
        return Err(ReconError::DimensionMismatch);
    }
    for &(r, c, _) in &meas.values {
        if !mask.is_kept(r, c) {
            return Err(ReconError::InconsistentMeasurements(r, c));
        }
    }
    let (h, w) = (mask.height, mask.width);
    let mut x = crate::sampling::embed(meas, meas.mean()).data().to_vec();
    project_data(&mut x, meas, w, cfg.epsilon);

    let mut tv_trace = Vec::with_capacity(cfg.max_iters);
    let mut discarded_imag_max = 0.0f64;
    let mut converged = false;
    let mut iterations = 0;
    let y_norm = meas.values.iter().map(|&(_, _, v)| v * v).sum::<f64>().sqrt();

    for k in 0..cfg.max_iters {
        let prev = x.clone();
        match cfg.mode {
            SolverMode::Tv => {
                let img = GrayImage::new(h, w, x.clone()).expect("finite intermediate");
                let grad = tv_gradient(&img, cfg.tv_smoothing);
                for (xi, gi) in x.iter_mut().zip(&grad) {
                    *xi -= cfg.step_size * gi;
                }
                project_data(&mut x, meas, w, cfg.epsilon);
            }
            SolverMode::L1 | SolverMode::TvDomain => {
                let domain = cfg.domain.expect("validated above");
                project_data(&mut x, meas, w, cfg.epsilon);
                let img = GrayImage::new(h, w, x.clone()).expect("finite intermediate");
                let mut coeffs = transforms::forward(&img, domain);
                let tau = cfg.threshold_start
                    * cfg.threshold_decay.powi(k as i32)
                    * coeffs.max_magnitude();
                if cfg.mode == SolverMode::L1 {
                    soft_threshold(&mut coeffs, tau);
                } else {
                    coeffs = hard_threshold_by_magnitude(&coeffs, tau);
                }
                let (back, discarded) = transforms::inverse(&coeffs, domain);
                discarded_imag_max = discarded_imag_max.max(discarded);
                x.copy_from_slice(back.data());
                if cfg.mode == SolverMode::TvDomain {
                    let img = GrayImage::new(h, w, x.clone()).expect("finite intermediate");
                    let grad = tv_gradient(&img, cfg.tv_smoothing);
                    for (xi, gi) in x.iter_mut().zip(&grad) {
                        *xi -= cfg.step_size * gi;
                    }
                }
            }
        }
        iterations = k + 1;
        let img = GrayImage::new(h, w, x.clone()).expect("finite intermediate");
        tv_trace.push(tv(&img));

        // Fixed summation order keeps the convergence test reproducible.
        let mut change2 = 0.0;
        let mut norm2 = 0.0;
        for (a, b) in x.iter().zip(&prev) {
            change2 += (a - b) * (a - b);
            norm2 += b * b;
        }
        // Thresholding iterates can stall early while the threshold still
        // wipes out everything but the largest coefficient, so a small step
        // alone is not convergence; the iterate must also fit the data.
        let consistent =
            residual_on_kept(&x, meas, w) <= cfg.epsilon.max(cfg.convergence_tol * y_norm.max(1.0));
        if consistent && change2.sqrt() <= cfg.convergence_tol * norm2.sqrt().max(1e-12) {
            converged = true;
            break;
        }
    }

    project_data(&mut x, meas, w, cfg.epsilon);
    for v in &mut x {
        *v = v.clamp(0.0, 255.0);
    }
    let final_residual = residual_on_kept(&x, meas, w);
    let out = GrayImage::new(h, w, x).expect("clamped output is finite");
    let report = ReconReport {
        iterations,
        final_tv: tv(&out),
        final_residual,
        converged,
        tv_trace,
        discarded_imag_max,
    };
    Ok((out, report))
}
