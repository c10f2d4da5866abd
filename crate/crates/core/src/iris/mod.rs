//! Iris recognition pipeline: boundary localization, rubber-sheet
//! normalization, Gabor iris codes and masked Hamming matching.
//!
//! The pipeline stages are pure functions over [`GrayImage`]:
//!
//! 1. [`localize`] finds the pupil and iris boundary circles with the
//!    integro-differential operator (blurred radial derivative of the mean
//!    contour intensity, maximized over center and radius).
//! 2. [`normalize`] unwraps the annulus between the two circles onto a
//!    fixed radial x angular rectangle (the rubber-sheet model), tracking a
//!    validity grid for samples that fall outside the image or inside the
//!    configured exclusion arcs.
//! 3. [`encode`] turns the polar rectangle into a binary template: two sign
//!    bits (real, imaginary) per Gabor filter placement, with a mask for
//!    unstable or occluded bits.
//! 4. [`hamming`] compares two templates over cyclic angular shifts;
//!    [`decide`] applies the fixed 0.36 accept threshold.

mod encode;
mod localize;
mod matching;
mod normalize;

pub use encode::{encode, GaborBank, IrisCode};
pub use localize::{integrodiff_response, localize};
pub use matching::{decide, hamming, Decision, DECISION_THRESHOLD};
pub use normalize::normalize;

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::imagekit::GrayImage;

#[derive(Debug, Error)]
pub enum IrisError {
    #[error("degenerate contour: fewer than 8 valid samples at radius {0:.1}")]
    DegenerateContour(f64),
    #[error("localization failed: best response {best:.3} below floor {floor:.3}")]
    LocalizationFailed { best: f64, floor: f64 },
    #[error("visibility rejected: only {visible:.2} of the iris contour is usable")]
    VisibilityRejected { visible: f64 },
    #[error("gabor lattice does not fit the polar grid: {0}")]
    LatticeMismatch(String),
    #[error("empty joint mask at every tested shift")]
    EmptyJointMask,
    #[error("hamming distance {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("invalid localizer config: {0}")]
    InvalidConfig(String),
}

/// Two angular intervals (radians, in `[0, 2*pi)`) excluded from contour
/// integrals and marked invalid in the polar grid. The defaults drop the
/// top and bottom quadrants where eyelids and lashes typically intrude.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExclusionArcs(pub [(f64, f64); 2]);

impl Default for ExclusionArcs {
    fn default() -> Self {
        ExclusionArcs([(PI / 4.0, 3.0 * PI / 4.0), (5.0 * PI / 4.0, 7.0 * PI / 4.0)])
    }
}

impl ExclusionArcs {
    /// No exclusions; used by synthetic tests.
    pub fn none() -> Self {
        ExclusionArcs([(0.0, 0.0), (0.0, 0.0)])
    }

    pub fn contains(&self, theta: f64) -> bool {
        let t = theta.rem_euclid(2.0 * PI);
        self.0.iter().any(|&(a, b)| {
            if a == b {
                false
            } else if a < b {
                t >= a && t < b
            } else {
                // Wrapping interval.
                t >= a || t < b
            }
        })
    }
}

/// Search ranges and smoothing for boundary localization.
#[derive(Debug, Clone, Serialize)]
pub struct LocalizerConfig {
    /// Inclusive integer pupil radius range, pixels.
    pub pupil_radius: (usize, usize),
    /// Inclusive integer iris radius range, pixels.
    pub iris_radius: (usize, usize),
    /// Center search lattice stride; a 1 px refinement pass follows.
    pub stride: usize,
    /// Gaussian smoothing width over the radius axis.
    pub sigma: f64,
    /// Contour samples per circle.
    pub angular_samples: usize,
    pub exclusion_arcs: ExclusionArcs,
    /// Minimum acceptable boundary response, intensity units per pixel.
    pub response_floor: f64,
}

impl LocalizerConfig {
    /// Radius ranges scaled to the image size; other knobs at defaults.
    pub fn for_dims(height: usize, width: usize) -> Self {
        let m = height.min(width);
        let pupil_min = (m / 12).max(6);
        let pupil_max = m / 5;
        Self {
            pupil_radius: (pupil_min, pupil_max),
            iris_radius: (pupil_max + 4, (m as f64 * 0.45) as usize),
            stride: 2,
            sigma: 1.5,
            angular_samples: 128,
            exclusion_arcs: ExclusionArcs::default(),
            response_floor: 1.0,
        }
    }

    pub fn validate(&self, img: &GrayImage) -> Result<(), IrisError> {
        let m = img.height().min(img.width());
        let ok_range = |(lo, hi): (usize, usize)| lo > 0 && lo < hi && hi < m / 2 + 1;
        if !ok_range(self.pupil_radius) || !ok_range(self.iris_radius) {
            return Err(IrisError::InvalidConfig(format!(
                "radius ranges {:?}/{:?} out of bounds for a {}x{} image",
                self.pupil_radius,
                self.iris_radius,
                img.height(),
                img.width()
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(IrisError::InvalidConfig("sigma must be positive".into()));
        }
        if self.angular_samples < 64 {
            return Err(IrisError::InvalidConfig("need at least 64 angular samples".into()));
        }
        if self.stride == 0 {
            return Err(IrisError::InvalidConfig("stride must be positive".into()));
        }
        Ok(())
    }
}

/// Localized pupil and iris boundary circles.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IrisGeometry {
    /// (x, y) in pixel coordinates.
    pub pupil_center: (f64, f64),
    pub pupil_radius: f64,
    pub iris_center: (f64, f64),
    pub iris_radius: f64,
    /// Fraction of iris contour samples inside the image and outside the
    /// exclusion arcs.
    pub visible_fraction: f64,
}

/// The unwrapped iris annulus: a radial x angular grid of intensities with
/// per-sample validity.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarIris {
    pub radial_res: usize,
    pub angular_res: usize,
    /// Row-major `radial_res x angular_res` intensities.
    pub samples: Vec<f64>,
    /// False where the source point fell outside the image or inside an
    /// exclusion arc.
    pub validity: Vec<bool>,
}

impl PolarIris {
    pub fn get(&self, radial: usize, angular: usize) -> f64 {
        self.samples[radial * self.angular_res + angular]
    }

    pub fn is_valid(&self, radial: usize, angular: usize) -> bool {
        self.validity[radial * self.angular_res + angular]
    }

    /// PGM rendering for visual debugging (invalid samples shown black).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.angular_res, self.radial_res).into_bytes();
        for (v, &ok) in self.samples.iter().zip(&self.validity) {
            out.push(if ok { v.round().clamp(0.0, 255.0) as u8 } else { 0 });
        }
        out
    }

    /// Cyclic shift of the angular axis by `cols` columns (samples and
    /// validity together); used by tests.
    pub fn shifted(&self, cols: isize) -> PolarIris {
        let w = self.angular_res as isize;
        let mut out = self.clone();
        for r in 0..self.radial_res {
            for c in 0..self.angular_res {
                let src = ((c as isize - cols).rem_euclid(w)) as usize;
                out.samples[r * self.angular_res + c] = self.get(r, src);
                out.validity[r * self.angular_res + c] = self.is_valid(r, src);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exclusion_arcs_default_cover_half() {
        let arcs = ExclusionArcs::default();
        let n = 10_000;
        let inside = (0..n)
            .filter(|&i| arcs.contains(2.0 * PI * i as f64 / n as f64))
            .count();
        assert!((inside as f64 / n as f64 - 0.5).abs() < 1e-3);
        assert!(arcs.contains(PI / 2.0));
        assert!(!arcs.contains(0.0));
        assert!(!arcs.contains(PI));
    }

    #[test]
    fn exclusion_arcs_wrapping() {
        let arcs = ExclusionArcs([(7.0 * PI / 4.0, PI / 4.0), (0.0, 0.0)]);
        assert!(arcs.contains(0.0));
        assert!(arcs.contains(-0.1));
        assert!(!arcs.contains(PI));
    }

    #[test]
    fn localizer_config_validation() {
        let img = GrayImage::filled(96, 96, 0.0).unwrap();
        assert!(LocalizerConfig::for_dims(96, 96).validate(&img).is_ok());
        let mut bad = LocalizerConfig::for_dims(96, 96);
        bad.pupil_radius = (30, 10);
        assert!(bad.validate(&img).is_err());
        let mut bad = LocalizerConfig::for_dims(96, 96);
        bad.angular_samples = 32;
        assert!(bad.validate(&img).is_err());
    }
}
