//! Deterministic synthetic eye images.
//!
//! No public iris dataset ships with the crate; tests and the experiment
//! harness run on generated fixtures instead: a dark pupil disk, a textured
//! iris annulus and a bright sclera, with anti-aliased boundaries. The
//! annulus texture is a seeded sum of angular/radial harmonics, giving each
//! "subject" a distinct, band-limited pattern that Gabor filters respond to.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::imagekit::{save_image, GrayImage, ImageError};
use crate::sampling::splitmix64;

/// Geometry of a synthetic eye.
#[derive(Debug, Clone, Copy)]
pub struct EyeSpec {
    pub height: usize,
    pub width: usize,
    pub center: (f64, f64),
    pub pupil_radius: f64,
    pub iris_radius: f64,
}

impl EyeSpec {
    /// Centered eye for a square image of the given size.
    pub fn centered(size: usize, pupil_radius: f64, iris_radius: f64) -> Self {
        let c = (size as f64 - 1.0) / 2.0;
        Self {
            height: size,
            width: size,
            center: (c, c),
            pupil_radius,
            iris_radius,
        }
    }
}

// 0 -> 1 transition of width `w` centered at `edge`.
fn smoothstep(x: f64, edge: f64, w: f64) -> f64 {
    let t = ((x - edge) / w + 0.5).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Three flat intensity levels (pupil, iris, sclera) with ~1 px soft edges.
pub fn flat_eye(spec: &EyeSpec, pupil_v: f64, iris_v: f64, sclera_v: f64) -> GrayImage {
    let mut data = vec![0.0; spec.height * spec.width];
    for row in 0..spec.height {
        for col in 0..spec.width {
            let dx = col as f64 - spec.center.0;
            let dy = row as f64 - spec.center.1;
            let r = (dx * dx + dy * dy).sqrt();
            let p = smoothstep(r, spec.pupil_radius, 1.0);
            let s = smoothstep(r, spec.iris_radius, 1.0);
            data[row * spec.width + col] = pupil_v + (iris_v - pupil_v) * p + (sclera_v - iris_v) * s;
        }
    }
    GrayImage::new(spec.height, spec.width, data).expect("valid fixture dimensions")
}

// Seeded harmonic texture on the annulus, as a function of angle and the
// normalized radial position within the annulus. Zero-mean, bounded by the
// sum of amplitudes.
struct Texture {
    terms: Vec<(f64, f64, f64, f64, f64)>, // (amp, ang_freq, ang_phase, rad_freq, rad_phase)
}

impl Texture {
    fn new(seed: u64, harmonics: usize) -> Self {
        let mut state = seed ^ 0x5EED_F1A7;
        let unit = |state: &mut u64| (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64;
        let mut terms = Vec::new();
        for h in 0..harmonics {
            let amp = 28.0 / (1.0 + 0.35 * h as f64);
            let ang_freq = (4 + (splitmix64(&mut state) % 14)) as f64;
            let ang_phase = unit(&mut state) * 2.0 * PI;
            let rad_freq = (1 + (splitmix64(&mut state) % 3)) as f64;
            let rad_phase = unit(&mut state) * 2.0 * PI;
            terms.push((amp, ang_freq, ang_phase, rad_freq, rad_phase));
        }
        Self { terms }
    }

    fn eval(&self, theta: f64, radial: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(amp, af, ap, rf, rp)| {
                amp * (af * theta + ap).cos() * (rf * PI * radial + rp).cos()
            })
            .sum()
    }
}

/// A flat eye plus a seeded harmonic pattern on the iris annulus.
pub fn textured_eye(spec: &EyeSpec, seed: u64) -> GrayImage {
    let base = flat_eye(spec, 20.0, 130.0, 225.0);
    let tex = Texture::new(seed, 6);
    let mut data = base.data().to_vec();
    for row in 0..spec.height {
        for col in 0..spec.width {
            let dx = col as f64 - spec.center.0;
            let dy = row as f64 - spec.center.1;
            let r = (dx * dx + dy * dy).sqrt();
            if r > spec.pupil_radius && r < spec.iris_radius {
                let theta = dy.atan2(dx);
                let radial = (r - spec.pupil_radius) / (spec.iris_radius - spec.pupil_radius);
                // Fade the texture out near both boundaries so the edges stay
                // clean for localization.
                let fade = smoothstep(radial, 0.08, 0.12) * (1.0 - smoothstep(radial, 0.92, 0.12));
                let v = data[row * spec.width + col] + fade * tex.eval(theta, radial);
                data[row * spec.width + col] = v.clamp(0.0, 255.0);
            }
        }
    }
    GrayImage::new(spec.height, spec.width, data).expect("valid fixture dimensions")
}

/// Standard bundled fixture set: three 96x96 textured eyes with slightly
/// different geometry, written as PGM plus a `manifest.txt`.
pub fn write_fixture_set(dir: &Path) -> Result<PathBuf, ImageError> {
    std::fs::create_dir_all(dir)?;
    let specs = [
        ("subject_a", EyeSpec::centered(96, 13.0, 34.0), 101u64),
        ("subject_b", EyeSpec { center: (49.0, 46.0), ..EyeSpec::centered(96, 12.0, 32.0) }, 202),
        ("subject_c", EyeSpec { center: (46.0, 48.5), ..EyeSpec::centered(96, 14.0, 35.0) }, 303),
    ];
    let mut manifest = String::new();
    for (label, spec, seed) in &specs {
        let img = textured_eye(spec, *seed);
        let name = format!("{label}.pgm");
        save_image(&img, &dir.join(&name))?;
        manifest.push_str(&format!("{name}\t{label}\n"));
    }
    let mpath = dir.join("manifest.txt");
    std::fs::write(&mpath, manifest)?;
    Ok(mpath)
}

/// An image synthesized from exactly `k` DCT coefficients (DC plus `k - 1`
/// random slots), resampled until every pixel lands in `[0, 255]`. Used by
/// the exact-recovery tests, where the sparsity level must be known.
pub fn sparse_dct_image(h: usize, w: usize, k: usize, seed: u64) -> GrayImage {
    use num_complex::Complex64;

    use crate::transforms::{self, CoeffGrid, TransformDomain};

    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
    loop {
        let mut values = vec![Complex64::new(0.0, 0.0); h * w];
        // DC keeps the pixel range near mid-gray; remaining k-1 slots are
        // random positions with moderate amplitude.
        values[0] = Complex64::new(128.0 * (h as f64 * w as f64).sqrt(), 0.0);
        let mut placed = 1;
        while placed < k {
            let idx = (splitmix64(&mut state) as usize) % (h * w);
            if values[idx].norm() != 0.0 {
                continue;
            }
            let amp = (splitmix64(&mut state) % 400) as f64 - 200.0;
            if amp.abs() < 20.0 {
                continue;
            }
            values[idx] = Complex64::new(amp, 0.0);
            placed += 1;
        }
        let coeffs = CoeffGrid { height: h, width: w, values };
        let (img, _) = transforms::inverse(&coeffs, TransformDomain::Dct);
        let lo = img.data().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = img.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo >= 0.0 && hi <= 255.0 {
            return img;
        }
    }
}
