//! Gabor iris-code extraction.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{IrisError, PolarIris};

/// A lattice of complex Gabor filters over the polar grid.
///
/// Each filter is a complex angular carrier `exp(-i*omega*(theta0 - phi))`
/// under a separable Gaussian envelope in the radial (`alpha`, row units)
/// and angular (`beta`, radians) directions. The Gaussian-weighted local
/// mean is subtracted before the carrier product, so constant regions give
/// zero response.
#[derive(Debug, Clone, Serialize)]
pub struct GaborBank {
    /// Angular carrier frequencies, radians^-1.
    pub wavelengths: Vec<f64>,
    /// Radial envelope width, polar grid rows.
    pub alpha: f64,
    /// Angular envelope width, radians.
    pub beta: f64,
    /// Placement lattice: evenly spaced radial rows x angular columns.
    pub radial_sites: usize,
    pub angular_sites: usize,
}

impl GaborBank {
    /// Defaults scaled to the polar grid: an 8 x 30 lattice (for the default
    /// 16 x 240 grid), envelope widths `radial_res/3` and eight grid columns,
    /// and two carriers an octave apart.
    pub fn default_for(radial_res: usize, angular_res: usize) -> Self {
        let beta = 2.0 * PI * 8.0 / angular_res as f64;
        Self {
            wavelengths: vec![PI / beta, PI / (2.0 * beta)],
            alpha: radial_res as f64 / 3.0,
            beta,
            radial_sites: radial_res / 2,
            angular_sites: angular_res / 8,
        }
    }

    pub fn code_len(&self) -> usize {
        2 * self.wavelengths.len() * self.radial_sites * self.angular_sites
    }

    fn validate(&self, polar: &PolarIris) -> Result<(), IrisError> {
        if self.wavelengths.is_empty() || self.radial_sites == 0 || self.angular_sites == 0 {
            return Err(IrisError::LatticeMismatch("empty lattice or wavelength list".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(IrisError::LatticeMismatch("envelope widths must be positive".into()));
        }
        if self.radial_sites > polar.radial_res || self.angular_sites > polar.angular_res {
            return Err(IrisError::LatticeMismatch(format!(
                "lattice {}x{} exceeds polar grid {}x{}",
                self.radial_sites, self.angular_sites, polar.radial_res, polar.angular_res
            )));
        }
        if polar.angular_res % self.angular_sites != 0 {
            return Err(IrisError::LatticeMismatch(format!(
                "angular sites {} must divide the angular resolution {}",
                self.angular_sites, polar.angular_res
            )));
        }
        Ok(())
    }
}

/// Binary iris template: two sign bits (Re, Im) per lattice site per
/// wavelength, plus a validity mask. A masked-out bit is either unstable
/// (near-zero filter response) or had occluded samples under its filter
/// support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrisCode {
    pub bits: Vec<bool>,
    pub mask: Vec<bool>,
    pub wavelengths: usize,
    pub radial_sites: usize,
    pub angular_sites: usize,
}

impl IrisCode {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn same_layout(&self, other: &IrisCode) -> bool {
        self.wavelengths == other.wavelengths
            && self.radial_sites == other.radial_sites
            && self.angular_sites == other.angular_sites
    }

    pub(crate) fn index(&self, w: usize, radial: usize, angular: usize, comp: usize) -> usize {
        ((w * self.radial_sites + radial) * self.angular_sites + angular) * 2 + comp
    }

    /// Cyclic shift of the angular lattice axis by `steps` (bits and mask
    /// together).
    pub fn shifted(&self, steps: isize) -> IrisCode {
        let n = self.angular_sites as isize;
        let mut out = self.clone();
        for w in 0..self.wavelengths {
            for r in 0..self.radial_sites {
                for a in 0..self.angular_sites {
                    let src = ((a as isize - steps).rem_euclid(n)) as usize;
                    for comp in 0..2 {
                        out.bits[self.index(w, r, a, comp)] = self.bits[self.index(w, r, src, comp)];
                        out.mask[self.index(w, r, a, comp)] = self.mask[self.index(w, r, src, comp)];
                    }
                }
            }
        }
        out
    }

    /// Binary serialization: 8-byte magic, four little-endian u32 dimensions
    /// (wavelengths, radial sites, angular sites, bit count), then the code
    /// bits and the mask bits packed little-endian within bytes, row-major
    /// lattice order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"IRISCODE");
        for v in [
            self.wavelengths as u32,
            self.radial_sites as u32,
            self.angular_sites as u32,
            self.bits.len() as u32,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&pack_bits(&self.bits));
        out.extend_from_slice(&pack_bits(&self.mask));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<IrisCode, IrisError> {
        let bad = |msg: &str| IrisError::LatticeMismatch(format!("decode: {msg}"));
        if bytes.len() < 24 || &bytes[..8] != b"IRISCODE" {
            return Err(bad("missing magic"));
        }
        let u32_at = |off: usize| {
            u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize
        };
        let (wavelengths, radial_sites, angular_sites, nbits) =
            (u32_at(8), u32_at(12), u32_at(16), u32_at(20));
        if nbits != 2 * wavelengths * radial_sites * angular_sites {
            return Err(bad("inconsistent dimensions"));
        }
        let nbytes = nbits.div_ceil(8);
        if bytes.len() != 24 + 2 * nbytes {
            return Err(bad("truncated payload"));
        }
        Ok(IrisCode {
            bits: unpack_bits(&bytes[24..24 + nbytes], nbits),
            mask: unpack_bits(&bytes[24 + nbytes..], nbits),
            wavelengths,
            radial_sites,
            angular_sites,
        })
    }
}

fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

fn unpack_bits(bytes: &[u8], n: usize) -> Vec<bool> {
    (0..n).map(|i| bytes[i / 8] & (1 << (i % 8)) != 0).collect()
}

// Responses below this magnitude encode as unstable (bit set, mask false).
const UNSTABLE_EPS: f64 = 1e-9;

/// Evaluates the filter bank over the polar grid and emits the sign bits.
pub fn encode(polar: &PolarIris, bank: &GaborBank) -> Result<IrisCode, IrisError> {
    bank.validate(polar)?;
    let n = bank.code_len();
    let mut code = IrisCode {
        bits: vec![false; n],
        mask: vec![false; n],
        wavelengths: bank.wavelengths.len(),
        radial_sites: bank.radial_sites,
        angular_sites: bank.angular_sites,
    };
    let col_step = polar.angular_res / bank.angular_sites;
    let dtheta = 2.0 * PI / polar.angular_res as f64;
    // Angular support half-width in columns and radial in rows (2 envelope
    // widths on each side).
    let ang_hw = ((2.0 * bank.beta / dtheta).ceil() as usize).min(polar.angular_res / 2);
    let rad_hw = (2.0 * bank.alpha).ceil() as usize;

    for (wi, &omega) in bank.wavelengths.iter().enumerate() {
        for site_r in 0..bank.radial_sites {
            let r0 = (site_r as f64 + 0.5) * polar.radial_res as f64 / bank.radial_sites as f64 - 0.5;
            let row_lo = (r0 - rad_hw as f64).ceil().max(0.0) as usize;
            let row_hi = ((r0 + rad_hw as f64).floor() as usize).min(polar.radial_res - 1);
            for site_a in 0..bank.angular_sites {
                let col0 = site_a * col_step;
                // Gather the support, tracking occlusion.
                let mut wsum = 0.0;
                let mut wisum = 0.0;
                let mut occluded = false;
                let mut support: Vec<(f64, f64, f64)> = Vec::new(); // (weight, dtheta, intensity)
                for row in row_lo..=row_hi {
                    let wr = (-((r0 - row as f64).powi(2)) / (bank.alpha * bank.alpha)).exp();
                    for da in -(ang_hw as isize)..=(ang_hw as isize) {
                        let col = (col0 as isize + da).rem_euclid(polar.angular_res as isize) as usize;
                        let dth = da as f64 * dtheta;
                        if dth.abs() > 2.0 * bank.beta {
                            continue;
                        }
                        if !polar.is_valid(row, col) {
                            occluded = true;
                            continue;
                        }
                        let w = wr * (-(dth * dth) / (bank.beta * bank.beta)).exp();
                        let v = polar.get(row, col);
                        wsum += w;
                        wisum += w * v;
                        support.push((w, dth, v));
                    }
                }
                let (re_idx, im_idx) = (
                    code.index(wi, site_r, site_a, 0),
                    code.index(wi, site_r, site_a, 1),
                );
                if wsum <= 0.0 {
                    code.bits[re_idx] = true;
                    code.bits[im_idx] = true;
                    continue; // fully occluded, mask stays false
                }
                let local_mean = wisum / wsum;
                let mut resp = Complex64::new(0.0, 0.0);
                for &(w, dth, v) in &support {
                    // theta0 - phi = -dth for a sample dth ahead of the site.
                    let carrier = Complex64::from_polar(1.0, -omega * (-dth));
                    resp += carrier * (w * (v - local_mean));
                }
                let stable_re = resp.re.abs() >= UNSTABLE_EPS;
                let stable_im = resp.im.abs() >= UNSTABLE_EPS;
                // Unstable bits encode as set with mask false.
                code.bits[re_idx] = !stable_re || resp.re >= 0.0;
                code.bits[im_idx] = !stable_im || resp.im >= 0.0;
                code.mask[re_idx] = stable_re && !occluded;
                code.mask[im_idx] = stable_im && !occluded;
            }
        }
    }
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iris::ExclusionArcs;

    fn textured_polar(seed: u64) -> PolarIris {
        // Deterministic smooth texture directly in polar space.
        let (radial_res, angular_res) = (16usize, 240usize);
        let mut state = seed;
        let k1 = 3.0 + (crate::sampling::splitmix64(&mut state) % 9) as f64;
        let k2 = 5.0 + (crate::sampling::splitmix64(&mut state) % 13) as f64;
        let samples: Vec<f64> = (0..radial_res * angular_res)
            .map(|idx| {
                let i = (idx / angular_res) as f64;
                let th = 2.0 * PI * (idx % angular_res) as f64 / angular_res as f64;
                130.0 + 40.0 * (k1 * th + i * 0.3).cos() + 25.0 * (k2 * th).sin()
            })
            .collect();
        PolarIris {
            radial_res,
            angular_res,
            samples,
            validity: vec![true; radial_res * angular_res],
        }
    }

    #[test]
    fn code_length_is_structural() {
        let polar = textured_polar(1);
        let bank = GaborBank::default_for(16, 240);
        let code = encode(&polar, &bank).unwrap();
        assert_eq!(code.len(), 2 * bank.wavelengths.len() * 8 * 30);
        assert_eq!(code.len(), 960);
    }

    #[test]
    fn constant_input_all_masked() {
        let polar = PolarIris {
            radial_res: 16,
            angular_res: 240,
            samples: vec![77.0; 16 * 240],
            validity: vec![true; 16 * 240],
        };
        let bank = GaborBank::default_for(16, 240);
        let code = encode(&polar, &bank).unwrap();
        assert!(code.mask.iter().all(|&m| !m));
        assert!(code.bits.iter().all(|&b| b));
    }

    #[test]
    fn textured_input_mostly_unmasked() {
        let code = encode(&textured_polar(4), &GaborBank::default_for(16, 240)).unwrap();
        let live = code.mask.iter().filter(|&&m| m).count();
        assert!(live > code.len() / 2, "only {live} live bits");
    }

    #[test]
    fn cyclic_shift_permutes_code() {
        let polar = textured_polar(9);
        let bank = GaborBank::default_for(16, 240);
        let col_step = 240 / bank.angular_sites;
        let base = encode(&polar, &bank).unwrap();
        let shifted = encode(&polar.shifted(col_step as isize), &bank).unwrap();
        let expected = base.shifted(1);
        for i in 0..base.len() {
            if expected.mask[i] && shifted.mask[i] {
                assert_eq!(expected.bits[i], shifted.bits[i], "bit {i}");
            }
        }
    }

    #[test]
    fn intensity_negation_flips_unmasked_bits() {
        let polar = textured_polar(13);
        let negated = PolarIris {
            samples: polar.samples.iter().map(|v| -v).collect(),
            ..polar.clone()
        };
        let bank = GaborBank::default_for(16, 240);
        let a = encode(&polar, &bank).unwrap();
        let b = encode(&negated, &bank).unwrap();
        for i in 0..a.len() {
            if a.mask[i] && b.mask[i] {
                assert_ne!(a.bits[i], b.bits[i], "bit {i}");
            }
        }
    }

    #[test]
    fn occluded_support_masks_bits() {
        let mut polar = textured_polar(2);
        // Invalidate one angular wedge.
        for i in 0..polar.radial_res {
            for j in 100..120 {
                polar.validity[i * polar.angular_res + j] = false;
            }
        }
        let bank = GaborBank::default_for(16, 240);
        let code = encode(&polar, &bank).unwrap();
        // Sites whose support touches columns 100..120 must be masked.
        let col_step = 240 / bank.angular_sites;
        let ang_hw = (2.0 * bank.beta / (2.0 * PI / 240.0)).ceil() as isize;
        for site_a in 0..bank.angular_sites {
            let col0 = (site_a * col_step) as isize;
            let touches = (100 - ang_hw..120 + ang_hw).contains(&col0);
            if touches {
                for w in 0..code.wavelengths {
                    for r in 0..code.radial_sites {
                        assert!(!code.mask[code.index(w, r, site_a, 0)], "site {site_a}");
                        assert!(!code.mask[code.index(w, r, site_a, 1)], "site {site_a}");
                    }
                }
            }
        }
        // But not everything is masked.
        assert!(code.mask.iter().any(|&m| m));
    }

    #[test]
    fn lattice_mismatch_rejected() {
        let polar = textured_polar(1);
        let mut bank = GaborBank::default_for(16, 240);
        bank.radial_sites = 40;
        assert!(matches!(encode(&polar, &bank), Err(IrisError::LatticeMismatch(_))));
        let mut bank = GaborBank::default_for(16, 240);
        bank.angular_sites = 7; // does not divide 240
        assert!(encode(&polar, &bank).is_err());
    }

    #[test]
    fn serialization_round_trip() {
        let code = encode(&textured_polar(21), &GaborBank::default_for(16, 240)).unwrap();
        let bytes = code.to_bytes();
        let back = IrisCode::from_bytes(&bytes).unwrap();
        assert_eq!(code, back);
        assert!(IrisCode::from_bytes(&bytes[..10]).is_err());
        let mut corrupt = bytes.clone();
        corrupt[0] = b'X';
        assert!(IrisCode::from_bytes(&corrupt).is_err());
    }

    #[test]
    fn pipeline_smoke_textured_eye() {
        // Full pipeline on a synthetic eye: localize, normalize, encode.
        let spec = crate::fixtures::EyeSpec::centered(96, 13.0, 34.0);
        let img = crate::fixtures::textured_eye(&spec, 11);
        let cfg = crate::iris::LocalizerConfig::for_dims(96, 96);
        let geo = crate::iris::localize(&img, &cfg).unwrap();
        let polar = crate::iris::normalize(&img, &geo, 16, 240, &ExclusionArcs::default());
        let code = encode(&polar, &GaborBank::default_for(16, 240)).unwrap();
        let live = code.mask.iter().filter(|&&m| m).count();
        assert!(live >= 100, "only {live} live bits");
    }
}
