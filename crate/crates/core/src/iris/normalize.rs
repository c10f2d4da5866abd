//! Rubber-sheet unwrapping of the iris annulus.

use std::f64::consts::PI;

use crate::imagekit::GrayImage;

use super::{ExclusionArcs, IrisGeometry, PolarIris};

/// Unwraps the annulus between the pupil and iris circles onto a
/// `radial_res x angular_res` rectangle.
///
/// For grid cell `(i, j)` the normalized radial position is
/// `(i + 0.5) / radial_res` and the angle is `2*pi*j / angular_res`; the
/// source point interpolates linearly between the pupil boundary point
/// (about the pupil center) and the iris boundary point (about the iris
/// center) at that angle. Samples are bilinear; validity is false for
/// points outside the image or angles inside an exclusion arc.
pub fn normalize(
    img: &GrayImage,
    geo: &IrisGeometry,
    radial_res: usize,
    angular_res: usize,
    arcs: &ExclusionArcs,
) -> PolarIris {
    let mut samples = vec![0.0; radial_res * angular_res];
    let mut validity = vec![false; radial_res * angular_res];
    for j in 0..angular_res {
        let theta = 2.0 * PI * j as f64 / angular_res as f64;
        let (sin, cos) = theta.sin_cos();
        let px = geo.pupil_center.0 + geo.pupil_radius * cos;
        let py = geo.pupil_center.1 + geo.pupil_radius * sin;
        let ix = geo.iris_center.0 + geo.iris_radius * cos;
        let iy = geo.iris_center.1 + geo.iris_radius * sin;
        let excluded = arcs.contains(theta);
        for i in 0..radial_res {
            let t = (i as f64 + 0.5) / radial_res as f64;
            let x = (1.0 - t) * px + t * ix;
            let y = (1.0 - t) * py + t * iy;
            let idx = i * angular_res + j;
            match img.sample_bilinear(x, y) {
                Some(v) => {
                    samples[idx] = v;
                    validity[idx] = !excluded;
                }
                None => {
                    samples[idx] = 0.0;
                    validity[idx] = false;
                }
            }
        }
    }
    PolarIris {
        radial_res,
        angular_res,
        samples,
        validity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::EyeSpec;

    fn concentric_geometry(spec: &EyeSpec) -> IrisGeometry {
        IrisGeometry {
            pupil_center: spec.center,
            pupil_radius: spec.pupil_radius,
            iris_center: spec.center,
            iris_radius: spec.iris_radius,
            visible_fraction: 1.0,
        }
    }

    // Intensity a pure function of radius about the image center.
    fn radial_image(size: usize) -> GrayImage {
        let c = (size as f64 - 1.0) / 2.0;
        let data: Vec<f64> = (0..size * size)
            .map(|idx| {
                let (row, col) = (idx / size, idx % size);
                let r = ((col as f64 - c).powi(2) + (row as f64 - c).powi(2)).sqrt();
                100.0 + 50.0 * (r / 8.0).sin()
            })
            .collect();
        GrayImage::new(size, size, data).unwrap()
    }

    #[test]
    fn radially_symmetric_image_gives_constant_rows() {
        let spec = EyeSpec::centered(128, 20.0, 50.0);
        let img = radial_image(128);
        let polar = normalize(&img, &concentric_geometry(&spec), 16, 240, &ExclusionArcs::none());
        for i in 0..16 {
            let row: Vec<f64> = (0..240).map(|j| polar.get(i, j)).collect();
            let mean = row.iter().sum::<f64>() / 240.0;
            for (j, v) in row.iter().enumerate() {
                // Bilinear interpolation on the Cartesian grid adds a small
                // angular ripple; it stays well under a gray level.
                assert!((v - mean).abs() < 0.5, "row {i} col {j}: {v} vs {mean}");
            }
        }
    }

    #[test]
    fn rotation_shifts_columns() {
        // Rotating the source image about a concentric center cyclically
        // shifts the polar grid columns.
        let size = 128usize;
        let spec = EyeSpec::centered(size, 20.0, 50.0);
        let img = crate::fixtures::textured_eye(&spec, 5);
        let angular_res = 240usize;
        let shift_cols = 30usize; // 45 degrees
        let delta = 2.0 * PI * shift_cols as f64 / angular_res as f64;
        let c = (size as f64 - 1.0) / 2.0;
        // Rotate by resampling: dest(x, y) = src(rot_-delta(x, y)).
        let rotated = {
            let mut data = vec![0.0; size * size];
            for row in 0..size {
                for col in 0..size {
                    let dx = col as f64 - c;
                    let dy = row as f64 - c;
                    let x = c + dx * delta.cos() + dy * delta.sin();
                    let y = c - dx * delta.sin() + dy * delta.cos();
                    data[row * size + col] = img.sample_bilinear(x, y).unwrap_or(0.0);
                }
            }
            GrayImage::new(size, size, data).unwrap()
        };
        let geo = concentric_geometry(&spec);
        let arcs = ExclusionArcs::none();
        let base = normalize(&img, &geo, 16, angular_res, &arcs);
        let rot = normalize(&rotated, &geo, 16, angular_res, &arcs);
        let rms_at = |s: isize| -> f64 {
            let expected = base.shifted(s);
            let mut sum2 = 0.0;
            let mut n = 0usize;
            for i in 0..16 {
                for j in 0..angular_res {
                    if expected.is_valid(i, j) && rot.is_valid(i, j) {
                        let e = expected.get(i, j) - rot.get(i, j);
                        sum2 += e * e;
                        n += 1;
                    }
                }
            }
            (sum2 / n as f64).sqrt()
        };
        // The rotated polar grid aligns with the base grid shifted by
        // round(angular_res * delta / 2*pi) columns; the residual is
        // bilinear resampling error (measured 1.9 gray levels RMS).
        let at_shift = rms_at(shift_cols as isize);
        assert!(at_shift < 3.0, "rms {at_shift}");
        for other in [shift_cols as isize - 1, shift_cols as isize + 1, 0] {
            assert!(rms_at(other) > at_shift, "shift {other} not worse");
        }
    }

    #[test]
    fn out_of_image_samples_marked_invalid() {
        let spec = EyeSpec {
            height: 128,
            width: 128,
            center: (63.5, 30.0),
            pupil_radius: 15.0,
            iris_radius: 40.0,
        };
        // Iris circle pokes out of the top border (center y=30, radius 40).
        let img = GrayImage::filled(128, 128, 100.0).unwrap();
        let polar = normalize(&img, &concentric_geometry(&spec), 16, 240, &ExclusionArcs::none());
        let mut any_invalid = false;
        for j in 0..240 {
            let theta = 2.0 * PI * j as f64 / 240.0;
            for i in 0..16 {
                let t = (i as f64 + 0.5) / 16.0;
                let r = (1.0 - t) * 15.0 + t * 40.0;
                let y = 30.0 + r * theta.sin();
                let x = 63.5 + r * theta.cos();
                let inside = (0.0..=127.0).contains(&x) && (0.0..=127.0).contains(&y);
                assert_eq!(polar.is_valid(i, j), inside, "i={i} j={j}");
                any_invalid |= !inside;
            }
        }
        assert!(any_invalid);
    }

    #[test]
    fn exclusion_arcs_invalidate_columns() {
        let spec = EyeSpec::centered(128, 20.0, 50.0);
        let img = GrayImage::filled(128, 128, 100.0).unwrap();
        let polar = normalize(&img, &concentric_geometry(&spec), 16, 240, &ExclusionArcs::default());
        for j in 0..240 {
            let theta = 2.0 * PI * j as f64 / 240.0;
            let expect = !ExclusionArcs::default().contains(theta);
            for i in 0..16 {
                assert_eq!(polar.is_valid(i, j), expect);
            }
        }
    }
}
