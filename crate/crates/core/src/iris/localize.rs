//! Integro-differential boundary search.

use std::f64::consts::PI;

use crate::imagekit::GrayImage;

use super::{IrisError, IrisGeometry, LocalizerConfig};

// Normalized Gaussian kernel over the radius axis, half-width ceil(3 sigma).
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let hw = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-hw..=hw)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

// Mean intensity along the circle, bilinear samples at `angular_samples`
// uniform angles, skipping exclusion arcs and out-of-image points. `None`
// when fewer than 8 samples are usable.
fn contour_mean(
    img: &GrayImage,
    cx: f64,
    cy: f64,
    radius: f64,
    cfg: &LocalizerConfig,
) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for a in 0..cfg.angular_samples {
        let theta = 2.0 * PI * a as f64 / cfg.angular_samples as f64;
        if cfg.exclusion_arcs.contains(theta) {
            continue;
        }
        let x = cx + radius * theta.cos();
        let y = cy + radius * theta.sin();
        if let Some(v) = img.sample_bilinear(x, y) {
            sum += v;
            count += 1;
        }
    }
    if count < 8 {
        None
    } else {
        Some(sum / count as f64)
    }
}

/// Boundary strength of the circle `(cx, cy, r)`: the absolute radial
/// derivative of the circular mean intensity, Gaussian-smoothed over the
/// radius axis. Radial differences touching radii below 1 px, or contours
/// with too few usable samples, contribute zero.
pub fn integrodiff_response(
    img: &GrayImage,
    cx: f64,
    cy: f64,
    r: f64,
    cfg: &LocalizerConfig,
) -> Result<f64, IrisError> {
    cfg.validate(img)?;
    if contour_mean(img, cx, cy, r, cfg).is_none() {
        return Err(IrisError::DegenerateContour(r));
    }
    let kernel = gaussian_kernel(cfg.sigma);
    let hw = (kernel.len() / 2) as i64;
    let mut acc = 0.0;
    for (ki, g) in kernel.iter().enumerate() {
        let rho = r + (ki as i64 - hw) as f64;
        if rho < 1.0 {
            continue;
        }
        let lo = contour_mean(img, cx, cy, rho, cfg);
        let hi = contour_mean(img, cx, cy, rho + 1.0, cfg);
        if let (Some(lo), Some(hi)) = (lo, hi) {
            acc += g * (hi - lo);
        }
    }
    Ok(acc.abs())
}

// Candidate ordering: strictly larger response wins; exact ties go to the
// smaller radius, then row-major center order.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    response: f64,
    radius: usize,
    center: (f64, f64), // (x, y)
}

impl Candidate {
    fn beats(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(o) => {
                if self.response != o.response {
                    self.response > o.response
                } else {
                    let key = |c: &Candidate| (c.radius, c.center.1 as i64, c.center.0 as i64);
                    key(self) < key(&o.clone())
                }
            }
        }
    }
}

// Evaluates every radius in [rmin, rmax] at one center, sharing the contour
// means across the Gaussian window.
fn best_radius_at(
    img: &GrayImage,
    cx: f64,
    cy: f64,
    rmin: usize,
    rmax: usize,
    kernel: &[f64],
    cfg: &LocalizerConfig,
) -> Option<Candidate> {
    let hw = (kernel.len() / 2) as i64;
    let lo = rmin as i64 - hw;
    let hi = rmax as i64 + hw + 1;
    let means: Vec<Option<f64>> = (lo..=hi)
        .map(|rho| {
            if rho < 1 {
                None
            } else {
                contour_mean(img, cx, cy, rho as f64, cfg)
            }
        })
        .collect();
    let diff = |rho: i64| -> f64 {
        let idx = (rho - lo) as usize;
        match (means.get(idx), means.get(idx + 1)) {
            (Some(Some(a)), Some(Some(b))) => b - a,
            _ => 0.0,
        }
    };
    let mut best: Option<Candidate> = None;
    for r in rmin..=rmax {
        // The probe contour itself must be usable.
        if means[(r as i64 - lo) as usize].is_none() {
            continue;
        }
        let mut acc = 0.0;
        for (ki, g) in kernel.iter().enumerate() {
            acc += g * diff(r as i64 + ki as i64 - hw);
        }
        let cand = Candidate {
            response: acc.abs(),
            radius: r,
            center: (cx, cy),
        };
        if cand.beats(&best) {
            best = Some(cand);
        }
    }
    best
}

fn search(
    img: &GrayImage,
    centers: impl Iterator<Item = (f64, f64)>,
    rmin: usize,
    rmax: usize,
    kernel: &[f64],
    cfg: &LocalizerConfig,
    accept: impl Fn(&Candidate) -> bool,
) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    for (cx, cy) in centers {
        if let Some(c) = best_radius_at(img, cx, cy, rmin, rmax, kernel, cfg) {
            if accept(&c) && c.beats(&best) {
                best = Some(c);
            }
        }
    }
    best
}

// Response at one fractional circle, 0.0 where the contour is degenerate.
fn response_at(img: &GrayImage, cx: f64, cy: f64, r: f64, kernel: &[f64], cfg: &LocalizerConfig) -> f64 {
    let hw = (kernel.len() / 2) as i64;
    let mut acc = 0.0;
    for (ki, g) in kernel.iter().enumerate() {
        let rho = r + (ki as i64 - hw) as f64;
        if rho < 1.0 {
            continue;
        }
        if let (Some(lo), Some(hi)) = (
            contour_mean(img, cx, cy, rho, cfg),
            contour_mean(img, cx, cy, rho + 1.0, cfg),
        ) {
            acc += g * (hi - lo);
        }
    }
    acc.abs()
}

// Parabolic peak offset from three unit-spaced samples, clamped to
// [-0.5, 0.5]; zero when the triple is not a proper peak.
fn parabolic_offset(fm: f64, f0: f64, fp: f64) -> f64 {
    let denom = fm - 2.0 * f0 + fp;
    if denom >= 0.0 || !denom.is_finite() {
        return 0.0;
    }
    (0.5 * (fm - fp) / denom).clamp(-0.5, 0.5)
}

// Sub-pixel polish of an integer-grid candidate: fits a parabola through
// the response at unit offsets along each of cx, cy and r independently.
// The 1 px grid quantizes the boundary estimate enough to destabilize
// downstream iris codes; the interpolated peak removes that jitter.
fn subpixel_refine(
    img: &GrayImage,
    cand: &Candidate,
    kernel: &[f64],
    cfg: &LocalizerConfig,
) -> (f64, f64, f64) {
    let (cx, cy) = cand.center;
    let r = cand.radius as f64;
    let f0 = response_at(img, cx, cy, r, kernel, cfg);
    let dx = parabolic_offset(
        response_at(img, cx - 1.0, cy, r, kernel, cfg),
        f0,
        response_at(img, cx + 1.0, cy, r, kernel, cfg),
    );
    let dy = parabolic_offset(
        response_at(img, cx, cy - 1.0, r, kernel, cfg),
        f0,
        response_at(img, cx, cy + 1.0, r, kernel, cfg),
    );
    let dr = parabolic_offset(
        response_at(img, cx, cy, r - 1.0, kernel, cfg),
        f0,
        response_at(img, cx, cy, r + 1.0, kernel, cfg),
    );
    (cx + dx, cy + dy, r + dr)
}

fn grid(x0: f64, x1: f64, y0: f64, y1: f64, step: usize, w: usize, h: usize) -> Vec<(f64, f64)> {
    let clamp = |v: f64, hi: usize| v.max(0.0).min((hi - 1) as f64);
    let (x0, x1) = (clamp(x0, w), clamp(x1, w));
    let (y0, y1) = (clamp(y0, h), clamp(y1, h));
    let mut out = Vec::new();
    let mut y = y0;
    while y <= y1 {
        let mut x = x0;
        while x <= x1 {
            out.push((x, y));
            x += step as f64;
        }
        y += step as f64;
    }
    out
}

/// Finds the pupil and iris boundary circles by exhaustive search over a
/// strided center lattice and integer radii, with a 1 px refinement pass
/// and a parabolic sub-pixel peak fit around the best candidate of each
/// stage. The iris center is constrained
/// to within 10 px of the pupil center and the pupil circle must lie
/// strictly inside the iris circle. Geometries with less than half of the
/// iris contour usable are rejected.
pub fn localize(img: &GrayImage, cfg: &LocalizerConfig) -> Result<IrisGeometry, IrisError> {
    cfg.validate(img)?;
    let kernel = gaussian_kernel(cfg.sigma);
    let (h, w) = (img.height(), img.width());
    let (p_min, p_max) = cfg.pupil_radius;
    let (i_min, i_max) = cfg.iris_radius;

    // Pupil stage: coarse lattice, then 1 px refinement.
    let margin = p_min as f64;
    let coarse = search(
        img,
        grid(margin, w as f64 - 1.0 - margin, margin, h as f64 - 1.0 - margin, cfg.stride, w, h).into_iter(),
        p_min,
        p_max,
        &kernel,
        cfg,
        |_| true,
    );
    let coarse = match coarse {
        Some(c) if c.response > cfg.response_floor => c,
        other => {
            return Err(IrisError::LocalizationFailed {
                best: other.map(|c| c.response).unwrap_or(0.0),
                floor: cfg.response_floor,
            })
        }
    };
    let s = cfg.stride as f64;
    let pupil = search(
        img,
        grid(coarse.center.0 - s, coarse.center.0 + s, coarse.center.1 - s, coarse.center.1 + s, 1, w, h).into_iter(),
        coarse.radius.saturating_sub(2).max(p_min),
        (coarse.radius + 2).min(p_max),
        &kernel,
        cfg,
        |_| true,
    )
    .expect("refinement window contains the coarse candidate");

    let (px, py, pr) = subpixel_refine(img, &pupil, &kernel, cfg);

    // Iris stage: centers near the pupil center, larger radii, pupil circle
    // strictly inside.
    let inside = |c: &Candidate| {
        let dx = c.center.0 - px;
        let dy = c.center.1 - py;
        (dx * dx + dy * dy).sqrt() + pr < c.radius as f64
    };
    let coarse_iris = search(
        img,
        grid(px - 10.0, px + 10.0, py - 10.0, py + 10.0, cfg.stride, w, h).into_iter(),
        i_min,
        i_max,
        &kernel,
        cfg,
        &inside,
    );
    let coarse_iris = match coarse_iris {
        Some(c) if c.response > cfg.response_floor => c,
        other => {
            return Err(IrisError::LocalizationFailed {
                best: other.map(|c| c.response).unwrap_or(0.0),
                floor: cfg.response_floor,
            })
        }
    };
    let iris = search(
        img,
        grid(
            coarse_iris.center.0 - s,
            coarse_iris.center.0 + s,
            coarse_iris.center.1 - s,
            coarse_iris.center.1 + s,
            1,
            w,
            h,
        )
        .into_iter(),
        coarse_iris.radius.saturating_sub(2).max(i_min),
        (coarse_iris.radius + 2).min(i_max),
        &kernel,
        cfg,
        &inside,
    )
    .expect("refinement window contains the coarse candidate");
    let (ix, iy, ir) = subpixel_refine(img, &iris, &kernel, cfg);

    // Visibility of the iris contour.
    let mut usable = 0usize;
    for a in 0..cfg.angular_samples {
        let theta = 2.0 * PI * a as f64 / cfg.angular_samples as f64;
        if cfg.exclusion_arcs.contains(theta) {
            continue;
        }
        let x = ix + ir * theta.cos();
        let y = iy + ir * theta.sin();
        if img.sample_bilinear(x, y).is_some() {
            usable += 1;
        }
    }
    let visible_fraction = usable as f64 / cfg.angular_samples as f64;
    // Count-based half test: the default arcs exclude exactly half of the
    // contour positions, so a fully in-frame iris sits exactly at 0.5 and
    // passes; any clipping below that rejects.
    if usable * 2 < cfg.angular_samples {
        return Err(IrisError::VisibilityRejected {
            visible: visible_fraction,
        });
    }

    Ok(IrisGeometry {
        pupil_center: (px, py),
        pupil_radius: pr,
        iris_center: (ix, iy),
        iris_radius: ir,
        visible_fraction,
    })
}
