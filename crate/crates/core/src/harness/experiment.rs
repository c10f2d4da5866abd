//! The experiment grid: enrollment, per-cell reconstruction and matching.

use serde::Serialize;

use crate::imagekit::{self, GrayImage};
use crate::iris::{
    decide, encode, hamming, localize, normalize, Decision, GaborBank, IrisCode, LocalizerConfig,
};
use crate::recon::{reconstruct, SolverConfig};
use crate::sampling::{generate_mask, measure, mix64};
use crate::transforms::TransformDomain;

use super::{ExperimentConfig, HarnessError};

/// Deterministic per-cell seed.
///
/// The cell identity is hashed with FNV-1a (offset basis
/// `0xcbf29ce484222325`, prime `0x100000001b3`) over, in order: the base
/// seed as 8 little-endian bytes, the image label as UTF-8, one domain id
/// byte (dct = 0, dft = 1), and `round(fraction * 1000)` as 4 little-endian
/// bytes. The digest is finished with the splitmix64 finalizer ([`mix64`])
/// before use as an RNG seed. This derivation is fixed so other
/// implementations can reproduce the masks.
pub fn cell_seed(base_seed: u64, label: &str, domain: TransformDomain, fraction: f64) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    eat(&base_seed.to_le_bytes());
    eat(label.as_bytes());
    eat(&[match domain {
        TransformDomain::Dct => 0u8,
        TransformDomain::Dft => 1u8,
    }]);
    eat(&(((fraction * 1000.0).round()) as u32).to_le_bytes());
    mix64(h)
}

/// One grid cell. `psnr_db` and `hd` are `None` for an infinite PSNR and a
/// failed pipeline respectively; `failure` carries the reason in the latter
/// case and the decision is FAIL.
#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub label: String,
    pub domain: TransformDomain,
    pub fraction: f64,
    pub cell_seed: u64,
    pub psnr_db: Option<f64>,
    pub hd: Option<f64>,
    pub best_shift: Option<isize>,
    pub decision: Decision,
    pub failure: Option<String>,
    pub iterations: usize,
    pub converged: bool,
    /// The reconstruction itself, kept for image dumps but not serialized.
    #[serde(skip)]
    pub recon: GrayImage,
}

/// An image whose fully sampled original failed enrollment.
#[derive(Debug, Clone, Serialize)]
pub struct SkippedImage {
    pub label: String,
    pub reason: String,
}

/// Full experiment output: config echo plus records sorted by
/// (label, domain, fraction) regardless of config list order.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Vec<CellRecord>,
    pub skipped: Vec<SkippedImage>,
}

struct Enrollment {
    label: String,
    image: GrayImage,
    code: IrisCode,
}

fn enroll(
    label: &str,
    image: GrayImage,
    cfg: &ExperimentConfig,
    bank: &GaborBank,
) -> Result<Enrollment, HarnessError> {
    let lcfg = LocalizerConfig::for_dims(image.height(), image.width());
    let geo = localize(&image, &lcfg)?;
    let polar = normalize(&image, &geo, cfg.radial_res, cfg.angular_res, &lcfg.exclusion_arcs);
    let code = encode(&polar, bank)?;
    Ok(Enrollment {
        label: label.to_string(),
        image,
        code,
    })
}

// Reruns the pipeline on a reconstruction and matches against enrollment.
// Any pipeline error becomes Err(reason); the caller records a FAIL.
fn probe(
    rec: &GrayImage,
    enrollment: &Enrollment,
    cfg: &ExperimentConfig,
    bank: &GaborBank,
) -> Result<(f64, isize), String> {
    let lcfg = LocalizerConfig::for_dims(rec.height(), rec.width());
    let geo = localize(rec, &lcfg).map_err(|e| e.to_string())?;
    let polar = normalize(rec, &geo, cfg.radial_res, cfg.angular_res, &lcfg.exclusion_arcs);
    let code = encode(&polar, bank).map_err(|e| e.to_string())?;
    hamming(&enrollment.code, &code, cfg.max_shift).map_err(|e| e.to_string())
}

/// Runs the full grid. Images that fail enrollment are recorded in
/// `skipped` and produce no records; everything else is one record per
/// (image, domain, fraction).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let manifest = imagekit::DatasetManifest::load(&cfg.manifest)?;
    let bank = GaborBank::default_for(cfg.radial_res, cfg.angular_res);

    let mut enrollments = Vec::new();
    let mut skipped = Vec::new();
    for entry in &manifest.entries {
        let image = imagekit::load_image(&entry.path)?;
        match enroll(&entry.label, image, cfg, &bank) {
            Ok(e) => enrollments.push(e),
            Err(e) => skipped.push(SkippedImage {
                label: entry.label.clone(),
                reason: e.to_string(),
            }),
        }
    }

    let mut records = Vec::new();
    for enr in &enrollments {
        for &domain in &cfg.domains {
            for &fraction in &cfg.fractions {
                let seed = cell_seed(cfg.base_seed, &enr.label, domain, fraction);
                let mask = generate_mask(enr.image.height(), enr.image.width(), fraction, seed)?;
                let meas = measure(&enr.image, &mask)?;
                let solver = SolverConfig {
                    domain: Some(domain),
                    ..cfg.solver.clone()
                };
                let (rec, rep) = reconstruct(&meas, &mask, &solver)?;
                let psnr_db = imagekit::psnr(&enr.image, &rec)?.as_db();
                let (hd, best_shift, decision, failure) = match probe(&rec, enr, cfg, &bank) {
                    Ok((hd, shift)) => {
                        let decision = decide(hd).map_err(|e| HarnessError::Config(e.to_string()))?;
                        (Some(hd), Some(shift), decision, None)
                    }
                    Err(reason) => (None, None, Decision::Fail, Some(reason)),
                };
                records.push(CellRecord {
                    label: enr.label.clone(),
                    domain,
                    fraction,
                    cell_seed: seed,
                    psnr_db,
                    hd,
                    best_shift,
                    decision,
                    failure,
                    iterations: rep.iterations,
                    converged: rep.converged,
                    recon: rec,
                });
            }
        }
    }
    records.sort_by(|a, b| {
        a.label
            .cmp(&b.label)
            .then(a.domain.name().cmp(b.domain.name()))
            .then(a.fraction.total_cmp(&b.fraction))
    });
    skipped.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(ExperimentReport {
        config: cfg.clone(),
        records,
        skipped,
    })
}
