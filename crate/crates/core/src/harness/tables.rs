//! CSV/JSON/PNG artifacts of an experiment report.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::imagekit;
use crate::iris::DECISION_THRESHOLD;
use crate::transforms::TransformDomain;

use super::{CellRecord, ExperimentReport, HarnessError};

fn fmt_fraction(f: f64) -> String {
    format!("{}", (f * 1000.0).round() / 1000.0)
}

fn fmt_psnr(db: Option<f64>) -> String {
    match db {
        Some(v) => format!("{v:.2}"),
        None => "inf".into(),
    }
}

// Records of one (domain, fraction) column cell.
fn cell<'a>(
    records: &'a [CellRecord],
    domain: TransformDomain,
    fraction: f64,
) -> impl Iterator<Item = &'a CellRecord> {
    records
        .iter()
        .filter(move |r| r.domain == domain && r.fraction == fraction)
}

// Mean PSNR over images; any infinite cell makes the mean infinite.
fn mean_psnr(records: &[CellRecord], domain: TransformDomain, fraction: f64) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for r in cell(records, domain, fraction) {
        match r.psnr_db {
            Some(v) => sum += v,
            None => return None,
        }
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

// Mean hd over images with pipeline failures counted as 1.0.
fn mean_hd(records: &[CellRecord], domain: TransformDomain, fraction: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for r in cell(records, domain, fraction) {
        sum += r.hd.unwrap_or(1.0);
        n += 1;
    }
    if n == 0 {
        1.0
    } else {
        sum / n as f64
    }
}

fn label_dir(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Writes `psnr.csv`, `decisions.csv`, `hd_curve.csv`, `report.json` and the
/// per-cell reconstructions under `recon/<label>/<domain>_f<permille>.png`.
///
/// The aggregate tables mirror the report: `psnr.csv` rows are domains and
/// columns fractions (mean over images, `inf` for lossless cells);
/// `decisions.csv` applies the 0.36 threshold to the mean Hamming distance
/// of each cell, counting failed pipelines as distance 1.
pub fn emit_tables(report: &ExperimentReport, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let fractions: Vec<f64> = {
        let mut seen = BTreeSet::new();
        report
            .records
            .iter()
            .map(|r| r.fraction)
            .filter(|&f| seen.insert(f.to_bits()))
            .collect()
    };
    let domains: Vec<TransformDomain> = {
        let mut seen = BTreeSet::new();
        report
            .records
            .iter()
            .map(|r| r.domain)
            .filter(|&d| seen.insert(d.name()))
            .collect()
    };

    let header = {
        let mut h = "domain".to_string();
        for &f in &fractions {
            h.push(',');
            h.push_str(&fmt_fraction(f));
        }
        h.push('\n');
        h
    };

    let mut psnr_csv = header.clone();
    let mut decisions_csv = header;
    for &d in &domains {
        psnr_csv.push_str(d.name());
        decisions_csv.push_str(d.name());
        for &f in &fractions {
            psnr_csv.push(',');
            psnr_csv.push_str(&fmt_psnr(mean_psnr(&report.records, d, f)));
            decisions_csv.push(',');
            decisions_csv.push_str(if mean_hd(&report.records, d, f) < DECISION_THRESHOLD {
                "PASS"
            } else {
                "FAIL"
            });
        }
        psnr_csv.push('\n');
        decisions_csv.push('\n');
    }
    fs::write(dir.join("psnr.csv"), psnr_csv)?;
    fs::write(dir.join("decisions.csv"), decisions_csv)?;

    let mut hd_csv = String::from("label,domain,fraction,hd\n");
    for r in &report.records {
        let hd = r.hd.map(|v| format!("{v:.6}")).unwrap_or_default();
        hd_csv.push_str(&format!(
            "{},{},{},{hd}\n",
            r.label,
            r.domain.name(),
            fmt_fraction(r.fraction)
        ));
    }
    fs::write(dir.join("hd_curve.csv"), hd_csv)?;

    let json = serde_json::to_vec_pretty(report)?;
    fs::write(dir.join("report.json"), json)?;

    for r in &report.records {
        let subdir = dir.join("recon").join(label_dir(&r.label));
        fs::create_dir_all(&subdir)?;
        let name = format!(
            "{}_f{:03}.png",
            r.domain.name(),
            (r.fraction * 1000.0).round() as u32
        );
        imagekit::save_image(&r.recon, &subdir.join(name))?;
    }
    Ok(())
}
