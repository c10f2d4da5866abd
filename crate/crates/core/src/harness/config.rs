//! Flat INI-style experiment configuration.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::recon::{SolverConfig, SolverMode};
use crate::transforms::TransformDomain;

use super::HarnessError;

/// Everything a run needs. Paths read from a config file are resolved
/// against the file's directory.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub manifest: PathBuf,
    pub output_dir: PathBuf,
    pub fractions: Vec<f64>,
    pub domains: Vec<TransformDomain>,
    pub base_seed: u64,
    /// Per-cell solver settings; the `domain` field is overridden per cell.
    pub solver: SolverConfig,
    pub radial_res: usize,
    pub angular_res: usize,
    pub max_shift: usize,
}

impl ExperimentConfig {
    pub fn new(manifest: PathBuf, output_dir: PathBuf) -> Self {
        Self {
            manifest,
            output_dir,
            fractions: vec![0.10, 0.20, 0.30, 0.40],
            domains: vec![TransformDomain::Dct, TransformDomain::Dft],
            base_seed: 1,
            solver: SolverConfig::default(),
            radial_res: 16,
            angular_res: 240,
            max_shift: 8,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.fractions.is_empty() || self.domains.is_empty() {
            return Err(HarnessError::Config(
                "fractions and domains must be nonempty".into(),
            ));
        }
        for &f in &self.fractions {
            if !(f > 0.0 && f <= 1.0) {
                return Err(HarnessError::Config(format!(
                    "fraction {f} outside (0, 1]"
                )));
            }
        }
        if self.radial_res == 0 || self.angular_res == 0 {
            return Err(HarnessError::Config("polar resolutions must be positive".into()));
        }
        self.solver
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    /// Parses the `[experiment]` / `[solver]` / `[iris]` sections of a flat
    /// `key = value` file. Unknown keys are rejected so typos do not
    /// silently fall back to defaults. `manifest` is required.
    pub fn from_ini(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_ini_str(&text, base)
    }

    pub fn from_ini_str(text: &str, base_dir: &Path) -> Result<Self, HarnessError> {
        let mut manifest: Option<PathBuf> = None;
        let mut cfg = Self::new(PathBuf::new(), base_dir.join("out"));
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split(&['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_ascii_lowercase();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim();
            let err = |msg: String| HarnessError::Config(format!("line {}: {msg}", lineno + 1));
            match (section.as_str(), key.as_str()) {
                ("experiment", "manifest") => manifest = Some(base_dir.join(value)),
                ("experiment", "output_dir") => cfg.output_dir = base_dir.join(value),
                ("experiment", "fractions") => {
                    cfg.fractions = parse_list(value).map_err(err)?;
                }
                ("experiment", "domains") => {
                    cfg.domains = value
                        .split(',')
                        .map(|s| TransformDomain::from_str(s.trim()))
                        .collect::<Result<_, _>>()
                        .map_err(err)?;
                }
                ("experiment", "base_seed") => {
                    cfg.base_seed = value.parse().map_err(|e| err(format!("base_seed: {e}")))?;
                }
                ("solver", "mode") => {
                    cfg.solver.mode = SolverMode::from_str(value).map_err(err)?;
                }
                ("solver", "epsilon") => cfg.solver.epsilon = parse_num(value).map_err(err)?,
                ("solver", "max_iters") => {
                    cfg.solver.max_iters = value.parse().map_err(|e| err(format!("max_iters: {e}")))?;
                }
                ("solver", "step_size") => cfg.solver.step_size = parse_num(value).map_err(err)?,
                ("solver", "tv_smoothing") => {
                    cfg.solver.tv_smoothing = parse_num(value).map_err(err)?;
                }
                ("solver", "threshold_start") => {
                    cfg.solver.threshold_start = parse_num(value).map_err(err)?;
                }
                ("solver", "threshold_decay") => {
                    cfg.solver.threshold_decay = parse_num(value).map_err(err)?;
                }
                ("solver", "convergence_tol") => {
                    cfg.solver.convergence_tol = parse_num(value).map_err(err)?;
                }
                ("iris", "radial_res") => {
                    cfg.radial_res = value.parse().map_err(|e| err(format!("radial_res: {e}")))?;
                }
                ("iris", "angular_res") => {
                    cfg.angular_res = value.parse().map_err(|e| err(format!("angular_res: {e}")))?;
                }
                ("iris", "max_shift") => {
                    cfg.max_shift = value.parse().map_err(|e| err(format!("max_shift: {e}")))?;
                }
                (sec, key) => {
                    return Err(err(format!("unknown key '{key}' in section '[{sec}]'")));
                }
            }
        }
        cfg.manifest = manifest.ok_or_else(|| {
            HarnessError::Config("missing required key 'manifest' in [experiment]".into())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_num(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("'{s}': {e}"))
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let out: Vec<f64> = s
        .split(',')
        .map(|part| parse_num(part.trim()))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}
