//! Experiment configuration files.
//!
//! A config is a TOML document with top-level run keys and `[grid]`, `[cone]`,
//! `[model]`, `[checks]` and `[oracle]` sections. A run manifest (JSON with a
//! `config` member) is accepted in its place, which makes every manifest
//! re-runnable.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chain::{ChainModel, ModelSpec};
use crate::cone::{Cone, ConeSpec};
use crate::error::{Error, Result};
use crate::mc::NGrid;
use crate::oracle::DEFAULT_MEMORY_CAP_BYTES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every core. Never affects results.
    #[serde(default = "default_threads", skip_serializing)]
    pub threads: usize,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub x0: Vec<f64>,
    pub paths: u64,
    pub grid: GridSpec,
    pub cone: ConeSpec,
    pub model: ModelSpec,
    #[serde(default)]
    pub checks: CheckParams,
    #[serde(default)]
    pub oracle: OracleParams,
}

fn default_threads() -> usize {
    1
}

/// Checkpoints, either dyadic exponents `2^n_from ..= 2^n_to` or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_from: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_to: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<u64>>,
}

impl GridSpec {
    pub fn dyadic(n_from: u32, n_to: u32) -> Self {
        Self {
            n_from: Some(n_from),
            n_to: Some(n_to),
            n: None,
        }
    }

    pub fn build(&self) -> Result<NGrid> {
        match (self.n_from, self.n_to, &self.n) {
            (Some(a), Some(b), None) => {
                if a > b || b > 62 {
                    return Err(Error::InvalidConfig(format!("bad dyadic range {a}..={b}")));
                }
                NGrid::dyadic(a, b)
            }
            (None, None, Some(n)) => NGrid::new(n.clone()),
            _ => Err(Error::InvalidConfig(
                "grid needs either n_from and n_to, or n".into(),
            )),
        }
        .map_err(|e| match e {
            Error::InvalidArgument(m) => Error::InvalidConfig(m),
            other => other,
        })
    }
}

/// Parameters of the individual checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckParams {
    /// Horizon for the conditional-limit, boundary-layer and truncated-mass checks.
    pub n: u64,
    pub n_min: u64,
    pub slope_tol: f64,
    pub kappa_starts: Vec<Vec<f64>>,
    pub kappa_tol: f64,
    pub kappa_reference_tol: f64,
    pub survivors: usize,
    pub bins: usize,
    pub tv_max: f64,
    pub tv_floor_max: f64,
    pub epsilons: Vec<f64>,
    pub grid_step: f64,
    pub q_min: f64,
    pub fuk_n: Vec<u64>,
    pub z_multiples: Vec<f64>,
    pub y_multiples: Vec<f64>,
    /// Absolute truncation levels added to the `y` grid.
    pub y_extra: Vec<f64>,
    /// Boundary distances of the `f`-envelope points.
    pub f_distances: Vec<f64>,
    /// Ray direction for the `f`-envelope points; the cone axis when empty.
    pub ray: Vec<f64>,
    pub f_samples: u64,
    pub a_grid: Vec<f64>,
    /// `R` in `u(x + R x₀)`.
    pub shift: f64,
    pub tail_max: f64,
    pub moment_samples: usize,
    pub harmonic_h: f64,
    pub harmonic_tol: f64,
}

impl Default for CheckParams {
    fn default() -> Self {
        Self {
            n: 4096,
            n_min: 1,
            slope_tol: 0.02,
            kappa_starts: Vec::new(),
            kappa_tol: 0.05,
            kappa_reference_tol: 0.02,
            survivors: 100_000,
            bins: 20,
            tv_max: 0.05,
            tv_floor_max: 0.02,
            epsilons: vec![1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0],
            grid_step: 1.0,
            q_min: 0.8,
            fuk_n: vec![100, 1000],
            z_multiples: vec![1.0, 2.0, 4.0, 6.0],
            y_multiples: vec![0.25, 0.5, 1.0],
            y_extra: vec![0.5],
            f_distances: vec![8.0, 16.0, 32.0, 64.0],
            ray: Vec::new(),
            f_samples: 1_000_000,
            a_grid: vec![0.0, 1.0, 2.0, 3.0, 10.0],
            shift: 10.0,
            tail_max: 1e-4,
            moment_samples: 1_000_000,
            harmonic_h: 0.1,
            harmonic_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    pub n_max: usize,
    pub memory_cap_bytes: u64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            n_max: 20,
            memory_cap_bytes: DEFAULT_MEMORY_CAP_BYTES as u64,
        }
    }
}

/// A config after validation, with the cone, model and grid built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub cone: Cone,
    pub model: ChainModel,
    pub grid: NGrid,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))
    }

    /// Parses TOML, or JSON when the text is a manifest or a JSON config.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value =
                serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let inner = value.get("config").cloned().unwrap_or(value);
            return serde_json::from_value(inner).map_err(|e| Error::InvalidConfig(e.to_string()));
        }
        Self::from_toml(text)
    }

    /// Reads a config file; returns the parsed config and the raw bytes.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| Error::InvalidConfig(format!("{} is not UTF-8", path.display())))?;
        Ok((Self::parse(text)?, bytes))
    }

    /// Canonical JSON echo: the experiment identity, without runtime-only keys.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    pub fn validate(self) -> Result<Experiment> {
        let invalid = |e: Error| Error::InvalidConfig(e.to_string());
        let cone = Cone::new(self.cone.clone()).map_err(invalid)?;
        let model = ChainModel::new(self.model.clone()).map_err(invalid)?;
        if model.dim() != cone.dim() {
            return Err(Error::InvalidConfig(format!(
                "model dimension {} does not match cone dimension {}",
                model.dim(),
                cone.dim()
            )));
        }
        if self.x0.len() != cone.dim() {
            return Err(Error::InvalidConfig(format!(
                "x0 has {} coordinates, cone has dimension {}",
                self.x0.len(),
                cone.dim()
            )));
        }
        if !cone.contains(&self.x0) {
            return Err(Error::InvalidConfig("x0 not interior".into()));
        }
        if self.paths == 0 {
            return Err(Error::InvalidConfig("paths must be positive".into()));
        }
        let grid = self.grid.build()?;
        let c = &self.checks;
        for (name, empty) in [
            ("checks.epsilons", c.epsilons.is_empty()),
            ("checks.fuk_n", c.fuk_n.is_empty()),
            ("checks.z_multiples", c.z_multiples.is_empty()),
            ("checks.y_multiples", c.y_multiples.is_empty()),
            ("checks.f_distances", c.f_distances.is_empty()),
            ("checks.a_grid", c.a_grid.is_empty()),
        ] {
            if empty {
                return Err(Error::InvalidConfig(format!("{name} must be nonempty")));
            }
        }
        if c.epsilons.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::InvalidConfig("checks.epsilons must lie in (0, 1]".into()));
        }
        if let Some(bad) = c.kappa_starts.iter().find(|x| !cone.contains(x)) {
            return Err(Error::InvalidConfig(format!("kappa start {bad:?} not interior")));
        }
        if !c.ray.is_empty() && c.ray.len() != cone.dim() {
            return Err(Error::InvalidConfig("checks.ray has the wrong dimension".into()));
        }
        Ok(Experiment {
            config: self,
            cone,
            model,
            grid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
x0 = [1.0]
paths = 1000

[grid]
n_from = 0
n_to = 4

[cone]
variant = "half_line"

[model]
variant = "iid_lattice"
dim = 1
"#;

    #[test]
    fn minimal_config_validates() {
        let exp = ExperimentConfig::from_toml(MINIMAL).unwrap().validate().unwrap();
        assert_eq!(exp.grid.values(), &[1, 2, 4, 8, 16]);
        assert_eq!(exp.config.threads, 1);
        assert_eq!(exp.config.checks, CheckParams::default());
    }

    #[test]
    fn seed_is_mandatory() {
        let text = MINIMAL.replace("seed = 7", "");
        assert!(matches!(
            ExperimentConfig::from_toml(&text),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn boundary_start_rejected() {
        let text = MINIMAL.replace("x0 = [1.0]", "x0 = [0.0]");
        let err = ExperimentConfig::from_toml(&text).unwrap().validate().unwrap_err();
        assert_eq!(err, Error::InvalidConfig("x0 not interior".into()));
    }

    #[test]
    fn manifest_echo_round_trips() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let manifest = format!("{{\"config\": {}, \"seed\": 7}}", cfg.echo());
        let back = ExperimentConfig::parse(&manifest).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MINIMAL}\n[checks]\nbogus = 1\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }
}
