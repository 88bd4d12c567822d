//! Sweep configuration file. Every key is optional; missing keys take the
//! defaults shown by `tam sweep --print-config`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tam_core::algorithms::{
    TamParams, DEFAULT_BETA, DEFAULT_DELTA, DEFAULT_GAMMA, DEFAULT_SAMPLE_CONSTANT, DEFAULT_TEST_FRACTION,
};
use tam_core::instances::CorruptionKind;

use crate::sweep::{SweepSpec, Variant};
use crate::{BenchError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub n: usize,
    pub seeds: Vec<u64>,
    pub alphas: Vec<f64>,
    /// `add` (union with a random type) or `replace`.
    pub kinds: Vec<String>,
    pub variants: Vec<String>,
    pub beta: f64,
    /// Fixed ε; when absent each run uses `n̂/n − β`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub delta: f64,
    pub sample_constant: f64,
    pub gamma: f64,
    pub test_fraction: f64,
    /// When false every row gets `wall_time_ms = 0`, making the CSV
    /// byte-reproducible.
    pub record_wall_time: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            n: 2000,
            seeds: (0..10).collect(),
            alphas: (0..=10).map(|i| i as f64 / 10.0).collect(),
            kinds: vec!["add".into(), "replace".into()],
            variants: Variant::DEFAULT_NAMES.iter().map(|s| s.to_string()).collect(),
            beta: DEFAULT_BETA,
            epsilon: None,
            delta: DEFAULT_DELTA,
            sample_constant: DEFAULT_SAMPLE_CONSTANT,
            gamma: DEFAULT_GAMMA,
            test_fraction: DEFAULT_TEST_FRACTION,
            record_wall_time: true,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn params(&self) -> TamParams {
        TamParams {
            beta: self.beta,
            epsilon: self.epsilon,
            delta: self.delta,
            sample_constant: self.sample_constant,
            gamma: self.gamma,
            test_fraction: self.test_fraction,
        }
    }

    /// Checks value ranges and resolves names.
    pub fn to_spec(&self) -> Result<SweepSpec> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if !(0.0..1.0).contains(&self.beta) {
            return bad(format!("beta = {} outside [0, 1)", self.beta));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return bad(format!("epsilon = {e} must be positive"));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} outside (0, 1)", self.delta));
        }
        if !(self.sample_constant > 0.0 && self.sample_constant.is_finite()) {
            return bad(format!("sample_constant = {} must be positive", self.sample_constant));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma = {} outside (0, 1]", self.gamma));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction <= self.gamma) {
            return bad(format!("test_fraction = {} outside (0, gamma]", self.test_fraction));
        }
        let kinds = self
            .kinds
            .iter()
            .map(|k| k.parse::<CorruptionKind>().map_err(|e| BenchError::Config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let variants = self.variants.iter().map(|v| Variant::by_name(v)).collect::<Result<Vec<_>>>()?;
        let spec = SweepSpec {
            n: self.n,
            seeds: self.seeds.clone(),
            alphas: self.alphas.clone(),
            kinds,
            variants,
            params: self.params(),
            record_wall_time: self.record_wall_time,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = Config::default();
        assert_eq!(Config::parse(&c.to_toml()).unwrap(), c);
        let spec = c.to_spec().unwrap();
        assert_eq!(spec.cells(), 2 * 11 * 10);
        assert_eq!(spec.variants.len(), 6);
    }

    #[test]
    fn partial_file_takes_defaults() {
        let c = Config::parse("n = 100\nseeds = [3]\n").unwrap();
        assert_eq!(c.n, 100);
        assert_eq!(c.seeds, vec![3]);
        assert_eq!(c.alphas.len(), 11);
    }

    #[test]
    fn schema_errors() {
        assert!(Config::parse("nn = 5").is_err());
        assert!(Config::parse("n = \"big\"").is_err());
        let bad = [
            "seeds = []",
            "alphas = [1.5]",
            "kinds = [\"sideways\"]",
            "variants = [\"Ranking\", \"Ranking\"]",
            "variants = [\"Oracle\"]",
            "n = 3",
            "delta = 0.0",
            "test_fraction = 0.9",
        ];
        for text in bad {
            assert!(Config::parse(text).unwrap().to_spec().is_err(), "{text}");
        }
    }

    #[test]
    fn fixed_epsilon_is_kept() {
        let c = Config::parse("epsilon = 0.25").unwrap();
        assert_eq!(c.params().epsilon, Some(0.25));
        assert!(c.to_toml().contains("epsilon = 0.25"));
    }
}
