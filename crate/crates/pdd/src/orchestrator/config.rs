//! Run configuration: TOML schema, defaults, and validation.
//!
//! A config file is organized in five sections, all optional:
//!
//! ```toml
//! [problem]
//! kind = "kpp"                 # kpp | heat | cva | elliptic
//! domain = [-125.0, 75.0]      # [lo, hi] along the decomposition axis
//! horizon = 1.0                # final time (evolution problems only)
//!
//! [decomposition]
//! subdomains = 4               # p; 1 disables the interface stage
//! time_levels = 11             # estimates per cut, endpoints included
//! interpolation_degree = 4     # default: min(4, time_levels - 1)
//!
//! [monte_carlo]
//! samples = 20000              # trajectories or trees per work unit
//! dt = 1e-3                    # Euler step of the linear path estimator
//! seed = 42
//!
//! [deterministic]
//! dx = 0.1                     # target mesh spacing of the subdomain solves
//! dt = 2e-3                    # Crank-Nicolson step (evolution problems)
//!
//! [run]
//! workers = 4
//! out_dir = "pdd-out"
//! ```
//!
//! [`PddConfig::resolve`] folds the sections, CLI overrides, and defaults
//! into a [`RunSettings`], the flat struct the orchestrator consumes.
//! Fields whose natural default depends on the problem (mesh spacings,
//! step sizes) stay optional in [`RunSettings`] and are resolved by the
//! orchestrator once the preset is known.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::problems::ProblemKind;
use crate::error::{PddError, Result};

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct PddConfig {
    pub problem: ProblemSection,
    pub decomposition: DecompositionSection,
    pub monte_carlo: MonteCarloSection,
    pub deterministic: DeterministicSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: Option<ProblemKind>,
    pub domain: Option<Vec<f64>>,
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecompositionSection {
    pub subdomains: Option<usize>,
    pub time_levels: Option<usize>,
    pub interpolation_degree: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub samples: Option<u64>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeterministicSection {
    pub dx: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub workers: Option<usize>,
    pub out_dir: Option<String>,
}

impl PddConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| PddError::ConfigParse(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| PddError::ConfigParse(format!("{}: {e}", path.display())))
    }

    /// Fold the config into flat run settings, applying defaults.
    pub fn resolve(&self) -> Result<RunSettings> {
        let settings = RunSettings {
            kind: self.problem.kind.unwrap_or(ProblemKind::Kpp),
            domain: self.problem.domain.clone(),
            horizon: self.problem.horizon,
            subdomains: self.decomposition.subdomains.unwrap_or(4),
            time_levels: self.decomposition.time_levels.unwrap_or(11),
            interpolation_degree: self.decomposition.interpolation_degree,
            mc_samples: self.monte_carlo.samples.unwrap_or(4_000),
            mc_dt: self.monte_carlo.dt,
            seed: self.monte_carlo.seed.unwrap_or(0),
            det_dx: self.deterministic.dx,
            det_dt: self.deterministic.dt,
            workers: self.run.workers.unwrap_or_else(default_workers),
        };
        settings.validate()?;
        Ok(settings)
    }

    /// Directory for output files; the CLI may override it.
    pub fn out_dir(&self) -> &str {
        self.run.out_dir.as_deref().unwrap_or("pdd-out")
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Flat, validated inputs of one orchestrated run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSettings {
    pub kind: ProblemKind,
    /// `[lo, hi]` override for the decomposition axis; `None` keeps the
    /// preset default.
    pub domain: Option<Vec<f64>>,
    /// Final-time override for evolution problems.
    pub horizon: Option<f64>,
    /// Number of subdomains `p`; `p = 1` skips the interface stage.
    pub subdomains: usize,
    /// Estimates per cut, counting both endpoints of the level range.
    pub time_levels: usize,
    /// Interface fit degree; default `min(4, time_levels - 1)`.
    pub interpolation_degree: Option<usize>,
    /// Trajectories (linear estimator) or trees (branching) per work unit.
    pub mc_samples: u64,
    /// Euler step of the linear path estimator; problem-dependent default.
    pub mc_dt: Option<f64>,
    pub seed: u64,
    /// Target mesh spacing of the deterministic stage; problem-dependent
    /// default.
    pub det_dx: Option<f64>,
    /// Time step of the deterministic stage; problem-dependent default.
    pub det_dt: Option<f64>,
    pub workers: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        PddConfig::default()
            .resolve()
            .expect("defaults always validate")
    }
}

impl RunSettings {
    pub fn validate(&self) -> Result<()> {
        if self.subdomains == 0 || self.subdomains > 1024 {
            return Err(PddError::Config(format!(
                "subdomains must be between 1 and 1024, got {}",
                self.subdomains
            )));
        }
        if self.time_levels < 2 {
            return Err(PddError::Config(format!(
                "time_levels must be at least 2, got {}",
                self.time_levels
            )));
        }
        if self.mc_samples < 2 {
            return Err(PddError::Config(format!(
                "monte_carlo.samples must be at least 2, got {}",
                self.mc_samples
            )));
        }
        if let Some(deg) = self.interpolation_degree {
            if deg + 1 > self.time_levels {
                return Err(PddError::Config(format!(
                    "interpolation_degree {deg} needs at least {} time levels, got {}",
                    deg + 1,
                    self.time_levels
                )));
            }
        }
        for (name, v) in [
            ("monte_carlo.dt", self.mc_dt),
            ("deterministic.dx", self.det_dx),
            ("deterministic.dt", self.det_dt),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(PddError::Config(format!(
                        "{name} must be positive and finite, got {v}"
                    )));
                }
            }
        }
        if self.workers == 0 || self.workers > 4096 {
            return Err(PddError::Config(format!(
                "workers must be between 1 and 4096, got {}",
                self.workers
            )));
        }
        Ok(())
    }

    pub fn with_subdomains(mut self, p: usize) -> Self {
        self.subdomains = p;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_resolves_to_defaults() {
        let cfg = PddConfig::from_toml_str("").unwrap();
        let run = cfg.resolve().unwrap();
        assert_eq!(run.kind, ProblemKind::Kpp);
        assert_eq!(run.subdomains, 4);
        assert_eq!(run.time_levels, 11);
        assert_eq!(run.mc_samples, 4_000);
        assert_eq!(run.seed, 0);
        assert!(run.domain.is_none());
        assert_eq!(cfg.out_dir(), "pdd-out");
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"
            [problem]
            kind = "cva"
            domain = [-10.0, 10.0]
            horizon = 0.25

            [decomposition]
            subdomains = 8
            time_levels = 6
            interpolation_degree = 3

            [monte_carlo]
            samples = 100000
            dt = 1e-4
            seed = 7

            [deterministic]
            dx = 0.05
            dt = 5e-4

            [run]
            workers = 8
            out_dir = "results"
        "#;
        let cfg = PddConfig::from_toml_str(text).unwrap();
        let run = cfg.resolve().unwrap();
        assert_eq!(run.kind, ProblemKind::Cva);
        assert_eq!(run.subdomains, 8);
        assert_eq!(run.time_levels, 6);
        assert_eq!(run.interpolation_degree, Some(3));
        assert_eq!(run.mc_samples, 100_000);
        assert_eq!(run.mc_dt, Some(1e-4));
        assert_eq!(run.seed, 7);
        assert_eq!(run.det_dx, Some(0.05));
        assert_eq!(run.det_dt, Some(5e-4));
        assert_eq!(run.workers, 8);
        assert_eq!(cfg.out_dir(), "results");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = PddConfig::from_toml_str("[problem]\nkindd = \"kpp\"\n").unwrap_err();
        match err {
            PddError::ConfigParse(msg) => assert!(msg.contains("kindd"), "{msg}"),
            other => panic!("expected ConfigParse, got {other:?}"),
        }
    }

    #[test]
    fn bad_values_fail_validation() {
        let bad = [
            "[decomposition]\nsubdomains = 0\n",
            "[decomposition]\ntime_levels = 1\n",
            "[monte_carlo]\nsamples = 1\n",
            "[monte_carlo]\ndt = -1e-3\n",
            "[run]\nworkers = 0\n",
            "[decomposition]\ntime_levels = 3\ninterpolation_degree = 3\n",
        ];
        for text in bad {
            let cfg = PddConfig::from_toml_str(text).unwrap();
            assert!(cfg.resolve().is_err(), "config should fail: {text}");
        }
    }

    #[test]
    fn unknown_problem_kind_is_a_parse_error() {
        assert!(PddConfig::from_toml_str("[problem]\nkind = \"wave\"\n").is_err());
    }
}
