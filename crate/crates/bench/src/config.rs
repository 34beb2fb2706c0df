use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use smm_core::lti::{g1, g2, LtiSystem, NoiseModel};

use crate::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Fig1a,
    Fig1b,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6a,
    Fig6b,
    Fig7,
    Fig8,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 10] = [
        ExperimentId::Fig1a,
        ExperimentId::Fig1b,
        ExperimentId::Fig2,
        ExperimentId::Fig3,
        ExperimentId::Fig4,
        ExperimentId::Fig5,
        ExperimentId::Fig6a,
        ExperimentId::Fig6b,
        ExperimentId::Fig7,
        ExperimentId::Fig8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Fig1a => "fig1a",
            ExperimentId::Fig1b => "fig1b",
            ExperimentId::Fig2 => "fig2",
            ExperimentId::Fig3 => "fig3",
            ExperimentId::Fig4 => "fig4",
            ExperimentId::Fig5 => "fig5",
            ExperimentId::Fig6a => "fig6a",
            ExperimentId::Fig6b => "fig6b",
            ExperimentId::Fig7 => "fig7",
            ExperimentId::Fig8 => "fig8",
        }
    }

    pub fn is_identification(self) -> bool {
        matches!(self, ExperimentId::Fig1a | ExperimentId::Fig1b | ExperimentId::Fig2 | ExperimentId::Fig3)
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown experiment `{s}`")))
    }
}

/// Plant used to generate data: a built-in test system or a recorded trajectory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SystemSpec {
    G1,
    G2,
    Csv(PathBuf),
}

impl SystemSpec {
    /// The state-space model, when one is known.
    pub fn model(&self) -> Option<LtiSystem> {
        match self {
            SystemSpec::G1 => Some(g1()),
            SystemSpec::G2 => Some(g2()),
            SystemSpec::Csv(_) => None,
        }
    }
}

impl FromStr for SystemSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "g1" => Ok(SystemSpec::G1),
            "g2" => Ok(SystemSpec::G2),
            _ => match s.strip_prefix("csv:") {
                Some(path) if !path.is_empty() => Ok(SystemSpec::Csv(PathBuf::from(path))),
                _ => Err(BenchError::Config(format!("unknown system `{s}`, expected g1, g2 or csv:<path>"))),
            },
        }
    }
}

impl TryFrom<String> for SystemSpec {
    type Error = BenchError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SystemSpec> for String {
    fn from(s: SystemSpec) -> String {
        s.to_string()
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemSpec::G1 => f.write_str("g1"),
            SystemSpec::G2 => f.write_str("g2"),
            SystemSpec::Csv(p) => write!(f, "csv:{}", p.display()),
        }
    }
}

/// Everything needed to rerun an experiment.
///
/// Sweep fields (`n_data`, `noise`) hold a single entry for experiments that
/// do not sweep. Identification experiments read `lp` as the FIR length `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub system: SystemSpec,
    pub n_data: Vec<usize>,
    pub l0: usize,
    pub lp: usize,
    pub noise: Vec<NoiseModel>,
    pub runs: usize,
    pub base_seed: u64,
    /// Closed-loop steps per run.
    pub steps: usize,
    pub lambda_g_grid: Vec<f64>,
    pub lambda_y: f64,
    /// Compress the data matrices before closed-loop control.
    pub compress: bool,
    pub out_dir: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 2021;

/// Nine logarithmically spaced values from 10 to 1000.
pub fn default_lambda_g_grid() -> Vec<f64> {
    (0..9).map(|k| 10f64.powf(1.0 + k as f64 / 4.0)).collect()
}

fn both(level: f64) -> NoiseModel {
    NoiseModel { sigma2: level, sigma_p2: level }
}

impl ExperimentConfig {
    pub fn defaults(id: ExperimentId) -> Self {
        let ident = |system, sigma2| Self {
            experiment: id,
            system,
            n_data: vec![50],
            l0: 4,
            lp: 11,
            noise: vec![NoiseModel { sigma2, sigma_p2: 0.0 }],
            runs: 100,
            base_seed: DEFAULT_SEED,
            steps: 0,
            lambda_g_grid: Vec::new(),
            lambda_y: 0.0,
            compress: false,
            out_dir: None,
        };
        let control = Self {
            experiment: id,
            system: SystemSpec::G1,
            n_data: vec![200],
            l0: 4,
            lp: 11,
            noise: vec![both(1.0)],
            runs: 100,
            base_seed: DEFAULT_SEED,
            steps: 60,
            lambda_g_grid: default_lambda_g_grid(),
            lambda_y: 1000.0,
            compress: true,
            out_dir: None,
        };
        let sweep = || [0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0].into_iter().map(both).collect();
        match id {
            ExperimentId::Fig1a => Self { runs: 1, ..ident(SystemSpec::G1, 0.0) },
            ExperimentId::Fig1b | ExperimentId::Fig3 => ident(SystemSpec::G1, 0.01),
            ExperimentId::Fig2 => ident(SystemSpec::G2, 0.01),
            ExperimentId::Fig4 | ExperimentId::Fig5 => control,
            ExperimentId::Fig6a => Self { n_data: vec![50, 100, 200, 400, 600, 800, 1000], ..control },
            ExperimentId::Fig6b | ExperimentId::Fig7 => Self { noise: sweep(), ..control },
            ExperimentId::Fig8 => Self {
                n_data: vec![100, 200, 400, 800, 1600],
                runs: 10,
                lambda_g_grid: Vec::new(),
                ..control
            },
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: &str| Err(BenchError::Config(format!("{}: {msg}", self.experiment)));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.n_data.is_empty() || self.noise.is_empty() {
            return bad("sweep lists must be nonempty");
        }
        if self.lp == 0 {
            return bad("horizon must be positive");
        }
        if self.noise.iter().any(|n| !(n.sigma2 >= 0.0 && n.sigma_p2 >= 0.0)) {
            return bad("noise variances must be nonnegative");
        }
        if self.system.model().is_none() {
            return bad("experiments need a known system to score against");
        }
        if !self.experiment.is_identification() {
            if self.steps == 0 {
                return bad("closed-loop steps must be positive");
            }
            let needs_grid = matches!(
                self.experiment,
                ExperimentId::Fig4 | ExperimentId::Fig5 | ExperimentId::Fig6a | ExperimentId::Fig6b | ExperimentId::Fig7
            );
            if needs_grid && (self.lambda_g_grid.is_empty() || self.lambda_g_grid.iter().any(|l| !(*l > 0.0))) {
                return bad("lambda_g grid must be nonempty and positive");
            }
            if needs_grid && !(self.lambda_y > 0.0) {
                return bad("lambda_y must be positive");
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn seed_for_run(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        for id in ExperimentId::ALL {
            let c = ExperimentConfig::defaults(id);
            c.validate().unwrap();
            let json = serde_json::to_string(&c).unwrap();
            let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.hash(), c.hash());
            assert_eq!(id.name().parse::<ExperimentId>().unwrap(), id);
        }
    }

    #[test]
    fn every_field_changes_the_hash() {
        let base = ExperimentConfig::defaults(ExperimentId::Fig5);
        let variants = [
            ExperimentConfig { experiment: ExperimentId::Fig4, ..base.clone() },
            ExperimentConfig { system: SystemSpec::G2, ..base.clone() },
            ExperimentConfig { n_data: vec![201], ..base.clone() },
            ExperimentConfig { l0: 5, ..base.clone() },
            ExperimentConfig { lp: 12, ..base.clone() },
            ExperimentConfig { noise: vec![both(0.5)], ..base.clone() },
            ExperimentConfig { runs: 99, ..base.clone() },
            ExperimentConfig { base_seed: 1, ..base.clone() },
            ExperimentConfig { steps: 61, ..base.clone() },
            ExperimentConfig { lambda_g_grid: vec![10.0], ..base.clone() },
            ExperimentConfig { lambda_y: 999.0, ..base.clone() },
            ExperimentConfig { compress: false, ..base.clone() },
            ExperimentConfig { out_dir: Some("x".into()), ..base.clone() },
        ];
        for v in variants {
            assert_ne!(v.hash(), base.hash(), "{v:?}");
        }
    }

    #[test]
    fn lambda_grid_spans_two_decades() {
        let g = default_lambda_g_grid();
        assert_eq!(g.len(), 9);
        assert!((g[0] - 10.0).abs() < 1e-12 && (g[8] - 1000.0).abs() < 1e-9);
        assert!((g[4] - 100.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = ExperimentConfig::defaults(ExperimentId::Fig5);
        assert!(ExperimentConfig { runs: 0, ..base.clone() }.validate().is_err());
        assert!(ExperimentConfig { noise: vec![], ..base.clone() }.validate().is_err());
        assert!(ExperimentConfig { lambda_y: 0.0, ..base.clone() }.validate().is_err());
        assert!(ExperimentConfig { system: SystemSpec::Csv("d.csv".into()), ..base }.validate().is_err());
        assert!("csv:".parse::<SystemSpec>().is_err());
        assert_eq!("csv:a/b.csv".parse::<SystemSpec>().unwrap().to_string(), "csv:a/b.csv");
    }
}
