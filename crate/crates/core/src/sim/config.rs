use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::decode::{Detector, McmcParams, DEFAULT_MPA_ITERATIONS};
use crate::delayest::FbOptions;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub dv: usize,
}

/// Frame geometry: pilot length `S`, data length `N`, maximum delay `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "D")]
    pub d: usize,
}

impl FrameConfig {
    /// Nonzero pilot symbols `P = S - D`.
    pub fn pilot_nonzero(&self) -> usize {
        self.s - self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectorConfig {
    LogMpa {
        #[serde(default = "default_mpa_iterations")]
        iterations: usize,
    },
    Mcmc {
        samples: usize,
        chains: usize,
        mixing: f64,
    },
}

fn default_mpa_iterations() -> usize {
    DEFAULT_MPA_ITERATIONS
}

impl DetectorConfig {
    /// Detector instance; MCMC streams are seeded from `seed`.
    pub fn detector(&self, seed: u64) -> Detector {
        match *self {
            DetectorConfig::LogMpa { iterations } => Detector::LogMpa { iterations },
            DetectorConfig::Mcmc { samples, chains, mixing } => Detector::Mcmc(McmcParams {
                samples,
                chains,
                mixing,
                seed,
            }),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DetectorConfig::LogMpa { iterations } if iterations == 0 => {
                Err(Error::Config("log_mpa needs iterations >= 1".into()))
            }
            DetectorConfig::LogMpa { .. } => Ok(()),
            DetectorConfig::Mcmc { samples, chains, mixing } => McmcParams {
                samples,
                chains,
                mixing,
                seed: 0,
            }
            .validate()
            .map_err(|e| Error::Config(e.to_string())),
        }
    }
}

/// Forward-backward solver settings; the noise level is filled in per SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub lambda: f64,
    pub step_scale: f64,
    pub stop_tol: f64,
    pub max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = FbOptions::default();
        Self {
            lambda: DEFAULT_LAMBDA,
            step_scale: d.step_scale,
            stop_tol: d.stop_tol,
            max_iters: d.max_iters,
        }
    }
}

/// Regularisation weight used by the stock experiment configurations.
pub const DEFAULT_LAMBDA: f64 = 1.0;

impl SolverConfig {
    pub fn options(&self, sigma: f64) -> FbOptions {
        FbOptions {
            lambda: self.lambda,
            sigma,
            step_scale: self.step_scale,
            stop_tol: self.stop_tol,
            max_iters: self.max_iters,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Lasso,
    LeastSquares,
    /// Receiver is told the true delays.
    Genie,
    /// All users transmit with zero delay; no estimation stage.
    Synchronous,
}

impl EstimatorKind {
    pub fn estimates(&self) -> bool {
        matches!(self, EstimatorKind::Lasso | EstimatorKind::LeastSquares)
    }
}

/// A complete Monte-Carlo sweep description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub frame: FrameConfig,
    /// Pilot energies `E`, one sweep dimension (shared by all users).
    pub pilot_energy: Vec<f64>,
    pub channel: ChannelModel,
    pub snr_db: Vec<f64>,
    pub detector: DetectorConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub estimator: EstimatorKind,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    /// Base system (K=4, J=6) with the reference frame S=56, N=224, D=42.
    fn default() -> Self {
        Self {
            system: SystemConfig { k: 4, j: 6, m: 4, dv: 2 },
            frame: FrameConfig { s: 56, n: 224, d: 42 },
            pilot_energy: vec![1.0],
            channel: ChannelModel::Awgn,
            snr_db: (0..=7).map(|i| 2.0 * i as f64).collect(),
            detector: DetectorConfig::LogMpa {
                iterations: DEFAULT_MPA_ITERATIONS,
            },
            solver: SolverConfig::default(),
            estimator: EstimatorKind::Lasso,
            trials: 500,
            seed: 42,
        }
    }
}

impl ExperimentConfig {
    /// Full-size setting: K=12, J=18 on the reference frame S=56, N=224, D=42.
    pub fn paper_scale(mut self) -> Self {
        self.system = SystemConfig { k: 12, j: 18, m: 4, dv: 2 };
        self.frame = FrameConfig { s: 56, n: 224, d: 42 };
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.frame.s <= self.frame.d {
            return bad(format!(
                "pilot length S={} must exceed the maximum delay D={}",
                self.frame.s, self.frame.d
            ));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|v| !v.is_finite()) {
            return bad("snr_db must be a non-empty list of finite values".into());
        }
        if self.pilot_energy.is_empty() || self.pilot_energy.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return bad("pilot_energy must be a non-empty list of positive values".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !self.system.m.is_power_of_two() || self.system.m < 2 {
            return bad(format!("codebook size M={} must be a power of two >= 2", self.system.m));
        }
        self.detector.validate()?;
        self.solver
            .options(1.0)
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}
