use std::path::PathBuf;

use num_complex::Complex64;
use orthomin_core::diagnostics::DEFAULT_RATE_WINDOW;
use orthomin_core::{ComplexVector, SpectrumSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Initial residual: `b = ones, x0 = 0`, or seeded standard complex
/// Gaussian `b` and `x0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum R0Choice {
    #[default]
    Ones,
    SeededRandom { seed: u64 },
}

impl R0Choice {
    /// Right-hand side and initial guess for a `d`-dimensional system.
    pub fn system_vectors(&self, d: usize) -> (ComplexVector, ComplexVector) {
        match *self {
            R0Choice::Ones => (ComplexVector::ones(d), ComplexVector::zeros(d)),
            R0Choice::SeededRandom { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let b = gaussian_vector(&mut rng, d);
                let x0 = gaussian_vector(&mut rng, d);
                (b, x0)
            }
        }
    }
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, d: usize) -> ComplexVector {
    let entries = (0..d)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    ComplexVector::new(entries).expect("d >= 1")
}

fn default_window() -> usize {
    DEFAULT_RATE_WINDOW
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub spectrum: SpectrumSpec,
    pub k_list: Vec<usize>,
    pub iters: usize,
    #[serde(default)]
    pub r0: R0Choice,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.iters < 1 {
            return Err(CliError::Config("iters must be at least 1".into()));
        }
        if self.k_list.is_empty() {
            return Err(CliError::Config("k_list must not be empty".into()));
        }
        if self.k_list.contains(&0) {
            return Err(CliError::Config("every k must be at least 1".into()));
        }
        if self.window < 1 {
            return Err(CliError::Config("window must be at least 1".into()));
        }
        if self.spectrum.dim() < 1 {
            return Err(CliError::Config("spectrum has no eigenvalues".into()));
        }
        self.spectrum.eigenvalues()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
