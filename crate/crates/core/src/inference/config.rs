use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::metrics::{tune_epsilon, PseudoLikelihoodParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "abc-rej")]
    AbcRej,
    #[serde(rename = "abc-rw")]
    AbcRw,
    #[serde(rename = "abc-pt")]
    AbcPt,
    #[serde(rename = "mcmc")]
    Mcmc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Self::AbcRej, Self::AbcRw, Self::AbcPt, Self::Mcmc];

    pub fn name(self) -> &'static str {
        match self {
            Self::AbcRej => "abc-rej",
            Self::AbcRw => "abc-rw",
            Self::AbcPt => "abc-pt",
            Self::Mcmc => "mcmc",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown algorithm {s:?} (expected abc-rej, abc-rw, abc-pt or mcmc)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    #[default]
    PosteriorMean,
    /// Retained particle with the highest score (pseudo-likelihood for the
    /// ABC samplers, exact likelihood for the baseline).
    Map,
}

/// What the next timestep's motion prior is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorMode {
    /// Propagate the previous point estimate only.
    #[default]
    PointEstimate,
    /// Propagate a uniformly chosen member of the previous particle
    /// population.
    Population,
}

/// ABC tolerance, either fixed or tuned from the network.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Tolerance {
    #[default]
    Auto,
    Fixed(f64),
}

impl Tolerance {
    pub fn resolve(self, n_sensors: usize, n_targets: usize, p_e: f64) -> f64 {
        match self {
            Self::Auto => tune_epsilon(n_sensors, n_targets, p_e),
            Self::Fixed(eps) => eps,
        }
    }
}

/// Tolerances of the tempering chains, coldest first.
#[derive(Debug, Clone, PartialEq)]
pub enum Ladder {
    /// `eps * ratio^k` for chain `k`.
    Geometric(f64),
    Explicit(Vec<f64>),
}

impl Default for Ladder {
    fn default() -> Self {
        Self::Geometric(2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Proposals per timestep (chain length for the MCMC samplers).
    pub n_particles: usize,
    pub epsilon: Tolerance,
    pub pseudo: PseudoLikelihoodParams,
    pub n_chains: usize,
    pub ladder: Ladder,
    /// Defaults to every adjacent pair once per sweep.
    pub swap_pairs_per_sweep: Option<usize>,
    /// Leading fraction of each chain discarded before estimating.
    pub burn_in: f64,
    pub estimator: EstimateMode,
    pub prior: PriorMode,
    /// Radius of the uniform position prior around the true start.
    pub init_radius: f64,
    pub init_velocity_sd: f64,
    pub seed: u64,
    /// Evaluate rejection proposals and tempering chains on the rayon pool.
    pub parallel: bool,
    /// Keep per-proposal and per-swap records in the step output.
    pub record: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_particles: 300,
            epsilon: Tolerance::Auto,
            pseudo: PseudoLikelihoodParams::default(),
            n_chains: 5,
            ladder: Ladder::default(),
            swap_pairs_per_sweep: None,
            burn_in: 0.5,
            estimator: EstimateMode::PosteriorMean,
            prior: PriorMode::default(),
            init_radius: 10.0,
            init_velocity_sd: 0.5,
            seed: 0,
            parallel: true,
            record: false,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::Config("n_particles must be at least 1".into()));
        }
        if let Tolerance::Fixed(eps) = self.epsilon {
            if eps.is_nan() || eps < 0.0 {
                return Err(Error::Config(format!("epsilon must be non-negative, got {eps}")));
            }
        }
        self.pseudo.validate()?;
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::Config(format!("burn_in must lie in [0, 1), got {}", self.burn_in)));
        }
        if !(self.init_radius >= 0.0 && self.init_radius.is_finite()) {
            return Err(Error::Config("init_radius must be finite and non-negative".into()));
        }
        if !(self.init_velocity_sd > 0.0 && self.init_velocity_sd.is_finite()) {
            return Err(Error::Config("init_velocity_sd must be positive".into()));
        }
        Ok(())
    }

    /// Validates the tempering-specific fields and returns the resolved ladder.
    pub fn resolve_ladder(&self, epsilon: f64) -> Result<Vec<f64>> {
        if self.n_chains < 2 {
            return Err(Error::Config(format!(
                "tempering needs at least 2 chains, got {}",
                self.n_chains
            )));
        }
        let ladder = match &self.ladder {
            Ladder::Geometric(ratio) => {
                if ratio.is_nan() || *ratio <= 1.0 {
                    return Err(Error::Config(format!("ladder ratio must exceed 1, got {ratio}")));
                }
                (0..self.n_chains)
                    .map(|k| epsilon * ratio.powi(k as i32))
                    .collect::<Vec<_>>()
            }
            Ladder::Explicit(values) => {
                if values.len() != self.n_chains {
                    return Err(Error::Config(format!(
                        "epsilon_ladder has {} entries but n_chains is {}",
                        values.len(),
                        self.n_chains
                    )));
                }
                if values[0] != epsilon {
                    return Err(Error::Config(format!(
                        "epsilon_ladder[0] = {} must equal epsilon = {epsilon}",
                        values[0]
                    )));
                }
                values.clone()
            }
        };
        if ladder.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::Config(format!(
                "epsilon_ladder must be strictly increasing, got {ladder:?}"
            )));
        }
        if let Some(k) = self.swap_pairs_per_sweep {
            if k == 0 {
                return Err(Error::Config("swap_pairs_per_sweep must be positive".into()));
            }
        }
        Ok(ladder)
    }
}
