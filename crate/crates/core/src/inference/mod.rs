//! Samplers producing one particle set and point estimate per timestep.
//!
//! All samplers propose from a motion prior built either around the
//! previous point estimate or from the previous particle population. One particle is a full joint state of every target, so no
//! measurement-to-target association is ever formed.

mod baseline;
mod chain;
mod config;
mod log;
mod prior;
mod rejection;
mod tempering;
mod track;
mod walk;

pub use baseline::{exact_likelihood, log_exact_likelihood, mcmc_baseline_step};
pub use chain::{metropolis_independence, IndependenceChain};
pub use config::{Algorithm, EstimateMode, Ladder, PriorMode, SamplerConfig, Tolerance};
pub use log::{write_particle_log, write_swap_log, ProposalRecord, SwapRecord};
pub use prior::{prior_sample, Prior};
pub use rejection::abc_rej_step;
pub use tempering::abc_pt_step;
pub use track::{initial_chain_state, initial_prior, track, track_with_epsilon};
pub use walk::abc_rw_step;

use serde::{Deserialize, Serialize};

use crate::TargetState;

/// Retained draws of one timestep with acceptance bookkeeping.
///
/// For the rejection sampler `particles` are exactly the accepted
/// proposals. For the chain samplers they are the post-burn-in chain
/// states, so repeated (held) states appear more than once and
/// `accepted_count` counts accepted moves.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub timestep: usize,
    pub particles: Vec<TargetState>,
    pub proposed_count: usize,
    pub accepted_count: usize,
}

impl ParticleSet {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed_count == 0 {
            0.0
        } else {
            self.accepted_count as f64 / self.proposed_count as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub state: TargetState,
    pub mode: EstimateMode,
}

impl Estimate {
    pub fn new(state: TargetState, mode: EstimateMode) -> Self {
        Self { state, mode }
    }
}

/// Output of one sampler step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub particles: ParticleSet,
    pub estimate: Estimate,
    /// No proposal was accepted (rejection) or the chain never entered the
    /// tolerated set; the estimate is the prior mean extrapolation.
    pub fallback: bool,
    /// Draws the next population prior is built from: the tolerated
    /// retained states, or every proposal after a fallback.
    pub population: Vec<TargetState>,
    pub proposals: Vec<ProposalRecord>,
    pub swaps: Vec<SwapRecord>,
}

/// Point estimate from retained particles with their scores.
pub(crate) fn point_estimate(
    particles: &[TargetState],
    scores: &[f64],
    mode: EstimateMode,
) -> Option<TargetState> {
    match mode {
        EstimateMode::PosteriorMean => TargetState::mean(particles),
        EstimateMode::Map => {
            let mut best: Option<(usize, f64)> = None;
            for (i, &s) in scores.iter().enumerate() {
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((i, s));
                }
            }
            best.map(|(i, _)| particles[i].clone())
        }
    }
}

/// Proposals at the smallest distance to the observation.
pub(crate) fn nearest(candidates: Vec<(TargetState, f64)>) -> Vec<TargetState> {
    let best = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    candidates
        .into_iter()
        .filter(|c| c.1 <= best)
        .map(|c| c.0)
        .collect()
}

/// Number of leading chain states dropped for a burn-in fraction.
pub(crate) fn burn_in_len(chain_len: usize, fraction: f64) -> usize {
    let drop = (chain_len as f64 * fraction).floor() as usize;
    drop.min(chain_len.saturating_sub(1))
}
