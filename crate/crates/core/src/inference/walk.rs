use rand::Rng;

use super::{
    burn_in_len, nearest, point_estimate, Estimate, IndependenceChain, ParticleSet, Prior, ProposalRecord,
    SamplerConfig, StepResult,
};
use crate::metrics::{log_pseudo_likelihood, rho_unchecked};
use crate::model::simulate_counts;
use crate::rng::{substream, StreamRng, DOMAIN_SAMPLER};
use crate::{CountVector, Error, Result, SensorNetwork, TargetState};

/// A chain state with its cached distance and pseudo-likelihood.
#[derive(Debug, Clone)]
pub(crate) struct Scored {
    pub state: TargetState,
    pub rho: f64,
    pub log_f: f64,
    pub log_q: f64,
}

impl Scored {
    pub fn new(
        state: TargetState,
        parent: Option<usize>,
        obs: &CountVector,
        net: &SensorNetwork,
        prior: &Prior,
        cfg: &SamplerConfig,
    ) -> Self {
        let rho = rho_unchecked(simulate_counts(&state, net).as_slice(), obs.as_slice());
        let log_f = log_pseudo_likelihood(&state, prior.reference(parent), &cfg.pseudo)
            .expect("chain states share the target count");
        let log_q = prior.log_density(&state, parent);
        Self {
            state,
            rho,
            log_f,
            log_q,
        }
    }

    /// Importance log-weight of the ABC target `f * 1{rho < eps}` against the
    /// prior proposal.
    pub fn log_weight(&self, epsilon: f64) -> f64 {
        if self.rho < epsilon && self.log_q.is_finite() {
            self.log_f - self.log_q
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// One ABC-MCMC chain at a fixed tolerance.
pub(crate) struct AbcChain {
    pub epsilon: f64,
    pub chain: IndependenceChain<Scored>,
    rng: StreamRng,
}

impl AbcChain {
    pub fn new(index: usize, epsilon: f64, start: Scored, cfg: &SamplerConfig, timestep: usize) -> Self {
        let w = start.log_weight(epsilon);
        Self {
            epsilon,
            chain: IndependenceChain::new(start, w),
            rng: substream(cfg.seed, &[DOMAIN_SAMPLER, timestep as u64, 1 + index as u64]),
        }
    }

    /// Draws a prior proposal and runs the joint tolerance / MH test.
    pub fn local_move(
        &mut self,
        obs: &CountVector,
        prior: &Prior,
        net: &SensorNetwork,
        cfg: &SamplerConfig,
    ) -> (Scored, bool) {
        let (state, parent) = prior.sample_with_parent(&mut self.rng);
        let candidate = Scored::new(state, parent, obs, net, prior, cfg);
        let u: f64 = self.rng.random();
        let w = candidate.log_weight(self.epsilon);
        let accepted = self.chain.offer(candidate.clone(), w, u);
        (candidate, accepted)
    }
}

pub(crate) fn record(timestep: usize, chain: usize, index: usize, s: &Scored, accepted: bool) -> ProposalRecord {
    ProposalRecord {
        timestep,
        chain,
        index,
        accepted,
        state: s.state.clone(),
        rho: s.rho,
        log_score: s.log_f,
    }
}

/// Particle set, estimate, fallback flag and next-step population.
pub(crate) type Summary = (ParticleSet, Estimate, bool, Vec<TargetState>);

/// Summarises a visited-state trace into a particle set and estimate.
///
/// The estimate and the population handed to the next step use only the
/// post-burn-in states satisfying `tolerated`. When there are none, the
/// estimate falls back to the prior mean and the population to the
/// `candidates` nearest the observation.
#[allow(clippy::too_many_arguments)]
pub(crate) fn summarise(
    visited: Vec<Scored>,
    candidates: Vec<(TargetState, f64)>,
    tolerated: impl Fn(&Scored) -> bool,
    prior: &Prior,
    cfg: &SamplerConfig,
    timestep: usize,
    proposed: usize,
    accepted: usize,
) -> Summary {
    let drop = burn_in_len(visited.len(), cfg.burn_in);
    let kept: Vec<Scored> = visited.into_iter().skip(drop).collect();
    let (good, scores): (Vec<TargetState>, Vec<f64>) = kept
        .iter()
        .filter(|s| tolerated(s))
        .map(|s| (s.state.clone(), s.log_f))
        .unzip();
    let particles: Vec<TargetState> = kept.into_iter().map(|s| s.state).collect();
    let (state, fallback, population) = match point_estimate(&good, &scores, cfg.estimator) {
        Some(s) => (s, false, good),
        None => {
            log::warn!("t={timestep}: chain never entered the tolerated set; extrapolating");
            (prior.mean(), true, nearest(candidates))
        }
    };
    (
        ParticleSet {
            timestep,
            particles,
            proposed_count: proposed,
            accepted_count: accepted,
        },
        Estimate::new(state, cfg.estimator),
        fallback,
        population,
    )
}

pub(crate) fn check_inputs(obs: &CountVector, prior: &Prior, start: &TargetState, net: &SensorNetwork) -> Result<()> {
    if obs.len() != net.n_sensors() {
        return Err(Error::LengthMismatch {
            left: obs.len(),
            right: net.n_sensors(),
        });
    }
    prior.check_targets(start.n_targets())
}

/// ABC-MCMC with the motion prior as independence proposal.
///
/// A proposal replaces the current state when its count vector lies
/// strictly within `epsilon` of the observation and
/// `u <= f(new) q(old) / (f(old) q(new))`. Rejections hold the current
/// state, so the chain always has `n_particles` entries.
pub fn abc_rw_step(
    obs: &CountVector,
    prior: &Prior,
    chain_start: &TargetState,
    net: &SensorNetwork,
    epsilon: f64,
    cfg: &SamplerConfig,
    timestep: usize,
) -> Result<StepResult> {
    cfg.validate()?;
    check_inputs(obs, prior, chain_start, net)?;
    let start = Scored::new(chain_start.clone(), None, obs, net, prior, cfg);
    let mut chain = AbcChain::new(0, epsilon, start, cfg, timestep);
    let mut visited = Vec::with_capacity(cfg.n_particles);
    let mut candidates = Vec::with_capacity(cfg.n_particles);
    let mut proposals = Vec::new();
    for i in 0..cfg.n_particles {
        let (candidate, accepted) = chain.local_move(obs, prior, net, cfg);
        if cfg.record {
            proposals.push(record(timestep, 0, i, &candidate, accepted));
        }
        candidates.push((candidate.state, candidate.rho));
        visited.push(chain.chain.state().clone());
    }
    let (particles, estimate, fallback, population) = summarise(
        visited,
        candidates,
        |s| s.log_weight(epsilon) > f64::NEG_INFINITY,
        prior,
        cfg,
        timestep,
        chain.chain.proposed(),
        chain.chain.accepted(),
    );
    Ok(StepResult {
        particles,
        estimate,
        fallback,
        population,
        proposals,
        swaps: Vec::new(),
    })
}
