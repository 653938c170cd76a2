use rayon::prelude::*;

use super::{nearest, point_estimate, Estimate, ParticleSet, Prior, ProposalRecord, SamplerConfig, StepResult};
use crate::metrics::{log_pseudo_likelihood, rho_unchecked};
use crate::model::simulate_counts;
use crate::rng::{substream, DOMAIN_SAMPLER};
use crate::{CountVector, Error, Result, SensorNetwork, TargetState};

struct Draw {
    state: TargetState,
    rho: f64,
    log_f: f64,
}

/// Rejection ABC: keep every prior draw whose noiseless count vector lies
/// strictly within `epsilon` of the observation.
///
/// Proposal `i` of timestep `t` always comes from the same random
/// substream, so the accepted set does not depend on the worker count and
/// replays bit-exactly.
pub fn abc_rej_step(
    obs: &CountVector,
    prior: &Prior,
    net: &SensorNetwork,
    epsilon: f64,
    cfg: &SamplerConfig,
    timestep: usize,
) -> Result<StepResult> {
    cfg.validate()?;
    if obs.len() != net.n_sensors() {
        return Err(Error::LengthMismatch {
            left: obs.len(),
            right: net.n_sensors(),
        });
    }
    let propose = |i: usize| -> Draw {
        let mut rng = substream(cfg.seed, &[DOMAIN_SAMPLER, timestep as u64, 0, i as u64]);
        let (state, parent) = prior.sample_with_parent(&mut rng);
        let rho = rho_unchecked(simulate_counts(&state, net).as_slice(), obs.as_slice());
        let log_f = log_pseudo_likelihood(&state, prior.reference(parent), &cfg.pseudo)
            .expect("prior draws share the target count");
        Draw { state, rho, log_f }
    };
    let draws: Vec<Draw> = if cfg.parallel {
        (0..cfg.n_particles).into_par_iter().map(propose).collect()
    } else {
        (0..cfg.n_particles).map(propose).collect()
    };

    let mut particles = Vec::new();
    let mut scores = Vec::new();
    let mut proposals = Vec::new();
    let mut rejected = Vec::new();
    for (index, d) in draws.into_iter().enumerate() {
        let accepted = d.rho < epsilon;
        if cfg.record {
            proposals.push(ProposalRecord {
                timestep,
                chain: 0,
                index,
                accepted,
                state: d.state.clone(),
                rho: d.rho,
                log_score: d.log_f,
            });
        }
        if accepted {
            particles.push(d.state);
            scores.push(d.log_f);
        } else {
            rejected.push((d.state, d.rho));
        }
    }

    let (state, fallback, population) = match point_estimate(&particles, &scores, cfg.estimator) {
        Some(s) => (s, false, particles.clone()),
        None => {
            log::warn!("t={timestep}: no proposal within epsilon={epsilon}; extrapolating");
            (prior.mean(), true, nearest(rejected))
        }
    };
    let accepted_count = particles.len();
    Ok(StepResult {
        particles: ParticleSet {
            timestep,
            particles,
            proposed_count: cfg.n_particles,
            accepted_count,
        },
        estimate: Estimate::new(state, cfg.estimator),
        fallback,
        population,
        proposals,
        swaps: Vec::new(),
    })
}
