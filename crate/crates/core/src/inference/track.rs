use super::{
    abc_pt_step, abc_rej_step, abc_rw_step, mcmc_baseline_step, Algorithm, Prior, PriorMode, SamplerConfig,
    StepResult,
};
use crate::rng::{substream, DOMAIN_INIT};
use crate::sim::{extrapolate, Scenario};
use crate::{Error, Result, TargetState};

/// Start-of-track prior: a disc of `cfg.init_radius` around each true start
/// position and a Gaussian around each true start velocity.
pub fn initial_prior(scenario: &Scenario, cfg: &SamplerConfig) -> Prior {
    Prior::Initial {
        center: scenario.truth[0].clone(),
        radius: cfg.init_radius,
        velocity_sd: cfg.init_velocity_sd,
    }
}

/// Chain start for the first timestep: one draw from the initial prior.
pub fn initial_chain_state(scenario: &Scenario, cfg: &SamplerConfig) -> TargetState {
    initial_prior(scenario, cfg).sample(&mut substream(cfg.seed, &[DOMAIN_INIT]))
}

/// Runs `algorithm` over every timestep of `scenario`, feeding each
/// step's estimate (or population, per `cfg.prior`) into the next prior.
/// Chains after the first step start at the extrapolated estimate.
pub fn track(scenario: &Scenario, algorithm: Algorithm, cfg: &SamplerConfig) -> Result<Vec<StepResult>> {
    let epsilon = cfg
        .epsilon
        .resolve(scenario.net.n_sensors(), scenario.n_targets(), scenario.net.p_e);
    track_with_epsilon(scenario, algorithm, cfg, epsilon)
}

pub fn track_with_epsilon(
    scenario: &Scenario,
    algorithm: Algorithm,
    cfg: &SamplerConfig,
    epsilon: f64,
) -> Result<Vec<StepResult>> {
    cfg.validate()?;
    scenario.validate()?;
    if algorithm == Algorithm::Mcmc && scenario.n_targets() != 1 {
        return Err(Error::ExactLikelihoodScope(scenario.n_targets()));
    }
    if algorithm == Algorithm::AbcPt {
        cfg.resolve_ladder(epsilon)?;
    }
    let net = &scenario.net;
    let mut prior = initial_prior(scenario, cfg);
    let mut start = initial_chain_state(scenario, cfg);
    let mut out = Vec::with_capacity(scenario.steps);
    for (k, obs) in scenario.observations.iter().enumerate() {
        let t = k + 1;
        let step = match algorithm {
            Algorithm::AbcRej => abc_rej_step(obs, &prior, net, epsilon, cfg, t)?,
            Algorithm::AbcRw => abc_rw_step(obs, &prior, &start, net, epsilon, cfg, t)?,
            Algorithm::AbcPt => abc_pt_step(obs, &prior, &start, net, epsilon, cfg, t)?,
            Algorithm::Mcmc => mcmc_baseline_step(obs, &prior, &start, net, cfg, t)?,
        };
        prior = match cfg.prior {
            PriorMode::PointEstimate => Prior::transition(&step.estimate, scenario.motion),
            PriorMode::Population => {
                Prior::population(step.population.clone(), &step.estimate, scenario.motion)?
            }
        };
        start = extrapolate(&step.estimate.state);
        out.push(step);
    }
    Ok(out)
}
