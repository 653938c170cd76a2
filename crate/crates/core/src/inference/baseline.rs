use rand::Rng;

use super::walk::{check_inputs, summarise, Scored};
use super::{IndependenceChain, Prior, ProposalRecord, SamplerConfig, StepResult};
use crate::metrics::rho_unchecked;
use crate::model::{indicator, simulate_counts};
use crate::rng::{substream, DOMAIN_SAMPLER};
use crate::{CountVector, Error, Result, SensorNetwork, TargetState};

/// Log of [`exact_likelihood`].
pub fn log_exact_likelihood(
    obs: &CountVector,
    state: &TargetState,
    net: &SensorNetwork,
    p_correct: f64,
) -> Result<f64> {
    if state.n_targets() != 1 {
        return Err(Error::ExactLikelihoodScope(state.n_targets()));
    }
    if obs.len() != net.n_sensors() {
        return Err(Error::LengthMismatch {
            left: obs.len(),
            right: net.n_sensors(),
        });
    }
    let (x, v) = (state.positions[0], state.velocities[0]);
    let (ln_hit, ln_miss) = (p_correct.ln(), (1.0 - p_correct).ln());
    let mut total = 0.0;
    for (&c, &l) in obs.as_slice().iter().zip(&net.locations) {
        if c > 1 {
            return Err(Error::Scenario(format!(
                "single-target count must be 0 or 1, got {c}"
            )));
        }
        total += if u32::from(indicator(x, v, l)) == c {
            ln_hit
        } else {
            ln_miss
        };
    }
    Ok(total)
}

/// Probability of a single-target binary observation when every sensor
/// reports the true approach/recede bit with probability `p_correct`,
/// independently across sensors.
///
/// More than one target has no closed form and is an error.
pub fn exact_likelihood(
    obs: &CountVector,
    state: &TargetState,
    net: &SensorNetwork,
    p_correct: f64,
) -> Result<f64> {
    log_exact_likelihood(obs, state, net, p_correct).map(f64::exp)
}

/// Metropolis-Hastings on the exact single-target posterior.
///
/// The proposal is the motion prior, so the acceptance ratio reduces to the
/// likelihood ratio. Sensor accuracy is `1 - net.p_e`.
pub fn mcmc_baseline_step(
    obs: &CountVector,
    prior: &Prior,
    chain_start: &TargetState,
    net: &SensorNetwork,
    cfg: &SamplerConfig,
    timestep: usize,
) -> Result<StepResult> {
    cfg.validate()?;
    if chain_start.n_targets() != 1 {
        return Err(Error::ExactLikelihoodScope(chain_start.n_targets()));
    }
    check_inputs(obs, prior, chain_start, net)?;
    let p_correct = 1.0 - net.p_e;
    let score = |state: TargetState, parent: Option<usize>| -> Result<(Scored, f64)> {
        let rho = rho_unchecked(simulate_counts(&state, net).as_slice(), obs.as_slice());
        let log_l = log_exact_likelihood(obs, &state, net, p_correct)?;
        let log_q = prior.log_density(&state, parent);
        let w = if log_q.is_finite() { log_l } else { f64::NEG_INFINITY };
        Ok((Scored { state, rho, log_f: log_l, log_q }, w))
    };

    let (start, w0) = score(chain_start.clone(), None)?;
    let mut chain = IndependenceChain::new(start, w0);
    let mut rng = substream(cfg.seed, &[DOMAIN_SAMPLER, timestep as u64, 1]);
    let mut visited = Vec::with_capacity(cfg.n_particles);
    let mut candidates = Vec::with_capacity(cfg.n_particles);
    let mut proposals = Vec::new();
    for i in 0..cfg.n_particles {
        let (state, parent) = prior.sample_with_parent(&mut rng);
        let (candidate, w) = score(state, parent)?;
        let u: f64 = rng.random();
        candidates.push((candidate.state.clone(), candidate.rho));
        let rec = cfg.record.then(|| (candidate.state.clone(), candidate.rho, candidate.log_f));
        let accepted = chain.offer(candidate, w, u);
        if let Some((state, rho, log_score)) = rec {
            proposals.push(ProposalRecord {
                timestep,
                chain: 0,
                index: i,
                accepted,
                state,
                rho,
                log_score,
            });
        }
        visited.push(chain.state().clone());
    }
    let (particles, estimate, fallback, population) = summarise(
        visited,
        candidates,
        |s| s.log_q.is_finite() && s.log_f.is_finite(),
        prior,
        cfg,
        timestep,
        chain.proposed(),
        chain.accepted(),
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{metropolis_independence, Estimate, EstimateMode};
    use crate::sim::MotionParams;
    use crate::Vec2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn three_sensors() -> SensorNetwork {
        SensorNetwork::new(
            vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(-10.0, 0.0)],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn perfect_sensors_matching_observation() {
        let net = three_sensors();
        let s = TargetState::single(Vec2::new(5.0, 5.0), Vec2::new(-1.0, 0.0));
        let obs = simulate_counts(&s, &net);
        assert_eq!(exact_likelihood(&obs, &s, &net, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn uninformative_sensors() {
        let net = three_sensors();
        let s = TargetState::single(Vec2::new(5.0, 5.0), Vec2::new(-1.0, 0.0));
        for obs in [vec![0, 0, 0], vec![1, 0, 1], vec![1, 1, 1]] {
            let l = exact_likelihood(&CountVector(obs), &s, &net, 0.5).unwrap();
            assert!((l - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn one_mismatch_out_of_three() {
        let net = three_sensors();
        let s = TargetState::single(Vec2::new(5.0, 5.0), Vec2::new(-1.0, 0.0));
        let mut obs = simulate_counts(&s, &net);
        obs.0[1] ^= 1;
        let l = exact_likelihood(&obs, &s, &net, 0.9).unwrap();
        assert!((l - 0.081).abs() < 1e-12, "{l}");
    }

    #[test]
    fn multiple_targets_are_out_of_scope() {
        let net = three_sensors();
        let s = TargetState::new(vec![Vec2::ZERO; 2], vec![Vec2::new(1.0, 0.0); 2]).unwrap();
        let obs = CountVector(vec![0, 0, 0]);
        assert!(matches!(
            exact_likelihood(&obs, &s, &net, 0.9),
            Err(Error::ExactLikelihoodScope(2))
        ));
    }

    #[test]
    fn flat_likelihood_recovers_the_prior() {
        // p_e close to 0.5 makes the likelihood almost flat. The chain
        // mean must then match the prior mean.
        let net = SensorNetwork::grid(4, 30.0, 0.499_999).unwrap();
        let prev = Estimate::new(
            TargetState::single(Vec2::new(3.0, -2.0), Vec2::new(1.0, 0.5)),
            EstimateMode::PosteriorMean,
        );
        let prior = Prior::transition(&prev, MotionParams::new(0.1).unwrap());
        let obs = CountVector(vec![1; 16]);
        let cfg = SamplerConfig { n_particles: 20_000, burn_in: 0.1, ..Default::default() };
        let out = mcmc_baseline_step(&obs, &prior, &prior.mean(), &net, &cfg, 1).unwrap();
        let mean = out.estimate.state.velocities[0];
        // iid chain up to a ~1e-5 likelihood ripple
        let se = (0.1f64 / 18_000.0).sqrt();
        assert!((mean - Vec2::new(1.0, 0.5)).norm() < 5.0 * se, "{mean}");
        assert!(out.particles.acceptance_rate() > 0.99);
    }

    #[test]
    fn stationary_frequencies_match_discrete_posterior() {
        // One target at a fixed position with eight possible headings and
        // two sensors. Prior uniform over headings; target proportional to
        // the exact likelihood. Same kernel as the baseline sampler.
        let net = SensorNetwork::new(vec![Vec2::new(0.0, 0.0), Vec2::new(8.0, 3.0)], 0.0).unwrap();
        let position = Vec2::new(2.0, -4.0);
        let headings: Vec<TargetState> = (0..8)
            .map(|k| {
                TargetState::single(position, Vec2::from_polar(1.0, 0.3 + k as f64 * std::f64::consts::FRAC_PI_4))
            })
            .collect();
        let obs = CountVector(vec![1, 0]);
        let p_correct = 0.8;
        let lik: Vec<f64> = headings
            .iter()
            .map(|s| exact_likelihood(&obs, s, &net, p_correct).unwrap())
            .collect();
        let z: f64 = lik.iter().sum();

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 200_000;
        let (visited, _) = metropolis_independence(0usize, lik[0].ln(), n, &mut rng, |r| {
            let k = r.random_range(0..8);
            (k, lik[k].ln())
        });
        let mut hist = [0usize; 8];
        for k in visited {
            hist[k] += 1;
        }
        for k in 0..8 {
            let p = lik[k] / z;
            let freq = hist[k] as f64 / n as f64;
            assert!((freq - p).abs() < 0.01, "heading {k}: {freq} vs {p}");
        }
    }

    #[test]
    fn baseline_refuses_two_targets() {
        let net = three_sensors();
        let prev = Estimate::new(
            TargetState::new(vec![Vec2::ZERO; 2], vec![Vec2::new(1.0, 0.0); 2]).unwrap(),
            EstimateMode::PosteriorMean,
        );
        let prior = Prior::transition(&prev, MotionParams::new(0.1).unwrap());
        let obs = CountVector(vec![0, 0, 0]);
        let err = mcmc_baseline_step(&obs, &prior, &prior.mean(), &net, &SamplerConfig::default(), 1);
        assert!(matches!(err, Err(Error::ExactLikelihoodScope(2))));
    }
}
