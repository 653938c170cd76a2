use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::walk::{check_inputs, record, summarise, AbcChain, Scored};
use super::{Prior, ProposalRecord, SamplerConfig, StepResult, SwapRecord};
use crate::rng::{substream, DOMAIN_SWAP};
use crate::{CountVector, Result, SensorNetwork, TargetState};

/// Parallel tempering over a ladder of tolerances.
///
/// Chain `k` runs ABC-MCMC at `ladder[k]`; chain 0 uses `epsilon` and
/// provides the estimate. After every sweep of local moves, adjacent pairs
/// `(k, k + 1)` are visited in random order and the looser chain's state is
/// copied into the stricter chain whenever its count vector satisfies the
/// stricter tolerance.
pub fn abc_pt_step(
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
    let ladder = cfg.resolve_ladder(epsilon)?;
    let n_chains = ladder.len();
    let start = Scored::new(chain_start.clone(), None, obs, net, prior, cfg);
    let mut chains: Vec<AbcChain> = ladder
        .iter()
        .enumerate()
        .map(|(k, &eps)| AbcChain::new(k, eps, start.clone(), cfg, timestep))
        .collect();

    let mut swap_rng = substream(cfg.seed, &[DOMAIN_SWAP, timestep as u64]);
    let pairs_per_sweep = cfg.swap_pairs_per_sweep.unwrap_or(n_chains - 1);
    let mut order: Vec<usize> = (0..n_chains - 1).collect();

    let mut visited = Vec::with_capacity(cfg.n_particles);
    let mut proposals: Vec<ProposalRecord> = Vec::new();
    let mut swaps: Vec<SwapRecord> = Vec::new();
    let mut candidates = Vec::with_capacity(cfg.n_particles);
    let (mut swap_attempts0, mut swap_accepts0) = (0usize, 0usize);

    for sweep in 0..cfg.n_particles {
        let moves: Vec<(Scored, bool)> = if cfg.parallel {
            chains
                .par_iter_mut()
                .map(|c| c.local_move(obs, prior, net, cfg))
                .collect()
        } else {
            chains
                .iter_mut()
                .map(|c| c.local_move(obs, prior, net, cfg))
                .collect()
        };
        if cfg.record {
            for (k, (cand, acc)) in moves.iter().enumerate() {
                proposals.push(record(timestep, k, sweep, cand, *acc));
            }
        }
        candidates.extend(moves.iter().map(|(c, _)| (c.state.clone(), c.rho)));

        for s in 0..pairs_per_sweep {
            let slot = s % order.len();
            if slot == 0 {
                order.shuffle(&mut swap_rng);
            }
            let cold = order[slot];
            let hot = cold + 1;
            let hot_state = chains[hot].chain.state().clone();
            let eps_cold = chains[cold].epsilon;
            let accepted = hot_state.rho < eps_cold;
            if cfg.record {
                swaps.push(SwapRecord {
                    timestep,
                    sweep,
                    cold,
                    hot,
                    hot_state: hot_state.state.clone(),
                    rho_hot: hot_state.rho,
                    eps_cold,
                    accepted,
                });
            }
            if cold == 0 {
                swap_attempts0 += 1;
                swap_accepts0 += usize::from(accepted);
            }
            if accepted {
                let w = hot_state.log_weight(eps_cold);
                chains[cold].chain.replace(hot_state, w);
            }
        }
        visited.push(chains[0].chain.state().clone());
    }

    let c0 = &chains[0].chain;
    let eps0 = chains[0].epsilon;
    let (particles, estimate, fallback, population) = summarise(
        visited,
        candidates,
        |s| s.log_weight(eps0) > f64::NEG_INFINITY,
        prior,
        cfg,
        timestep,
        c0.proposed() + swap_attempts0,
        c0.accepted() + swap_accepts0,
    );
    Ok(StepResult {
        particles,
        estimate,
        fallback,
        population,
        proposals,
        swaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{Estimate, EstimateMode, Ladder};
    use crate::model::simulate_counts;
    use crate::sim::MotionParams;
    use crate::Vec2;

    fn setup() -> (SensorNetwork, Prior, CountVector, TargetState) {
        let net = SensorNetwork::grid(4, 30.0, 0.0).unwrap();
        let truth = TargetState::new(
            vec![Vec2::new(-5.0, 3.0), Vec2::new(6.0, -2.0)],
            vec![Vec2::new(1.5, -0.5), Vec2::new(-1.0, -1.0)],
        )
        .unwrap();
        let obs = simulate_counts(&truth, &net);
        let prev = Estimate::new(
            TargetState::new(
                vec![Vec2::new(-7.0, 3.0), Vec2::new(7.0, -1.0)],
                vec![Vec2::new(1.3, -0.2), Vec2::new(-1.2, -0.7)],
            )
            .unwrap(),
            EstimateMode::PosteriorMean,
        );
        let prior = Prior::transition(&prev, MotionParams::new(0.2).unwrap());
        let start = prior.mean();
        (net, prior, obs, start)
    }

    #[test]
    fn swap_decisions_follow_the_cold_tolerance() {
        let (net, prior, obs, start) = setup();
        let cfg = SamplerConfig { n_particles: 200, record: true, ..Default::default() };
        let out = abc_pt_step(&obs, &prior, &start, &net, 1.0, &cfg, 3).unwrap();
        assert_eq!(out.swaps.len(), 200 * 4);
        assert!(out.swaps.iter().any(|s| s.accepted));
        assert!(out.swaps.iter().any(|s| !s.accepted));
        for s in &out.swaps {
            assert_eq!(s.hot, s.cold + 1);
            let replay = crate::metrics::rho(&simulate_counts(&s.hot_state, &net), &obs).unwrap();
            assert_eq!(replay, s.rho_hot);
            assert_eq!(s.accepted, replay < s.eps_cold);
        }
    }

    #[test]
    fn cold_chain_stays_in_its_tolerance() {
        let (net, prior, obs, start) = setup();
        let cfg = SamplerConfig { n_particles: 300, burn_in: 0.0, ..Default::default() };
        let out = abc_pt_step(&obs, &prior, &start, &net, 1.0, &cfg, 2).unwrap();
        let first = out
            .particles
            .particles
            .iter()
            .position(|s| simulate_counts(s, &net) == obs)
            .expect("chain 0 reaches the tolerated set");
        for s in &out.particles.particles[first..] {
            assert_eq!(simulate_counts(s, &net), obs);
        }
    }

    #[test]
    fn parallel_and_sequential_chains_agree() {
        let (net, prior, obs, start) = setup();
        let par = SamplerConfig { n_particles: 150, ..Default::default() };
        let seq = SamplerConfig { parallel: false, ..par.clone() };
        let a = abc_pt_step(&obs, &prior, &start, &net, 1.0, &par, 7).unwrap();
        let b = abc_pt_step(&obs, &prior, &start, &net, 1.0, &seq, 7).unwrap();
        assert_eq!(a.particles, b.particles);
        assert_eq!(a.estimate, b.estimate);
    }

    #[test]
    fn bad_ladders_are_rejected() {
        let (net, prior, obs, start) = setup();
        let mut cfg = SamplerConfig { n_chains: 3, ladder: Ladder::Explicit(vec![1.0, 2.0]), ..Default::default() };
        assert!(abc_pt_step(&obs, &prior, &start, &net, 1.0, &cfg, 1).is_err());
        cfg.ladder = Ladder::Explicit(vec![1.0, 2.0, 2.0]);
        assert!(abc_pt_step(&obs, &prior, &start, &net, 1.0, &cfg, 1).is_err());
        cfg.n_chains = 1;
        cfg.ladder = Ladder::Geometric(2.0);
        assert!(abc_pt_step(&obs, &prior, &start, &net, 1.0, &cfg, 1).is_err());
    }

    #[test]
    fn custom_pair_count() {
        let (net, prior, obs, start) = setup();
        let cfg = SamplerConfig {
            n_particles: 10,
            swap_pairs_per_sweep: Some(6),
            record: true,
            ..Default::default()
        };
        let out = abc_pt_step(&obs, &prior, &start, &net, 1.0, &cfg, 1).unwrap();
        assert_eq!(out.swaps.len(), 60);
    }
}
