use abctrack::evaluation::matched_rmse;
use abctrack::inference::{abc_rej_step, Estimate, EstimateMode, Prior, SamplerConfig};
use abctrack::metrics::{pseudo_likelihood, rho, PseudoLikelihoodParams};
use abctrack::model::simulate_counts;
use abctrack::sim::MotionParams;
use abctrack::{CountVector, SensorNetwork, TargetState, Vec2};
use proptest::prelude::*;

fn vec2(range: f64) -> impl Strategy<Value = Vec2> {
    (-range..range, -range..range).prop_map(|(x, y)| Vec2::new(x, y))
}

fn state(n: usize) -> impl Strategy<Value = TargetState> {
    (prop::collection::vec(vec2(40.0), n), prop::collection::vec(vec2(3.0), n))
        .prop_map(|(p, v)| TargetState::new(p, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn looser_tolerance_accepts_a_superset(
        truth in state(2),
        seed in any::<u64>(),
        eps1 in 0.0f64..6.0,
        extra in 0.0f64..6.0,
    ) {
        let net = SensorNetwork::grid(4, 50.0, 0.0).unwrap();
        let obs = simulate_counts(&truth, &net);
        let prior = Prior::transition(
            &Estimate::new(truth.clone(), EstimateMode::PosteriorMean),
            MotionParams::new(0.3).unwrap(),
        );
        let cfg = SamplerConfig { n_particles: 400, seed, record: true, ..Default::default() };
        let tight = abc_rej_step(&obs, &prior, &net, eps1, &cfg, 3).unwrap();
        let loose = abc_rej_step(&obs, &prior, &net, eps1 + extra, &cfg, 3).unwrap();
        for (a, b) in tight.proposals.iter().zip(&loose.proposals) {
            prop_assert_eq!(&a.state, &b.state);
            prop_assert!(!a.accepted || b.accepted);
        }
        prop_assert!(tight.particles.accepted_count <= loose.particles.accepted_count);
    }

    #[test]
    fn rejection_estimate_is_mean_of_accepted(truth in state(3), seed in any::<u64>()) {
        let net = SensorNetwork::grid(3, 50.0, 0.0).unwrap();
        let obs = simulate_counts(&truth, &net);
        let prior = Prior::transition(
            &Estimate::new(truth, EstimateMode::PosteriorMean),
            MotionParams::new(0.2).unwrap(),
        );
        let cfg = SamplerConfig { n_particles: 300, seed, ..Default::default() };
        let out = abc_rej_step(&obs, &prior, &net, 3.0, &cfg, 1).unwrap();
        let acc = &out.particles.particles;
        if acc.is_empty() {
            prop_assert!(out.fallback);
            prop_assert_eq!(out.estimate.state, prior.mean());
        } else {
            let n = acc.len() as f64;
            for j in 0..3 {
                let mx: f64 = acc.iter().map(|s| s.positions[j].x).sum::<f64>() / n;
                let mvx: f64 = acc.iter().map(|s| s.velocities[j].x).sum::<f64>() / n;
                prop_assert!((out.estimate.state.positions[j].x - mx).abs() < 1e-9);
                prop_assert!((out.estimate.state.velocities[j].x - mvx).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rmse_ignores_target_labels(a in state(4), b in state(4), perm in Just([2usize, 0, 3, 1])) {
        let relabel = TargetState::new(
            perm.iter().map(|&k| a.positions[k]).collect(),
            perm.iter().map(|&k| a.velocities[k]).collect(),
        ).unwrap();
        let d1 = matched_rmse(&a, &b).unwrap();
        let d2 = matched_rmse(&relabel, &b).unwrap();
        prop_assert!((d1 - d2).abs() < 1e-12);
        prop_assert_eq!(matched_rmse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn rho_ignores_sensor_order(
        pairs in prop::collection::vec((0u32..4, 0u32..4), 1..40),
        rot in 0usize..40,
    ) {
        let c1 = CountVector(pairs.iter().map(|p| p.0).collect());
        let c2 = CountVector(pairs.iter().map(|p| p.1).collect());
        let k = rot % pairs.len();
        let mut p1 = c1.0.clone();
        let mut p2 = c2.0.clone();
        p1.rotate_left(k);
        p2.rotate_left(k);
        let d = rho(&c1, &c2).unwrap();
        prop_assert_eq!(d, rho(&CountVector(p1), &CountVector(p2)).unwrap());
        prop_assert_eq!(d, rho(&c2, &c1).unwrap());
    }

    #[test]
    fn pseudo_likelihood_is_at_most_one(prev in state(2), next in state(2)) {
        let params = PseudoLikelihoodParams::default();
        let f = pseudo_likelihood(&next, &prev, &params).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert_eq!(pseudo_likelihood(&prev, &prev, &params).unwrap(), 1.0);
    }
}
