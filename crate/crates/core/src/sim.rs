//! Motion model and scenario synthesis.
//!
//! Velocities follow a Gaussian random walk, `v_t ~ N(v_{t-1}, sigma2 I)`,
//! and positions integrate the previous velocity, `x_t = x_{t-1} + v_{t-1}`.
//! Targets move independently.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::model::{binary_matrix, corrupt, count_vector};
use crate::rng::{substream, DOMAIN_MOTION, DOMAIN_OBSERVATION};
use crate::{CountVector, Error, Result, SensorNetwork, TargetState, Vec2};

pub const DEFAULT_START_RADIUS: f64 = 40.0;
pub const DEFAULT_INITIAL_SPEED: f64 = 2.0;

/// Parameters of the velocity random walk. The transition matrix is the
/// identity and the timestep is one second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    pub sigma2: f64,
}

impl MotionParams {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Config(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(Self { sigma2 })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

/// One step of the motion model for every target.
pub fn propagate<R: Rng + ?Sized>(
    state: &TargetState,
    motion: &MotionParams,
    rng: &mut R,
) -> TargetState {
    let noise = Normal::new(0.0, motion.sigma()).expect("sigma is positive and finite");
    let mut positions = Vec::with_capacity(state.n_targets());
    let mut velocities = Vec::with_capacity(state.n_targets());
    for (&x, &v) in state.positions.iter().zip(&state.velocities) {
        positions.push(x + v);
        velocities.push(Vec2::new(v.x + noise.sample(rng), v.y + noise.sample(rng)));
    }
    TargetState {
        positions,
        velocities,
    }
}

/// Noiseless one-step extrapolation: positions advance, velocities are kept.
pub fn extrapolate(state: &TargetState) -> TargetState {
    TargetState {
        positions: state
            .positions
            .iter()
            .zip(&state.velocities)
            .map(|(&x, &v)| x + v)
            .collect(),
        velocities: state.velocities.clone(),
    }
}

/// Knobs of the scenario generator beyond the network and motion model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOptions {
    pub start_radius: f64,
    pub initial_speed: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            start_radius: DEFAULT_START_RADIUS,
            initial_speed: DEFAULT_INITIAL_SPEED,
        }
    }
}

/// Ground truth plus the observation sequence it produced.
///
/// `truth[k]` and `observations[k]` belong to time `t = k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub format: String,
    pub seed: u64,
    pub net: SensorNetwork,
    pub motion: MotionParams,
    pub options: ScenarioOptions,
    pub steps: usize,
    pub truth: Vec<TargetState>,
    pub observations: Vec<CountVector>,
    /// Digest of the configuration the scenario was generated from, when
    /// produced by a front end that tracks one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
}

pub const SCENARIO_FORMAT: &str = "abctrack-scenario/1";

/// Scenario with the default start radius and initial speed.
pub fn make_scenario(
    n_targets: usize,
    net: &SensorNetwork,
    motion: &MotionParams,
    steps: usize,
    seed: u64,
) -> Result<Scenario> {
    make_scenario_with(n_targets, net, motion, steps, seed, ScenarioOptions::default())
}

pub fn make_scenario_with(
    n_targets: usize,
    net: &SensorNetwork,
    motion: &MotionParams,
    steps: usize,
    seed: u64,
    options: ScenarioOptions,
) -> Result<Scenario> {
    if n_targets == 0 {
        return Err(Error::Scenario("at least one target is required".into()));
    }
    if steps == 0 {
        return Err(Error::Scenario("at least one timestep is required".into()));
    }
    net.validate()?;
    MotionParams::new(motion.sigma2)?;

    let mut rng = substream(seed, &[DOMAIN_MOTION]);
    let mut positions = Vec::with_capacity(n_targets);
    let mut velocities = Vec::with_capacity(n_targets);
    for _ in 0..n_targets {
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let heading = Vec2::from_polar(1.0, angle);
        positions.push(heading * options.start_radius);
        velocities.push(-heading * options.initial_speed);
    }
    let mut truth = Vec::with_capacity(steps);
    truth.push(TargetState::new(positions, velocities)?);
    for _ in 1..steps {
        let next = propagate(truth.last().expect("non-empty"), motion, &mut rng);
        truth.push(next);
    }
    let observations = observe(&truth, net, seed);
    Ok(Scenario {
        format: SCENARIO_FORMAT.to_string(),
        seed,
        net: net.clone(),
        motion: *motion,
        options,
        steps,
        truth,
        observations,
        config_sha256: None,
    })
}

/// Noisy count observations of a trajectory; deterministic in `seed`.
pub fn observe(truth: &[TargetState], net: &SensorNetwork, seed: u64) -> Vec<CountVector> {
    let mut rng = substream(seed, &[DOMAIN_OBSERVATION]);
    truth
        .iter()
        .map(|s| count_vector(&corrupt(&binary_matrix(s, net), net.p_e, &mut rng)))
        .collect()
}

impl Scenario {
    pub fn n_targets(&self) -> usize {
        self.truth.first().map_or(0, TargetState::n_targets)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != SCENARIO_FORMAT {
            return Err(Error::Scenario(format!("unknown format tag {:?}", self.format)));
        }
        self.net.validate()?;
        MotionParams::new(self.motion.sigma2)?;
        if self.truth.len() != self.steps || self.observations.len() != self.steps {
            return Err(Error::Scenario(format!(
                "expected {} timesteps, found {} states and {} observations",
                self.steps,
                self.truth.len(),
                self.observations.len()
            )));
        }
        let n = self.n_targets();
        for s in &self.truth {
            s.validate()?;
            if s.n_targets() != n {
                return Err(Error::TargetCountMismatch {
                    expected: n,
                    found: s.n_targets(),
                });
            }
        }
        for c in &self.observations {
            if c.len() != self.net.n_sensors() {
                return Err(Error::LengthMismatch {
                    left: c.len(),
                    right: self.net.n_sensors(),
                });
            }
            if c.0.iter().any(|&k| k as usize > n) {
                return Err(Error::Scenario("count exceeds the number of targets".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net() -> SensorNetwork {
        SensorNetwork::grid(4, 50.0, 0.05).unwrap()
    }

    #[test]
    fn vanishing_noise_keeps_velocity() {
        let motion = MotionParams::new(1e-40).unwrap();
        let s = TargetState::single(Vec2::new(3.0, -1.0), Vec2::new(1.5, 0.25));
        let next = propagate(&s, &motion, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(next.velocities, s.velocities);
        assert_eq!(next.positions[0], Vec2::new(4.5, -0.75));
    }

    #[test]
    fn position_uses_old_velocity() {
        let motion = MotionParams::new(0.01).unwrap();
        let s = TargetState::single(Vec2::ZERO, Vec2::new(1.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut inside = 0;
        for _ in 0..1000 {
            let next = propagate(&s, &motion, &mut rng);
            assert_eq!(next.positions[0], Vec2::new(1.0, 0.0));
            let dv = next.velocities[0] - s.velocities[0];
            if dv.x.abs() < 0.3 && dv.y.abs() < 0.3 {
                inside += 1;
            }
        }
        // both coordinates within 3 sd: 0.9973^2
        assert!(inside >= 985, "{inside}");
    }

    #[test]
    fn increment_covariance_matches_sigma2() {
        let motion = MotionParams::new(0.09).unwrap();
        let s = TargetState::single(Vec2::ZERO, Vec2::new(0.5, -0.5));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let d = propagate(&s, &motion, &mut rng).velocities[0] - s.velocities[0];
            sxx += d.x * d.x;
            syy += d.y * d.y;
            sxy += d.x * d.y;
        }
        let (sxx, syy, sxy) = (sxx / n as f64, syy / n as f64, sxy / n as f64);
        // sd of a variance estimate: sigma2 * sqrt(2/n)
        let tol = 4.0 * 0.09 * (2.0 / n as f64).sqrt();
        assert!((sxx - 0.09).abs() < tol, "{sxx}");
        assert!((syy - 0.09).abs() < tol, "{syy}");
        assert!(sxy.abs() < 4.0 * 0.09 / (n as f64).sqrt(), "{sxy}");
    }

    #[test]
    fn five_target_scenario() {
        let motion = MotionParams::new(0.01).unwrap();
        let sc = make_scenario(5, &net(), &motion, 30, 17).unwrap();
        assert_eq!(sc.truth.len(), 30);
        assert_eq!(sc.observations.len(), 30);
        assert_eq!(sc.n_targets(), 5);
        for (&x, &v) in sc.truth[0].positions.iter().zip(&sc.truth[0].velocities) {
            assert!((x.norm() - 40.0).abs() < 1e-12);
            assert!((v.norm() - 2.0).abs() < 1e-12);
            // heading at the origin
            assert!(x.cross(v).abs() < 1e-9 && x.dot(v) < 0.0);
        }
        sc.validate().unwrap();
    }

    #[test]
    fn scenario_is_deterministic() {
        let motion = MotionParams::new(0.1).unwrap();
        let a = make_scenario(3, &net(), &motion, 20, 99).unwrap();
        let b = make_scenario(3, &net(), &motion, 20, 99).unwrap();
        assert_eq!(a, b);
        let c = make_scenario(3, &net(), &motion, 20, 100).unwrap();
        assert_ne!(a.truth, c.truth);
    }

    #[test]
    fn position_recurrence_is_exact() {
        let motion = MotionParams::new(0.1).unwrap();
        let sc = make_scenario(4, &net(), &motion, 30, 5).unwrap();
        for w in sc.truth.windows(2) {
            for j in 0..4 {
                assert_eq!(w[1].positions[j], w[0].positions[j] + w[0].velocities[j]);
            }
        }
    }

    #[test]
    fn observations_regenerate() {
        let motion = MotionParams::new(0.1).unwrap();
        let sc = make_scenario(2, &net(), &motion, 30, 8).unwrap();
        assert_eq!(observe(&sc.truth, &sc.net, sc.seed), sc.observations);
    }

    #[test]
    fn rejects_bad_inputs() {
        let motion = MotionParams::new(0.1).unwrap();
        assert!(make_scenario(0, &net(), &motion, 30, 1).is_err());
        assert!(make_scenario(1, &net(), &motion, 0, 1).is_err());
        assert!(MotionParams::new(0.0).is_err());
        assert!(MotionParams::new(f64::NAN).is_err());
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let motion = MotionParams::new(0.1).unwrap();
        let sc = make_scenario(3, &net(), &motion, 30, 12).unwrap();
        let back = Scenario::from_json(&sc.to_json().unwrap()).unwrap();
        assert_eq!(back, sc);
    }

    #[test]
    fn load_rejects_inconsistent_files() {
        let motion = MotionParams::new(0.1).unwrap();
        let mut sc = make_scenario(2, &net(), &motion, 5, 12).unwrap();
        sc.observations.pop();
        let text = serde_json::to_string(&sc).unwrap();
        assert!(Scenario::from_json(&text).is_err());
    }
}
