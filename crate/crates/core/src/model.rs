//! Observation model for binary directional sensors.
//!
//! Sensor `i` classifies target `j` as approaching when
//! `<x_j - l_i, v_j> < 0`. Stacking these indicators gives an
//! `N_s x N_t` binary matrix; since the sensors cannot tell targets apart,
//! only its row sums (the count vector) are observed.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A point or vector in the plane, in meters (or meters per second).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn rotate(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Joint kinematic state of all targets at one timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub positions: Vec<Vec2>,
    pub velocities: Vec<Vec2>,
}

impl TargetState {
    pub fn new(positions: Vec<Vec2>, velocities: Vec<Vec2>) -> Result<Self> {
        let state = Self {
            positions,
            velocities,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn single(position: Vec2, velocity: Vec2) -> Self {
        Self {
            positions: vec![position],
            velocities: vec![velocity],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::InvalidState("at least one target is required".into()));
        }
        if self.positions.len() != self.velocities.len() {
            return Err(Error::InvalidState(format!(
                "{} positions but {} velocities",
                self.positions.len(),
                self.velocities.len()
            )));
        }
        let finite = self
            .positions
            .iter()
            .chain(&self.velocities)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidState("non-finite coordinate".into()));
        }
        Ok(())
    }

    pub fn n_targets(&self) -> usize {
        self.positions.len()
    }

    /// Component-wise arithmetic mean of a non-empty set of states.
    pub fn mean<'a, I>(states: I) -> Option<TargetState>
    where
        I: IntoIterator<Item = &'a TargetState>,
    {
        let mut iter = states.into_iter();
        let first = iter.next()?;
        let mut positions = first.positions.clone();
        let mut velocities = first.velocities.clone();
        let mut n = 1usize;
        for s in iter {
            for (acc, p) in positions.iter_mut().zip(&s.positions) {
                *acc += *p;
            }
            for (acc, v) in velocities.iter_mut().zip(&s.velocities) {
                *acc += *v;
            }
            n += 1;
        }
        let k = 1.0 / n as f64;
        Some(TargetState {
            positions: positions.into_iter().map(|p| p * k).collect(),
            velocities: velocities.into_iter().map(|v| v * k).collect(),
        })
    }
}

/// Fixed sensor layout and the per-indicator flip probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorNetwork {
    pub locations: Vec<Vec2>,
    pub p_e: f64,
}

impl SensorNetwork {
    pub fn new(locations: Vec<Vec2>, p_e: f64) -> Result<Self> {
        let net = Self { locations, p_e };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.locations.is_empty() {
            return Err(Error::InvalidNetwork("at least one sensor is required".into()));
        }
        if !(0.0..0.5).contains(&self.p_e) {
            return Err(Error::InvalidNetwork(format!(
                "p_e must lie in [0, 0.5), got {}",
                self.p_e
            )));
        }
        if !self.locations.iter().all(|l| l.is_finite()) {
            return Err(Error::InvalidNetwork("non-finite sensor location".into()));
        }
        for (i, a) in self.locations.iter().enumerate() {
            if self.locations[..i].contains(a) {
                return Err(Error::InvalidNetwork(format!("duplicate sensor location {a}")));
            }
        }
        Ok(())
    }

    /// `side x side` sensors on a regular grid filling `[-half_width, half_width]^2`.
    pub fn grid(side: usize, half_width: f64, p_e: f64) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidNetwork("grid side must be positive".into()));
        }
        let coord = |k: usize| {
            if side == 1 {
                0.0
            } else {
                -half_width + 2.0 * half_width * k as f64 / (side - 1) as f64
            }
        };
        let locations = (0..side)
            .flat_map(|r| (0..side).map(move |c| (r, c)))
            .map(|(r, c)| Vec2::new(coord(c), coord(r)))
            .collect();
        Self::new(locations, p_e)
    }

    /// `n` sensors drawn uniformly over `[-half_width, half_width]^2`.
    pub fn uniform_random<R: Rng + ?Sized>(
        n: usize,
        half_width: f64,
        p_e: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let locations = (0..n)
            .map(|_| {
                Vec2::new(
                    rng.random_range(-half_width..=half_width),
                    rng.random_range(-half_width..=half_width),
                )
            })
            .collect();
        Self::new(locations, p_e)
    }

    pub fn n_sensors(&self) -> usize {
        self.locations.len()
    }
}

/// Row `i`, column `j` is 1 when sensor `i` sees target `j` approaching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    n_sensors: usize,
    n_targets: usize,
    entries: Vec<u8>,
}

impl BinaryMatrix {
    pub fn zeros(n_sensors: usize, n_targets: usize) -> Self {
        Self {
            n_sensors,
            n_targets,
            entries: vec![0; n_sensors * n_targets],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n_targets = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_targets) {
            return Err(Error::InvalidState("ragged binary matrix".into()));
        }
        if rows.iter().flatten().any(|&b| b > 1) {
            return Err(Error::InvalidState("binary matrix entries must be 0 or 1".into()));
        }
        Ok(Self {
            n_sensors: rows.len(),
            n_targets,
            entries: rows.concat(),
        })
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn n_targets(&self) -> usize {
        self.n_targets
    }

    pub fn get(&self, sensor: usize, target: usize) -> u8 {
        self.entries[sensor * self.n_targets + target]
    }

    pub fn set(&mut self, sensor: usize, target: usize, value: bool) {
        self.entries[sensor * self.n_targets + target] = u8::from(value);
    }

    pub fn row(&self, sensor: usize) -> &[u8] {
        &self.entries[sensor * self.n_targets..(sensor + 1) * self.n_targets]
    }

    pub fn ones(&self) -> usize {
        self.entries.iter().filter(|&&b| b == 1).count()
    }

    /// Number of entries that differ between two equally shaped matrices.
    pub fn hamming(&self, other: &BinaryMatrix) -> usize {
        self.entries
            .iter()
            .zip(&other.entries)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// Per-sensor number of targets classified as approaching.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountVector(pub Vec<u32>);

impl CountVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for CountVector {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

/// 1 when the target at `position` moving with `velocity` approaches `sensor`.
///
/// A zero inner product (including a zero velocity) counts as moving away.
pub fn indicator(position: Vec2, velocity: Vec2, sensor: Vec2) -> u8 {
    if velocity == Vec2::ZERO {
        log::debug!("zero velocity at {position}; classified as moving away");
        return 0;
    }
    u8::from((position - sensor).dot(velocity) < 0.0)
}

pub fn binary_matrix(state: &TargetState, net: &SensorNetwork) -> BinaryMatrix {
    let mut m = BinaryMatrix::zeros(net.n_sensors(), state.n_targets());
    for (i, &l) in net.locations.iter().enumerate() {
        for (j, (&x, &v)) in state.positions.iter().zip(&state.velocities).enumerate() {
            m.set(i, j, indicator(x, v, l) == 1);
        }
    }
    m
}

pub fn count_vector(matrix: &BinaryMatrix) -> CountVector {
    CountVector(
        (0..matrix.n_sensors())
            .map(|i| matrix.row(i).iter().map(|&b| u32::from(b)).sum())
            .collect(),
    )
}

/// Flips every entry independently with probability `p_e`.
pub fn corrupt<R: Rng + ?Sized>(matrix: &BinaryMatrix, p_e: f64, rng: &mut R) -> BinaryMatrix {
    let mut out = matrix.clone();
    for e in &mut out.entries {
        // One uniform per entry regardless of p_e keeps the stream aligned.
        if rng.random::<f64>() < p_e {
            *e ^= 1;
        }
    }
    out
}

/// Noiseless count vector of `state`; equal to
/// `count_vector(&binary_matrix(state, net))` without building the matrix.
pub fn simulate_counts(state: &TargetState, net: &SensorNetwork) -> CountVector {
    CountVector(
        net.locations
            .iter()
            .map(|&l| {
                state
                    .positions
                    .iter()
                    .zip(&state.velocities)
                    .map(|(&x, &v)| u32::from(indicator(x, v, l)))
                    .sum()
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn indicator_examples() {
        assert_eq!(indicator(v(1.0, 0.0), v(1.0, 0.0), Vec2::ZERO), 0);
        assert_eq!(indicator(v(1.0, 0.0), v(-1.0, 0.0), Vec2::ZERO), 1);
        // (1,2).(-1,-2) = -5
        assert_eq!(indicator(v(2.0, 3.0), v(-1.0, -2.0), v(1.0, 1.0)), 1);
    }

    #[test]
    fn indicator_degenerate_cases_are_moving_away() {
        assert_eq!(indicator(v(3.0, 1.0), Vec2::ZERO, Vec2::ZERO), 0);
        // tangential motion: inner product exactly zero
        assert_eq!(indicator(v(1.0, 0.0), v(0.0, 1.0), Vec2::ZERO), 0);
    }

    #[test]
    fn single_target_approaching_everything_gives_ones() {
        let net = SensorNetwork::grid(3, 1.0, 0.0).unwrap();
        let state = TargetState::single(v(10.0, 0.0), v(-1.0, 0.0));
        let m = binary_matrix(&state, &net);
        assert_eq!(m.ones(), 9);
    }

    #[test]
    fn opposite_targets_give_complementary_columns() {
        let net = SensorNetwork::grid(3, 1.0, 0.0).unwrap();
        let state = TargetState::new(
            vec![v(10.0, 0.0), v(10.0, 0.0)],
            vec![v(-1.0, 0.0), v(1.0, 0.0)],
        )
        .unwrap();
        let m = binary_matrix(&state, &net);
        for i in 0..net.n_sensors() {
            assert_eq!(m.get(i, 0), 1 - m.get(i, 1));
        }
    }

    #[test]
    fn binary_matrix_matches_entrywise_indicator() {
        let net = SensorNetwork::new(vec![v(0.0, 0.0), v(5.0, -2.0), v(-3.0, 4.0)], 0.0).unwrap();
        let state = TargetState::new(
            vec![v(1.0, 1.0), v(-2.0, 0.5)],
            vec![v(0.3, -1.0), v(1.0, 0.2)],
        )
        .unwrap();
        let m = binary_matrix(&state, &net);
        for i in 0..3 {
            for j in 0..2 {
                let dot = (state.positions[j] - net.locations[i]).dot(state.velocities[j]);
                assert_eq!(m.get(i, j), u8::from(dot < 0.0), "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn count_vector_examples() {
        let zero = BinaryMatrix::zeros(4, 3);
        assert_eq!(count_vector(&zero).0, vec![0; 4]);
        let ones = BinaryMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(count_vector(&ones).0, vec![2, 2]);
        let m = BinaryMatrix::from_rows(&[vec![0, 1], vec![1, 1], vec![0, 0]]).unwrap();
        assert_eq!(count_vector(&m).0, vec![1, 2, 0]);
    }

    #[test]
    fn corrupt_with_zero_probability_is_identity() {
        let m = BinaryMatrix::from_rows(&[vec![0, 1], vec![1, 1], vec![0, 0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(corrupt(&m, 0.0, &mut rng), m);
    }

    #[test]
    fn corrupt_half_flips_half() {
        let m = BinaryMatrix::zeros(100, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let flipped = corrupt(&m, 0.5, &mut rng).ones() as f64;
        let n = 10_000.0;
        let sd = (n * 0.25f64).sqrt();
        assert!((flipped - n * 0.5).abs() < 3.0 * sd, "{flipped}");
    }

    #[test]
    fn corrupt_mean_flip_count() {
        // 64 x 2 entries, p = 0.05: mean 6.4 flips, per-draw variance 128 * 0.05 * 0.95
        let m = BinaryMatrix::zeros(64, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 10_000;
        let total: usize = (0..draws).map(|_| corrupt(&m, 0.05, &mut rng).ones()).sum();
        let mean = total as f64 / draws as f64;
        let se = (128.0 * 0.05 * 0.95 / draws as f64).sqrt();
        assert!((mean - 6.4).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn corrupt_is_an_involution_under_the_same_mask() {
        let base = BinaryMatrix::from_rows(&[vec![0, 1, 1], vec![1, 0, 0]]).unwrap();
        let once = corrupt(&base, 0.3, &mut ChaCha8Rng::seed_from_u64(9));
        let twice = corrupt(&once, 0.3, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(twice, base);
    }

    #[test]
    fn network_validation() {
        assert!(SensorNetwork::new(vec![], 0.0).is_err());
        assert!(SensorNetwork::new(vec![v(0.0, 0.0)], 0.5).is_err());
        assert!(SensorNetwork::new(vec![v(0.0, 0.0), v(0.0, 0.0)], 0.1).is_err());
        let grid = SensorNetwork::grid(4, 50.0, 0.1).unwrap();
        assert_eq!(grid.n_sensors(), 16);
        assert_eq!(grid.locations[0], v(-50.0, -50.0));
        assert_eq!(grid.locations[15], v(50.0, 50.0));
    }

    #[test]
    fn state_validation() {
        assert!(TargetState::new(vec![], vec![]).is_err());
        assert!(TargetState::new(vec![Vec2::ZERO], vec![]).is_err());
        assert!(TargetState::new(vec![v(f64::NAN, 0.0)], vec![Vec2::ZERO]).is_err());
    }

    fn arb_vec2() -> impl Strategy<Value = Vec2> {
        (-60.0..60.0f64, -60.0..60.0f64).prop_map(|(x, y)| Vec2::new(x, y))
    }

    fn arb_state(max_targets: usize) -> impl Strategy<Value = TargetState> {
        (1..=max_targets).prop_flat_map(|n| {
            (
                prop::collection::vec(arb_vec2(), n),
                prop::collection::vec(arb_vec2(), n),
            )
                .prop_map(|(p, v)| TargetState::new(p, v).unwrap())
        })
    }

    fn arb_net() -> impl Strategy<Value = SensorNetwork> {
        prop::collection::vec(arb_vec2(), 1..12).prop_map(|mut locs| {
            locs.dedup();
            let mut uniq: Vec<Vec2> = Vec::new();
            for l in locs {
                if !uniq.contains(&l) {
                    uniq.push(l);
                }
            }
            SensorNetwork::new(uniq, 0.0).unwrap()
        })
    }

    proptest! {
        #[test]
        fn counts_bounded_by_target_count(state in arb_state(5), net in arb_net()) {
            let c = count_vector(&binary_matrix(&state, &net));
            prop_assert!(c.0.iter().all(|&k| k as usize <= state.n_targets()));
            prop_assert_eq!(simulate_counts(&state, &net), c);
        }

        #[test]
        fn sensor_permutation_permutes_counts(
            state in arb_state(4),
            net in arb_net(),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let mut order: Vec<usize> = (0..net.n_sensors()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let permuted = SensorNetwork::new(
                order.iter().map(|&i| net.locations[i]).collect(), 0.0).unwrap();
            let c = simulate_counts(&state, &net);
            let cp = simulate_counts(&state, &permuted);
            for (k, &i) in order.iter().enumerate() {
                prop_assert_eq!(cp.0[k], c.0[i]);
            }
        }

        #[test]
        fn target_permutation_leaves_counts(state in arb_state(5), net in arb_net()) {
            let mut rev = state.clone();
            rev.positions.reverse();
            rev.velocities.reverse();
            prop_assert_eq!(simulate_counts(&rev, &net), simulate_counts(&state, &net));
        }

        #[test]
        fn indicator_scale_invariant(p in arb_vec2(), vel in arb_vec2(), l in arb_vec2(), k in 0.01..100.0f64) {
            prop_assert_eq!(indicator(p, vel, l), indicator(p, vel * k, l));
        }
    }
}
