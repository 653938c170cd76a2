use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::Estimate;
use crate::sim::{extrapolate, propagate, MotionParams};
use crate::{Error, Result, TargetState, Vec2};

/// Proposal distribution of one timestep.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    /// One motion-model step from the previous estimate. Positions are a
    /// point mass at `x + v`; velocities are `N(v, sigma2 I)`.
    Transition {
        from: TargetState,
        motion: MotionParams,
    },
    /// Start-of-track prior: positions uniform on a disc around `center`,
    /// velocities `N(center velocity, velocity_sd^2 I)`.
    Initial {
        center: TargetState,
        radius: f64,
        velocity_sd: f64,
    },
    /// One motion-model step from a uniformly chosen member of the previous
    /// particle population. `anchor` is the previous point estimate.
    Population {
        ancestors: Vec<TargetState>,
        anchor: TargetState,
        motion: MotionParams,
    },
}

impl Prior {
    pub fn transition(prev: &Estimate, motion: MotionParams) -> Self {
        Self::Transition {
            from: prev.state.clone(),
            motion,
        }
    }

    pub fn population(ancestors: Vec<TargetState>, anchor: &Estimate, motion: MotionParams) -> Result<Self> {
        if ancestors.is_empty() {
            return Err(Error::Config("empty particle population".into()));
        }
        let n = anchor.state.n_targets();
        if let Some(bad) = ancestors.iter().find(|a| a.n_targets() != n) {
            return Err(Error::TargetCountMismatch {
                expected: n,
                found: bad.n_targets(),
            });
        }
        Ok(Self::Population {
            ancestors,
            anchor: anchor.state.clone(),
            motion,
        })
    }

    pub fn n_targets(&self) -> usize {
        self.reference(None).n_targets()
    }

    /// State the pseudo-likelihood compares a proposal against: its parent
    /// in the population, or the previous estimate / initial center.
    pub fn reference(&self, parent: Option<usize>) -> &TargetState {
        match self {
            Self::Transition { from, .. } => from,
            Self::Initial { center, .. } => center,
            Self::Population {
                ancestors, anchor, ..
            } => parent.map_or(anchor, |a| &ancestors[a]),
        }
    }

    pub fn mean(&self) -> TargetState {
        match self {
            Self::Transition { from, .. } => extrapolate(from),
            Self::Initial { center, .. } => center.clone(),
            Self::Population { ancestors, .. } => {
                let moved: Vec<TargetState> = ancestors.iter().map(extrapolate).collect();
                TargetState::mean(&moved).expect("population is non-empty")
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TargetState {
        self.sample_with_parent(rng).0
    }

    /// Draw plus the index of the population member it descends from
    /// (`None` for the single-reference priors).
    pub fn sample_with_parent<R: Rng + ?Sized>(&self, rng: &mut R) -> (TargetState, Option<usize>) {
        match self {
            Self::Population {
                ancestors, motion, ..
            } => {
                let a = rng.random_range(0..ancestors.len());
                (propagate(&ancestors[a], motion, rng), Some(a))
            }
            _ => (self.sample_single(rng), None),
        }
    }

    fn sample_single<R: Rng + ?Sized>(&self, rng: &mut R) -> TargetState {
        match self {
            Self::Population { .. } => unreachable!("handled by sample_with_parent"),
            Self::Transition { from, motion } => propagate(from, motion, rng),
            Self::Initial {
                center,
                radius,
                velocity_sd,
            } => {
                let noise = Normal::new(0.0, *velocity_sd).expect("positive velocity sd");
                let mut positions = Vec::with_capacity(center.n_targets());
                let mut velocities = Vec::with_capacity(center.n_targets());
                for (&x, &v) in center.positions.iter().zip(&center.velocities) {
                    let r = radius * rng.random::<f64>().sqrt();
                    let a = rng.random_range(0.0..std::f64::consts::TAU);
                    positions.push(x + Vec2::from_polar(r, a));
                    velocities.push(Vec2::new(v.x + noise.sample(rng), v.y + noise.sample(rng)));
                }
                TargetState {
                    positions,
                    velocities,
                }
            }
        }
    }

    /// Log density up to an additive constant. Only the velocity part
    /// varies inside the support; states outside the support get `-inf`.
    ///
    /// For a population prior the density is that of the mixture component
    /// of `parent` (the proposal on the space augmented with the parent
    /// index); without a parent the state is treated as unsupported.
    pub fn log_density(&self, state: &TargetState, parent: Option<usize>) -> f64 {
        let (from, var) = match self {
            Self::Transition { from, motion } => (from, motion.sigma2),
            Self::Initial {
                center,
                velocity_sd,
                ..
            } => (center, velocity_sd * velocity_sd),
            Self::Population {
                ancestors, motion, ..
            } => match parent {
                Some(a) => (&ancestors[a], motion.sigma2),
                None => return f64::NEG_INFINITY,
            },
        };
        let mut log_q = 0.0;
        for (&v, &m) in state.velocities.iter().zip(&from.velocities) {
            log_q -= (v - m).norm_sq() / (2.0 * var);
        }
        let in_support = match self {
            Self::Transition { .. } | Self::Population { .. } => state
                .positions
                .iter()
                .zip(from.positions.iter().zip(&from.velocities))
                .all(|(&p, (&x, &v))| p == x + v),
            Self::Initial { center, radius, .. } => state
                .positions
                .iter()
                .zip(&center.positions)
                .all(|(&p, &c)| (p - c).norm() <= *radius * (1.0 + 1e-12)),
        };
        if in_support {
            log_q
        } else {
            f64::NEG_INFINITY
        }
    }

    pub(crate) fn check_targets(&self, n_targets: usize) -> Result<()> {
        if self.n_targets() != n_targets {
            return Err(Error::TargetCountMismatch {
                expected: n_targets,
                found: self.n_targets(),
            });
        }
        Ok(())
    }
}

/// One draw from the motion prior around the previous estimate.
pub fn prior_sample<R: Rng + ?Sized>(
    prev: &Estimate,
    motion: &MotionParams,
    rng: &mut R,
) -> TargetState {
    propagate(&prev.state, motion, rng)
}
