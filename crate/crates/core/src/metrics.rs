//! Count distance, tolerance tuning, and the motion pseudo-likelihood.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{CountVector, Error, Result, TargetState, Vec2};

/// Squared Euclidean distance between count vectors.
pub fn rho(c1: &CountVector, c2: &CountVector) -> Result<f64> {
    if c1.len() != c2.len() {
        return Err(Error::LengthMismatch {
            left: c1.len(),
            right: c2.len(),
        });
    }
    Ok(rho_unchecked(c1.as_slice(), c2.as_slice()))
}

/// Integer form of [`rho`]; exact for any realistic sensor count.
pub(crate) fn rho_unchecked(c1: &[u32], c2: &[u32]) -> f64 {
    c1.iter()
        .zip(c2)
        .map(|(&a, &b)| {
            let d = i64::from(a) - i64::from(b);
            d * d
        })
        .sum::<i64>() as f64
}

/// `N_s (p_e N_t)^2`, or 1 for error-free sensors.
///
/// With integer counts and a strict `rho < eps` test, any tolerance in
/// `(0, 1]` demands an exact match, so 1 is used when `p_e == 0`.
pub fn tune_epsilon(n_sensors: usize, n_targets: usize, p_e: f64) -> f64 {
    if p_e == 0.0 {
        return 1.0;
    }
    let per_sensor = p_e * n_targets as f64;
    n_sensors as f64 * per_sensor * per_sensor
}

/// Widths of the turn-angle and speed-change kernels of the pseudo-likelihood.
///
/// Infinite widths flatten the corresponding kernel to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoLikelihoodParams {
    pub sigma_bearing: f64,
    pub sigma_speed: f64,
}

impl Default for PseudoLikelihoodParams {
    fn default() -> Self {
        Self {
            sigma_bearing: PI / 8.0,
            sigma_speed: 0.5,
        }
    }
}

impl PseudoLikelihoodParams {
    pub fn new(sigma_bearing: f64, sigma_speed: f64) -> Result<Self> {
        let p = Self {
            sigma_bearing,
            sigma_speed,
        };
        p.validate()?;
        Ok(p)
    }

    /// Flat kernel: `f == 1` everywhere.
    pub fn flat() -> Self {
        Self {
            sigma_bearing: f64::INFINITY,
            sigma_speed: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_bearing > 0.0 && self.sigma_speed > 0.0) {
            return Err(Error::Config(format!(
                "pseudo-likelihood widths must be positive, got ({}, {})",
                self.sigma_bearing, self.sigma_speed
            )));
        }
        Ok(())
    }
}

/// Signed angle turning `from` into `to`, in `(-pi, pi]`.
///
/// `None` when either vector is zero.
pub fn turn_angle(from: Vec2, to: Vec2) -> Option<f64> {
    if from == Vec2::ZERO || to == Vec2::ZERO {
        return None;
    }
    let a = from.cross(to).atan2(from.dot(to));
    Some(if a <= -PI { a + 2.0 * PI } else { a })
}

/// Logarithm of [`pseudo_likelihood`].
pub fn log_pseudo_likelihood(
    proposed: &TargetState,
    previous: &TargetState,
    params: &PseudoLikelihoodParams,
) -> Result<f64> {
    if proposed.n_targets() != previous.n_targets() {
        return Err(Error::TargetCountMismatch {
            expected: previous.n_targets(),
            found: proposed.n_targets(),
        });
    }
    let mut log_f = 0.0;
    for (&new, &old) in proposed.velocities.iter().zip(&previous.velocities) {
        if let Some(theta) = turn_angle(old, new) {
            log_f -= gaussian_exponent(theta, params.sigma_bearing);
        }
        log_f -= gaussian_exponent(new.norm() - old.norm(), params.sigma_speed);
    }
    Ok(log_f)
}

fn gaussian_exponent(delta: f64, sigma: f64) -> f64 {
    if sigma.is_infinite() {
        0.0
    } else {
        delta * delta / (2.0 * sigma * sigma)
    }
}

/// Low-maneuver score of a proposed joint state relative to the previous
/// one: the product over targets of Gaussian kernels on the turn angle and
/// on the change of speed. Lies in `(0, 1]` up to floating-point underflow.
pub fn pseudo_likelihood(
    proposed: &TargetState,
    previous: &TargetState,
    params: &PseudoLikelihoodParams,
) -> Result<f64> {
    log_pseudo_likelihood(proposed, previous, params).map(f64::exp)
}
