//! Likelihood-free tracking of multiple targets through a network of binary
//! directional sensors.
//!
//! Each sensor only reports whether a target is getting closer or moving
//! away. With several unresolved targets a sensor reports the number of
//! approaching targets, and the joint likelihood of those counts has no
//! closed form. The samplers in [`inference`] therefore work by simulating
//! count vectors from candidate states and accepting candidates whose
//! simulated counts fall within a tolerance of the observation.
//!
//! Layout:
//!
//! * [`model`]: sensor geometry, binary matrices, count vectors, sensor errors.
//! * [`sim`]: the motion model and scenario synthesis.
//! * [`metrics`]: the count distance, tolerance tuning and the motion
//!   pseudo-likelihood.
//! * [`inference`]: rejection, random-walk and parallel-tempering ABC
//!   samplers, plus an exact-likelihood MCMC baseline for one target.
//! * [`evaluation`]: assignment-matched RMSE and the Monte Carlo harness.

pub mod error;
pub mod evaluation;
pub mod inference;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use model::{BinaryMatrix, CountVector, SensorNetwork, TargetState, Vec2};
