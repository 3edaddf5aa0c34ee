//! Off-policy actor-critic with emphatic weightings: exact finite-MDP oracles,
//! emphasis estimators, linear actors and critics, the benchmark domains, and
//! an experiment harness.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the harness and environments use.

pub mod actors;
pub mod critics;
pub mod emphasis;
pub mod env;
pub mod evaluation;
pub mod features;
pub mod harness;
pub mod linalg;
pub mod mdp;
pub mod scalar;
pub mod stats;
pub mod verify;

pub use scalar::Scalar;

/// Seedable generator used by every stochastic component.
pub type Prng = rand_chacha::ChaCha8Rng;

pub type Mdp = mdp::FiniteMdp<f64>;
pub type Policy = mdp::TabularPolicy<f64>;
pub type Analysis = mdp::ExactAnalysis<f64>;
pub type Entropy = mdp::EntropyConfig<f64>;
