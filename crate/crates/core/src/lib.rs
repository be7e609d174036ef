//! Distributed minimum-variance estimation of a slowly varying scalar signal
//! over a wireless sensor network with Bernoulli packet losses.
//!
//! Each node tracks the common signal by mixing its neighbors' previous
//! estimates and current measurements with weights that minimize the local
//! error variance subject to a network-stability cap on the estimate weights.
//! The crate provides:
//!
//! - [`topology`]: geometric, line and Cayley communication graphs with the
//!   closed-neighborhood and two-hop queries the stability constraint needs;
//! - [`channel`]: per-link Bernoulli loss models and per-step reception
//!   realizations;
//! - [`thresholds`]: the fixed-point solver for the per-node caps on
//!   `||k_i ∘ phi_i||^2` that keep the global weight matrix contractive;
//! - [`filter`]: the proposed per-node estimator (closed-form constrained
//!   minimum-variance weights with a bisection on the Lagrange multiplier,
//!   plus covariance tracking with rejoin re-initialization);
//! - [`baselines`]: the four comparison estimators E1-E4;
//! - [`bounds`]: closed-form performance bounds and the contraction-rate
//!   selection rule;
//! - [`sim`]: a seeded synchronous-round simulation engine with Monte Carlo
//!   aggregation.

pub mod baselines;
pub mod bounds;
pub mod channel;
pub mod filter;
pub(crate) mod linalg;
pub mod seed;
pub mod sim;
pub mod thresholds;
pub mod topology;

pub use channel::{LossModel, LossRealization};
pub use filter::{FilterParams, NodeState};
pub use sim::{EstimatorKind, SimConfig, SimReport};
pub use thresholds::ThresholdVector;
pub use topology::{ThetaMode, Topology, TwoHopSet};
