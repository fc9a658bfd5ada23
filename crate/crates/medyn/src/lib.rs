//! medyn: weighted-median opinion dynamics on influence networks.
//!
//! The library covers the full pipeline: network construction and random
//! generation, the weighted-median update and its cost-minimization view,
//! cohesion structure (cohesive sets, decisive links), equilibrium
//! classification, asynchronous dynamics and steering sequences, averaging
//! baselines, Monte Carlo experiments, and validation against multi-round
//! estimation-game data.

pub mod baselines;
pub mod cohesion;
pub mod dynamics;
pub mod equilibria;
pub mod experiments;
pub mod generate;
pub mod median;
pub mod metrics;
pub mod network;
pub mod sampling;
pub mod seed;
pub mod subset_sum;
pub mod validation;

pub use network::{InfluenceNetwork, NetworkError};
