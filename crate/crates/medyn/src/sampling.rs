//! Initial-opinion distribution samplers.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::rng_from;

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("unknown distribution {0:?}")]
    UnknownDistribution(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialDistribution {
    /// Uniform on [0, 1].
    Uniform01,
    /// Beta(2, 2): uni-modal, symmetric.
    UniModal,
    /// Beta(2, 7): uni-modal, skewed.
    Skewed,
    /// Beta(2, 10) reflected with probability 1/2.
    Bimodal,
    /// Beta(2, 17), its reflection, and Beta(12, 12) with
    /// probabilities 0.33 / 0.33 / 0.34.
    Trimodal,
    /// Uniform on [-1, 1]; the extremeness studies.
    UniformSym,
}

impl InitialDistribution {
    pub fn parse(id: &str) -> Result<Self, SamplingError> {
        Ok(match id {
            "uniform01" => Self::Uniform01,
            "unimodal" => Self::UniModal,
            "skewed" => Self::Skewed,
            "bimodal" => Self::Bimodal,
            "trimodal" => Self::Trimodal,
            "uniform_sym" => Self::UniformSym,
            other => return Err(SamplingError::UnknownDistribution(other.into())),
        })
    }
}

/// n i.i.d. samples, deterministic per seed.
pub fn sample_initial(dist: InitialDistribution, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from(seed);
    let mut out = Vec::with_capacity(n);
    match dist {
        InitialDistribution::Uniform01 => {
            for _ in 0..n {
                out.push(rng.gen::<f64>());
            }
        }
        InitialDistribution::UniModal => {
            let beta = Beta::new(2.0, 2.0).unwrap();
            for _ in 0..n {
                out.push(beta.sample(&mut rng));
            }
        }
        InitialDistribution::Skewed => {
            let beta = Beta::new(2.0, 7.0).unwrap();
            for _ in 0..n {
                out.push(beta.sample(&mut rng));
            }
        }
        InitialDistribution::Bimodal => {
            let beta = Beta::new(2.0, 10.0).unwrap();
            for _ in 0..n {
                let y = beta.sample(&mut rng);
                out.push(if rng.gen::<f64>() < 0.5 { y } else { 1.0 - y });
            }
        }
        InitialDistribution::Trimodal => {
            let side = Beta::new(2.0, 17.0).unwrap();
            let center = Beta::new(12.0, 12.0).unwrap();
            for _ in 0..n {
                let y = side.sample(&mut rng);
                let z = center.sample(&mut rng);
                let u = rng.gen::<f64>();
                out.push(if u < 0.33 {
                    y
                } else if u < 0.66 {
                    1.0 - y
                } else {
                    z
                });
            }
        }
        InitialDistribution::UniformSym => {
            for _ in 0..n {
                out.push(rng.gen_range(-1.0..=1.0));
            }
        }
    }
    out
}
