//! Random influence-network generation.
//!
//! Topologies come from the Barabasi-Albert or Watts-Strogatz families
//! (undirected, turned into a symmetric link set). A self-loop is added to
//! every node unless disabled. Each directed link then receives an
//! independent Uniform(0,1] weight and rows are normalized.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::network::{InfluenceNetwork, NetworkError};
use crate::seed::rng_from;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Topology {
    BarabasiAlbert { m: usize },
    WattsStrogatz { d: usize, beta: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(flatten)]
    pub topology: Topology,
    pub n: usize,
    #[serde(default = "default_true")]
    pub self_loops: bool,
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

impl GeneratorConfig {
    pub fn ba(n: usize, m: usize, seed: u64) -> Self {
        GeneratorConfig { topology: Topology::BarabasiAlbert { m }, n, self_loops: true, seed }
    }

    pub fn ws(n: usize, d: usize, beta: f64, seed: u64) -> Self {
        GeneratorConfig { topology: Topology::WattsStrogatz { d, beta }, n, self_loops: true, seed }
    }

    fn check(&self) -> Result<(), NetworkError> {
        if self.n < 2 {
            return Err(NetworkError::BadParameters("n must be at least 2".into()));
        }
        match self.topology {
            Topology::BarabasiAlbert { m } => {
                if m == 0 || m >= self.n {
                    return Err(NetworkError::BadParameters(format!(
                        "BA attachment m = {m} must satisfy 1 <= m < n"
                    )));
                }
            }
            Topology::WattsStrogatz { d, beta } => {
                if d == 0 || d % 2 != 0 || d >= self.n {
                    return Err(NetworkError::BadParameters(format!(
                        "WS degree d = {d} must be even and 0 < d < n"
                    )));
                }
                if !(0.0..=1.0).contains(&beta) {
                    return Err(NetworkError::BadParameters(format!(
                        "rewiring probability beta = {beta} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Generates a network per `config`; deterministic for a fixed seed.
pub fn generate(config: &GeneratorConfig) -> Result<InfluenceNetwork, NetworkError> {
    config.check()?;
    let mut rng = rng_from(config.seed);
    let edges = match config.topology {
        Topology::BarabasiAlbert { m } => ba_edges(config.n, m, &mut rng),
        Topology::WattsStrogatz { d, beta } => ws_edges(config.n, d, beta, &mut rng),
    };
    let n = config.n;
    let mut adjacency: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (a, b) in edges {
        adjacency[a].insert(b);
        adjacency[b].insert(a);
    }
    if config.self_loops {
        for (i, nbrs) in adjacency.iter_mut().enumerate() {
            nbrs.insert(i);
        }
    }
    // independent Uniform(0,1] weight per directed link, then row-normalize
    let mut raw = vec![vec![0.0; n]; n];
    for (i, nbrs) in adjacency.iter().enumerate() {
        for &j in nbrs {
            raw[i][j] = 1.0 - rng.gen::<f64>(); // (0, 1]
        }
    }
    InfluenceNetwork::normalize_rows(&raw)
}

/// Preferential attachment: each new node links to `m` distinct existing
/// nodes chosen proportionally to degree (repeated-endpoint urn).
fn ba_edges(n: usize, m: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    // seed clique on the first m+1 nodes
    let m0 = m + 1;
    let mut urn: Vec<usize> = Vec::new();
    for a in 0..m0 {
        for b in (a + 1)..m0 {
            edges.push((a, b));
            urn.push(a);
            urn.push(b);
        }
    }
    for v in m0..n {
        let mut targets = BTreeSet::new();
        while targets.len() < m {
            let t = urn[rng.gen_range(0..urn.len())];
            targets.insert(t);
        }
        for &t in &targets {
            edges.push((v, t));
            urn.push(v);
            urn.push(t);
        }
    }
    edges
}

/// Ring lattice with d/2 neighbors on each side, then each lattice edge is
/// rewired with probability beta (the endpoint away from the owner moves to
/// a uniformly random non-self, non-duplicate target).
fn ws_edges(n: usize, d: usize, beta: f64, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut adjacency: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut lattice = Vec::new();
    for i in 0..n {
        for k in 1..=(d / 2) {
            let j = (i + k) % n;
            lattice.push((i, j));
            adjacency[i].insert(j);
            adjacency[j].insert(i);
        }
    }
    for &(i, j) in &lattice {
        if rng.gen::<f64>() < beta {
            // candidates: not i, not already adjacent to i
            let candidates: Vec<usize> = (0..n)
                .filter(|&t| t != i && t != j && !adjacency[i].contains(&t))
                .collect();
            if let Some(&t) = candidates.choose(rng) {
                adjacency[i].remove(&j);
                adjacency[j].remove(&i);
                adjacency[i].insert(t);
                adjacency[t].insert(i);
            }
        }
    }
    let mut edges = Vec::new();
    for (i, nbrs) in adjacency.iter().enumerate() {
        for &j in nbrs {
            if j > i {
                edges.push((i, j));
            }
        }
    }
    edges
}
