//! Centralities, opinion categories, extremist focus, and the radial
//! layout used for network plots.
//!
//! Closeness and betweenness are computed on the unweighted positive-
//! support digraph with self-loops ignored; in-degree centrality is the
//! weighted column sum including the self-loop; eigenvector centrality is
//! the dominant left eigenvector of W.

use std::collections::VecDeque;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::network::InfluenceNetwork;
use crate::seed::rng_from;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("opinion {0} outside [-1, 1]")]
    OutOfRange(f64),
    #[error("power iteration did not converge")]
    PowerIterationDiverged,
}

/// Sum of incoming link weights, self-loop included.
pub fn in_degree_centrality(network: &InfluenceNetwork) -> Vec<f64> {
    let n = network.agent_count();
    let mut c = vec![0.0; n];
    for i in 0..n {
        for &(j, w) in network.out_neighbors(i) {
            c[j] += w;
        }
    }
    c
}

fn support_digraph(network: &InfluenceNetwork) -> Vec<Vec<usize>> {
    (0..network.agent_count())
        .map(|i| {
            network
                .out_neighbors(i)
                .iter()
                .filter(|&&(j, _)| j != i)
                .map(|&(j, _)| j)
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TopologyCentralities {
    pub closeness: Vec<f64>,
    pub betweenness: Vec<f64>,
    pub eigenvector: Vec<f64>,
}

/// Closeness, betweenness, eigenvector centralities.
pub fn topology_centralities(
    network: &InfluenceNetwork,
) -> Result<TopologyCentralities, MetricsError> {
    let adj = support_digraph(network);
    Ok(TopologyCentralities {
        closeness: closeness(&adj),
        betweenness: betweenness(&adj),
        eigenvector: eigenvector_centrality(network)?,
    })
}

/// (reached - 1) / sum of BFS distances, 0 for isolated nodes.
fn closeness(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    (0..n)
        .map(|s| {
            let dist = bfs(adj, s);
            let mut total = 0usize;
            let mut reached = 0usize;
            for (v, &d) in dist.iter().enumerate() {
                if v != s && d != usize::MAX {
                    total += d;
                    reached += 1;
                }
            }
            if total == 0 {
                0.0
            } else {
                reached as f64 / total as f64
            }
        })
        .collect()
}

fn bfs(adj: &[Vec<usize>], s: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[s] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    dist
}

/// Brandes' shortest-path betweenness on the unweighted digraph.
fn betweenness(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    let mut score = vec![0.0; n];
    for s in 0..n {
        let mut stack = Vec::new();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0; n];
        let mut dist = vec![usize::MAX; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            stack.push(u);
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
                if dist[v] == dist[u] + 1 {
                    sigma[v] += sigma[u];
                    preds[v].push(u);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                score[w] += delta[w];
            }
        }
    }
    score
}

/// Dominant left eigenvector of W by power iteration, normalized to sum 1.
pub fn eigenvector_centrality(network: &InfluenceNetwork) -> Result<Vec<f64>, MetricsError> {
    let n = network.agent_count();
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..1000 {
        let mut next = vec![0.0; n];
        for (i, &vi) in v.iter().enumerate() {
            for &(j, w) in network.out_neighbors(i) {
                next[j] += vi * w;
            }
        }
        let sum: f64 = next.iter().sum();
        if sum <= 0.0 || !sum.is_finite() {
            return Err(MetricsError::PowerIterationDiverged);
        }
        next.iter_mut().for_each(|x| *x /= sum);
        let diff: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if diff < 1e-10 {
            return Ok(v);
        }
    }
    Err(MetricsError::PowerIterationDiverged)
}

/// Opinion extremeness bins partitioning [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OpinionCategory {
    Moderate,
    Biased,
    Radical,
    Extreme,
}

/// Bin table: moderate [-0.25, 0.25]; biased (0.25, 0.5] mirrored;
/// radical (0.5, 0.75] mirrored; extreme (0.75, 1] mirrored.
pub fn categorize_one(v: f64) -> Result<OpinionCategory, MetricsError> {
    if !(-1.0..=1.0).contains(&v) {
        return Err(MetricsError::OutOfRange(v));
    }
    let a = v.abs();
    Ok(if a <= 0.25 {
        OpinionCategory::Moderate
    } else if a <= 0.5 {
        OpinionCategory::Biased
    } else if a <= 0.75 {
        OpinionCategory::Radical
    } else {
        OpinionCategory::Extreme
    })
}

pub fn categorize(x: &[f64]) -> Result<Vec<OpinionCategory>, MetricsError> {
    x.iter().map(|&v| categorize_one(v)).collect()
}

/// Fraction of non-self neighbors holding extreme opinions; 0 when the
/// agent has no non-self neighbor.
pub fn extremist_focus(
    network: &InfluenceNetwork,
    x: &[f64],
) -> Result<Vec<f64>, MetricsError> {
    let cats = categorize(x)?;
    Ok((0..network.agent_count())
        .map(|i| {
            let nbrs: Vec<usize> = network
                .out_neighbors(i)
                .iter()
                .filter(|&&(j, _)| j != i)
                .map(|&(j, _)| j)
                .collect();
            if nbrs.is_empty() {
                0.0
            } else {
                let extreme = nbrs
                    .iter()
                    .filter(|&&j| cats[j] == OpinionCategory::Extreme)
                    .count();
                extreme as f64 / nbrs.len() as f64
            }
        })
        .collect())
}

/// Plot layout: radius (max_k d_k - d_i)^5 normalized to [0, 1], seeded
/// uniform angle.
pub fn radial_layout(network: &InfluenceNetwork, seed: u64) -> Vec<(f64, f64)> {
    let degrees = in_degree_centrality(network);
    let max_d = degrees.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = degrees.iter().map(|&d| (max_d - d).powi(5)).collect();
    let max_r = raw.iter().cloned().fold(0.0, f64::max);
    let mut rng = rng_from(seed);
    raw.iter()
        .map(|&r| {
            let radius = if max_r > 0.0 { r / max_r } else { 0.0 };
            (radius, rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect()
}
