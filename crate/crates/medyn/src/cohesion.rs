//! Cohesive sets, cohesive expansion, decisive links, and the decisive
//! subgraph.
//!
//! A set is cohesive when every member places at least 1/2 of its weight
//! inside the set. Expansion adds outsiders whose in-set weight is strictly
//! above 1/2; the strict/non-strict asymmetry between expansion and
//! cohesiveness is semantic and must not be "fixed".

use serde::Serialize;
use thiserror::Error;

use crate::network::InfluenceNetwork;
use crate::subset_sum::{subset_sum_in_window, Window, WindowCheck};

#[derive(Debug, Error, PartialEq)]
pub enum CohesionError {
    #[error("node set is empty")]
    EmptySet,
    #[error("n = {0} is too large for exhaustive enumeration (limit 22)")]
    TooLarge(usize),
    #[error("links {0:?} could not be classified exactly")]
    UncheckedLinks(Vec<(usize, usize)>),
}

/// Sorted, duplicate-free set of agent indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        NodeSet(members)
    }

    pub fn full(n: usize) -> Self {
        NodeSet((0..n).collect())
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn is_subset_of(&self, other: &NodeSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        NodeSet::new(v)
    }

    pub fn complement(&self, n: usize) -> NodeSet {
        NodeSet((0..n).filter(|&i| !self.contains(i)).collect())
    }

    fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.0 {
            m[i] = true;
        }
        m
    }
}

impl From<&[usize]> for NodeSet {
    fn from(s: &[usize]) -> Self {
        NodeSet::new(s.to_vec())
    }
}

/// True iff every member of `set` puts weight >= 1/2 inside `set`.
pub fn is_cohesive(network: &InfluenceNetwork, set: &NodeSet) -> Result<bool, CohesionError> {
    if set.is_empty() {
        return Err(CohesionError::EmptySet);
    }
    let mask = set.mask(network.agent_count());
    Ok(set.members().iter().all(|&i| network.weight_into(i, &mask) >= 0.5))
}

/// Closure of `set` under adding outsiders with in-set weight strictly
/// above 1/2. Order-independent; nodes are added in index order for
/// determinism.
pub fn cohesive_expansion(network: &InfluenceNetwork, set: &NodeSet) -> NodeSet {
    let n = network.agent_count();
    let mut mask = set.mask(n);
    loop {
        let next = (0..n).find(|&i| !mask[i] && network.weight_into(i, &mask) > 0.5);
        match next {
            Some(i) => mask[i] = true,
            None => break,
        }
    }
    NodeSet((0..n).filter(|&i| mask[i]).collect())
}

/// Cohesive expansion following a caller-supplied preference order over
/// candidate additions; used to check order-invariance.
pub fn cohesive_expansion_ordered(
    network: &InfluenceNetwork,
    set: &NodeSet,
    preference: &[usize],
) -> NodeSet {
    let n = network.agent_count();
    let mut mask = set.mask(n);
    loop {
        let next = preference
            .iter()
            .copied()
            .find(|&i| !mask[i] && network.weight_into(i, &mask) > 0.5);
        match next {
            Some(i) => mask[i] = true,
            None => break,
        }
    }
    NodeSet((0..n).filter(|&i| mask[i]).collect())
}

/// Cohesive, and no outsider has in-set weight strictly above 1/2.
pub fn is_maximal_cohesive(
    network: &InfluenceNetwork,
    set: &NodeSet,
) -> Result<bool, CohesionError> {
    if !is_cohesive(network, set)? {
        return Ok(false);
    }
    let n = network.agent_count();
    let mask = set.mask(n);
    Ok((0..n).all(|i| mask[i] || network.weight_into(i, &mask) <= 0.5))
}

/// Exhaustive test oracle over all nonempty subsets; gated at n <= 22.
pub fn enumerate_maximal_cohesive(
    network: &InfluenceNetwork,
) -> Result<Vec<NodeSet>, CohesionError> {
    let n = network.agent_count();
    if n > 22 {
        return Err(CohesionError::TooLarge(n));
    }
    let mut result = Vec::new();
    for bits in 1u32..(1u32 << n) {
        let set = NodeSet((0..n).filter(|&i| bits >> i & 1 == 1).collect());
        if is_maximal_cohesive(network, &set)? {
            result.push(set);
        }
    }
    Ok(result)
}

/// Per-link decisiveness over the positive-weight links.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisiveClassification {
    pub decisive: Vec<(usize, usize)>,
    pub indecisive: Vec<(usize, usize)>,
    /// Links whose row support exceeded the exact-check limit.
    pub unchecked: Vec<(usize, usize)>,
}

/// A link (i, j) is decisive iff some subset S of N_i \ {j} satisfies
/// 1/2 - w_ij <= sum(S) < 1/2; adding j then crosses the majority line.
pub fn classify_links(network: &InfluenceNetwork) -> DecisiveClassification {
    let mut out = DecisiveClassification {
        decisive: Vec::new(),
        indecisive: Vec::new(),
        unchecked: Vec::new(),
    };
    for i in 0..network.agent_count() {
        let row = network.out_neighbors(i);
        for (pos, &(j, w_ij)) in row.iter().enumerate() {
            let others: Vec<f64> = row
                .iter()
                .enumerate()
                .filter(|&(p, _)| p != pos)
                .map(|(_, &(_, w))| w)
                .collect();
            let window = Window {
                lo: 0.5 - w_ij,
                hi: 0.5,
                lo_inclusive: true,
                hi_inclusive: false,
            };
            match subset_sum_in_window(&others, window) {
                WindowCheck::Hit(_) => out.decisive.push((i, j)),
                WindowCheck::Miss => out.indecisive.push((i, j)),
                WindowCheck::Unchecked => out.unchecked.push((i, j)),
            }
        }
    }
    out
}

/// Unweighted digraph keeping only the decisive links.
pub fn decisive_subgraph(
    network: &InfluenceNetwork,
) -> Result<Vec<Vec<usize>>, CohesionError> {
    let classification = classify_links(network);
    if !classification.unchecked.is_empty() {
        return Err(CohesionError::UncheckedLinks(classification.unchecked));
    }
    let mut adj = vec![Vec::new(); network.agent_count()];
    for (i, j) in classification.decisive {
        adj[i].push(j);
    }
    Ok(adj)
}

/// True iff the condensation of `adj` has exactly one sink component,
/// i.e. some node is reachable from every node.
pub fn has_globally_reachable_node(adj: &[Vec<usize>]) -> bool {
    let n = adj.len();
    if n == 0 {
        return false;
    }
    let components = tarjan_scc(adj);
    let mut comp_of = vec![0usize; n];
    for (c, comp) in components.iter().enumerate() {
        for &v in comp {
            comp_of[v] = c;
        }
    }
    let mut is_sink = vec![true; components.len()];
    for (u, nbrs) in adj.iter().enumerate() {
        for &v in nbrs {
            if comp_of[u] != comp_of[v] {
                is_sink[comp_of[u]] = false;
            }
        }
    }
    is_sink.iter().filter(|&&s| s).count() == 1
}

/// Strongly connected components (iterative Tarjan).
pub fn tarjan_scc(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0usize;
    let mut components = Vec::new();

    // explicit call stack: (node, next child position)
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut child)) = call.last_mut() {
            if *child == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *child < adj[v].len() {
                let w = adj[v][*child];
                *child += 1;
                if index[w] == usize::MAX {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    components.push(comp);
                }
                call.pop();
                if let Some(&mut (parent, _)) = call.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                }
            }
        }
    }
    components
}

/// Cohesion report for the analyze surface.
#[derive(Debug, Serialize)]
pub struct CohesionReport {
    pub maximal_cohesive: Vec<Vec<usize>>,
    pub decisive: Vec<(usize, usize)>,
    pub indecisive: Vec<(usize, usize)>,
    pub globally_reachable: bool,
}

pub fn cohesion_report(network: &InfluenceNetwork) -> Result<CohesionReport, CohesionError> {
    let maximal = enumerate_maximal_cohesive(network)?;
    let classification = classify_links(network);
    if !classification.unchecked.is_empty() {
        return Err(CohesionError::UncheckedLinks(classification.unchecked));
    }
    let subgraph = decisive_subgraph(network)?;
    Ok(CohesionReport {
        maximal_cohesive: maximal.into_iter().map(|s| s.members().to_vec()).collect(),
        decisive: classification.decisive,
        indecisive: classification.indecisive,
        globally_reachable: has_globally_reachable_node(&subgraph),
    })
}

/// Two disjoint uniform triangles; the running disagreement fixture.
#[cfg(test)]
pub(crate) fn two_triangles() -> InfluenceNetwork {
    let t = 1.0 / 3.0;
    InfluenceNetwork::from_dense(&[
        vec![t, t, t, 0.0, 0.0, 0.0],
        vec![t, t, t, 0.0, 0.0, 0.0],
        vec![t, t, t, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, t, t, t],
        vec![0.0, 0.0, 0.0, t, t, t],
        vec![0.0, 0.0, 0.0, t, t, t],
    ])
    .unwrap()
}
