//! Row-stochastic influence networks.
//!
//! The influence matrix is stored sparsely: per agent, the list of
//! `(neighbor, weight)` pairs with strictly positive weight, in ascending
//! neighbor order. Rows must sum to 1 within `ROW_SUM_TOL`. Networks are
//! immutable after construction; every mutating operation returns a new
//! network.

use serde::de::Error as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::subset_sum::{subset_sum_in_window, Window, WindowCheck};

pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("negative weight at ({0}, {1})")]
    NegativeWeight(usize, usize),
    #[error("row {0} sums to {1}, expected 1")]
    RowSumOff(usize, f64),
    #[error("row {0} has zero sum, cannot normalize")]
    ZeroRow(usize),
    #[error("agent {0} has no non-self neighbor")]
    IsolatedAgent(usize),
    #[error("self weight of agent {0} is below the requested delta")]
    InsufficientSelfWeight(usize),
    #[error("non-finite weight at ({0}, {1})")]
    NonFiniteWeight(usize, usize),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("parse error: {0}")]
    ParseError(String),
}

/// Row-stochastic weighted directed graph; the matrix W of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceNetwork {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl InfluenceNetwork {
    /// Builds from a dense matrix, validating both invariants.
    pub fn from_dense(matrix: &[Vec<f64>]) -> Result<Self, NetworkError> {
        let n = matrix.len();
        let mut rows = Vec::with_capacity(n);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(NetworkError::BadParameters(format!(
                    "row {i} has length {}, expected {n}",
                    row.len()
                )));
            }
            let mut sparse = Vec::new();
            for (j, &w) in row.iter().enumerate() {
                if !w.is_finite() {
                    return Err(NetworkError::NonFiniteWeight(i, j));
                }
                if w < 0.0 {
                    return Err(NetworkError::NegativeWeight(i, j));
                }
                if w > 0.0 {
                    sparse.push((j, w));
                }
            }
            rows.push(sparse);
        }
        let net = InfluenceNetwork { n, rows };
        net.validate()?;
        Ok(net)
    }

    /// Builds from sparse rows (ascending neighbor order not required on
    /// input; duplicates rejected).
    pub fn from_sparse(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self, NetworkError> {
        if rows.len() != n {
            return Err(NetworkError::BadParameters(format!(
                "{} rows for n = {n}",
                rows.len()
            )));
        }
        let mut sorted_rows = Vec::with_capacity(n);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            for pair in row.windows(2) {
                if pair[0].0 == pair[1].0 {
                    return Err(NetworkError::ParseError(format!(
                        "duplicate entry ({i}, {})",
                        pair[0].0
                    )));
                }
            }
            for &(j, w) in &row {
                if j >= n {
                    return Err(NetworkError::BadParameters(format!(
                        "neighbor index {j} out of range in row {i}"
                    )));
                }
                if !w.is_finite() {
                    return Err(NetworkError::NonFiniteWeight(i, j));
                }
                if w < 0.0 {
                    return Err(NetworkError::NegativeWeight(i, j));
                }
            }
            row.retain(|&(_, w)| w > 0.0);
            sorted_rows.push(row);
        }
        let net = InfluenceNetwork { n, rows: sorted_rows };
        net.validate()?;
        Ok(net)
    }

    /// Divides each row of a nonnegative matrix by its sum.
    pub fn normalize_rows(raw: &[Vec<f64>]) -> Result<Self, NetworkError> {
        let n = raw.len();
        let mut dense = Vec::with_capacity(n);
        for (i, row) in raw.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if !w.is_finite() {
                    return Err(NetworkError::NonFiniteWeight(i, j));
                }
                if w < 0.0 {
                    return Err(NetworkError::NegativeWeight(i, j));
                }
            }
            let sum: f64 = row.iter().sum();
            if sum <= 0.0 {
                return Err(NetworkError::ZeroRow(i));
            }
            dense.push(row.iter().map(|&w| w / sum).collect::<Vec<f64>>());
        }
        Self::from_dense(&dense)
    }

    /// Checks nonnegativity and row-stochasticity.
    pub fn validate(&self) -> Result<(), NetworkError> {
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                if w < 0.0 {
                    return Err(NetworkError::NegativeWeight(i, j));
                }
            }
            let sum: f64 = row.iter().map(|&(_, w)| w).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(NetworkError::RowSumOff(i, sum));
            }
        }
        Ok(())
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    /// Sparse row i: `(neighbor, weight)` pairs with w > 0, ascending.
    pub fn out_neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self.rows[i].binary_search_by_key(&j, |&(k, _)| k) {
            Ok(pos) => self.rows[i][pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[i][j] = w;
            }
        }
        m
    }

    /// Sum of weights agent `i` assigns inside `members` (boolean mask).
    pub fn weight_into(&self, i: usize, members: &[bool]) -> f64 {
        self.rows[i]
            .iter()
            .filter(|&&(j, _)| members[j])
            .map(|&(_, w)| w)
            .sum()
    }

    /// Moves `delta` from w_ii onto w_ij; row sums are preserved exactly.
    pub fn perturb_add_link(
        &self,
        i: usize,
        j: usize,
        delta: f64,
    ) -> Result<Self, NetworkError> {
        if i == j {
            return Err(NetworkError::BadParameters("i == j".into()));
        }
        if delta < 0.0 {
            return Err(NetworkError::BadParameters("negative delta".into()));
        }
        if delta == 0.0 {
            return Ok(self.clone());
        }
        if self.weight(i, i) < delta {
            return Err(NetworkError::InsufficientSelfWeight(i));
        }
        let mut rows = self.rows.clone();
        let row = &mut rows[i];
        let self_pos = row.binary_search_by_key(&i, |&(k, _)| k).unwrap();
        row[self_pos].1 -= delta;
        if row[self_pos].1 == 0.0 {
            row.remove(self_pos);
        }
        match row.binary_search_by_key(&j, |&(k, _)| k) {
            Ok(pos) => row[pos].1 += delta,
            Err(pos) => row.insert(pos, (j, delta)),
        }
        Ok(InfluenceNetwork { n: self.n, rows })
    }

    /// Zeroes every self-loop and renormalizes the remaining row mass.
    pub fn strip_self_loops(&self) -> Result<Self, NetworkError> {
        let mut rows = Vec::with_capacity(self.n);
        for (i, row) in self.rows.iter().enumerate() {
            let rest: f64 = row.iter().filter(|&&(j, _)| j != i).map(|&(_, w)| w).sum();
            if rest <= 0.0 {
                return Err(NetworkError::IsolatedAgent(i));
            }
            rows.push(
                row.iter()
                    .filter(|&&(j, _)| j != i)
                    .map(|&(j, w)| (j, w / rest))
                    .collect(),
            );
        }
        Ok(InfluenceNetwork { n: self.n, rows })
    }

    /// Checks that no subset of any row's weights sums into
    /// `[1/2 - eps, 1/2 + eps]`. Opt-in and exponential in row support.
    pub fn is_generic(&self, eps: f64) -> GenericityReport {
        let window = Window {
            lo: 0.5 - eps,
            hi: 0.5 + eps,
            lo_inclusive: true,
            hi_inclusive: true,
        };
        let mut unchecked = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            let weights: Vec<f64> = row.iter().map(|&(_, w)| w).collect();
            match subset_sum_in_window(&weights, window) {
                WindowCheck::Hit(pos) => {
                    return GenericityReport::NonGeneric {
                        row: i,
                        subset: pos.into_iter().map(|p| row[p].0).collect(),
                    };
                }
                WindowCheck::Miss => {}
                WindowCheck::Unchecked => unchecked.push(i),
            }
        }
        if unchecked.is_empty() {
            GenericityReport::Generic
        } else {
            GenericityReport::Unchecked { rows: unchecked }
        }
    }

    /// Network JSON: `{"n": int, "rows": [[{"j": int, "w": float}, ...], ...]}`.
    pub fn to_json(&self) -> String {
        let doc = NetworkDoc {
            n: self.n,
            rows: self
                .rows
                .iter()
                .map(|row| row.iter().map(|&(j, w)| Entry { j, w }).collect())
                .collect(),
        };
        serde_json::to_string(&doc).expect("network serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let doc: NetworkDoc = serde_json::from_str(text)
            .map_err(|e| NetworkError::ParseError(e.to_string()))?;
        Self::from_sparse(
            doc.n,
            doc.rows
                .into_iter()
                .map(|row| row.into_iter().map(|e| (e.j, e.w)).collect())
                .collect(),
        )
    }

    /// Edge-list CSV: header `i,j,w`, one row per directed link.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,w\n");
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                // serde_json's float formatting round-trips f64 exactly
                out.push_str(&format!(
                    "{i},{j},{}\n",
                    serde_json::Number::from_f64(w).unwrap()
                ));
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, NetworkError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "i,j,w" => {}
            Some(h) => {
                return Err(NetworkError::ParseError(format!(
                    "bad header {h:?}, expected i,j,w"
                )))
            }
            None => return Err(NetworkError::ParseError("empty file".into())),
        }
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        let mut n = 0usize;
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(NetworkError::ParseError(format!(
                    "line {}: expected 3 fields",
                    lineno + 2
                )));
            }
            let parse = |s: &str, what: &str| -> Result<f64, NetworkError> {
                s.trim().parse::<f64>().map_err(|_| {
                    NetworkError::ParseError(format!("line {}: bad {what}", lineno + 2))
                })
            };
            let i = parse(parts[0], "i")? as usize;
            let j = parse(parts[1], "j")? as usize;
            let w = parse(parts[2], "w")?;
            if edges.iter().any(|&(a, b, _)| a == i && b == j) {
                return Err(NetworkError::ParseError(format!("duplicate ({i}, {j})")));
            }
            n = n.max(i + 1).max(j + 1);
            edges.push((i, j, w));
        }
        if edges.is_empty() {
            return Err(NetworkError::ParseError("no edges".into()));
        }
        let mut rows = vec![Vec::new(); n];
        for (i, j, w) in edges {
            rows[i].push((j, w));
        }
        Self::from_sparse(n, rows)
    }
}

/// Outcome of the opt-in genericity check.
#[derive(Debug, Clone, PartialEq)]
pub enum GenericityReport {
    Generic,
    NonGeneric { row: usize, subset: Vec<usize> },
    /// Some rows had support beyond the exact-check limit.
    Unchecked { rows: Vec<usize> },
}

impl GenericityReport {
    pub fn is_generic(&self) -> bool {
        matches!(self, GenericityReport::Generic)
    }
}

#[derive(Serialize, Deserialize)]
struct Entry {
    j: usize,
    #[serde(deserialize_with = "finite_f64")]
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    n: usize,
    rows: Vec<Vec<Entry>>,
}

fn finite_f64<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let w = f64::deserialize(d)?;
    if w.is_finite() {
        Ok(w)
    } else {
        Err(D::Error::custom("non-finite weight"))
    }
}

/// 3x3 network with every weight 1/3; the running small example.
#[cfg(test)]
pub(crate) fn k3u() -> InfluenceNetwork {
    InfluenceNetwork::from_dense(&vec![vec![1.0 / 3.0; 3]; 3]).unwrap()
}
