//! Weighted co-participation networks, significance backboning and
//! modularity-based polarization scores.

mod filter;
mod modularity;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub use filter::{
    backbone, kneedle, knee_threshold, noise_corrected_filter, BackboneReport, KneePoint,
    KneeResult,
};
pub use modularity::{
    degree_preserving_null, double_edge_swap, louvain, modularity, ModularityResult, NullModel,
};

pub const MIN_COMMENTS: u64 = 10;

/// One row of user activity: `count` comments by `user` in `node`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Activity {
    pub user: String,
    pub node: String,
    pub count: u64,
}

/// Undirected network with non-negative weights and an empty diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNetwork {
    node_names: Vec<String>,
    weights: Array2<f64>,
    total_weight: f64,
}

impl WeightedNetwork {
    pub fn new(node_names: Vec<String>, weights: Array2<f64>) -> Result<Self> {
        let n = node_names.len();
        if weights.dim() != (n, n) {
            return Err(Error::Shape(format!(
                "weights are {:?} for {n} nodes",
                weights.dim()
            )));
        }
        let mut seen = BTreeSet::new();
        for name in &node_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateNode(name.clone()));
            }
        }
        let mut total = 0.0;
        for i in 0..n {
            if weights[[i, i]] != 0.0 {
                return Err(Error::SelfLoop(node_names[i].clone()));
            }
            for j in (i + 1)..n {
                let w = weights[[i, j]];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "weight {w} between `{}` and `{}`",
                        node_names[i], node_names[j]
                    )));
                }
                if w != weights[[j, i]] {
                    return Err(Error::InvalidArgument(format!(
                        "asymmetric weight between `{}` and `{}`",
                        node_names[i], node_names[j]
                    )));
                }
                total += w;
            }
        }
        Ok(WeightedNetwork {
            node_names,
            weights,
            total_weight: total,
        })
    }

    /// Builds a network from `(node_i, node_j, weight)` triples. Repeated pairs add up.
    pub fn from_triples<S: AsRef<str>>(triples: &[(S, S, f64)]) -> Result<Self> {
        let names: BTreeSet<&str> = triples
            .iter()
            .flat_map(|(a, b, _)| [a.as_ref(), b.as_ref()])
            .collect();
        let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut weights = Array2::zeros((names.len(), names.len()));
        for (a, b, w) in triples {
            let (i, j) = (index[a.as_ref()], index[b.as_ref()]);
            if i == j {
                return Err(Error::SelfLoop(a.as_ref().to_owned()));
            }
            weights[[i, j]] += w;
            weights[[j, i]] += w;
        }
        WeightedNetwork::new(names.into_iter().map(str::to_owned).collect(), weights)
    }

    pub fn n_nodes(&self) -> usize {
        self.node_names.len()
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[[i, j]]
    }

    /// Sum of weights over unordered pairs.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Node strengths `s_i = Σ_j w_ij`.
    pub fn strengths(&self) -> Vec<f64> {
        self.weights.rows().into_iter().map(|r| r.sum()).collect()
    }

    /// Unordered pairs carrying positive weight, as `(i, j, w)` with `i < j`.
    pub fn weighted_edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n_nodes();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.weights[[i, j]];
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }
}

/// Counts, for every pair of nodes, the users with at least `min_comments`
/// comments in both. Nodes are ordered by name.
pub fn cooccurrence_weights(activity: &[Activity], min_comments: u64) -> WeightedNetwork {
    let nodes: BTreeSet<&str> = activity.iter().map(|a| a.node.as_str()).collect();
    let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut per_user: BTreeMap<&str, BTreeMap<usize, u64>> = BTreeMap::new();
    for a in activity {
        *per_user
            .entry(a.user.as_str())
            .or_default()
            .entry(index[a.node.as_str()])
            .or_default() += a.count;
    }
    let n = nodes.len();
    let mut weights = Array2::zeros((n, n));
    for counts in per_user.values() {
        let qualifying: Vec<usize> = counts
            .iter()
            .filter(|&(_, &c)| c >= min_comments)
            .map(|(&i, _)| i)
            .collect();
        for (x, &i) in qualifying.iter().enumerate() {
            for &j in &qualifying[x + 1..] {
                weights[[i, j]] += 1.0;
                weights[[j, i]] += 1.0;
            }
        }
    }
    WeightedNetwork::new(nodes.into_iter().map(str::to_owned).collect(), weights)
        .expect("co-occurrence counts are valid weights")
}

/// Size, density and distance summary of a graph's non-isolated nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub mean_degree: f64,
    pub density: f64,
    /// Mean shortest-path length within the largest connected component.
    pub mean_shortest_path: f64,
}

pub fn graph_stats(g: &Graph) -> GraphStats {
    let n = (0..g.n_nodes()).filter(|&v| g.degree(v) > 0).count();
    let e = g.n_edges();
    let (mean_degree, density) = if n == 0 {
        (0.0, 0.0)
    } else if n == 1 {
        (2.0 * e as f64 / n as f64, 0.0)
    } else {
        (
            2.0 * e as f64 / n as f64,
            2.0 * e as f64 / (n as f64 * (n as f64 - 1.0)),
        )
    };
    GraphStats {
        n_nodes: n,
        n_edges: e,
        mean_degree,
        density,
        mean_shortest_path: mean_shortest_path(g),
    }
}

fn mean_shortest_path(g: &Graph) -> f64 {
    let components = g.components();
    let Some(largest) = components.first().filter(|c| c.len() > 1) else {
        return 0.0;
    };
    let mut dist = vec![usize::MAX; g.n_nodes()];
    let mut total = 0usize;
    let mut queue = VecDeque::new();
    for &source in largest {
        for &v in largest {
            dist[v] = usize::MAX;
        }
        dist[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            total += dist[v];
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    let k = largest.len() as f64;
    total as f64 / (k * (k - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(user: &str, node: &str, count: u64) -> Activity {
        Activity {
            user: user.into(),
            node: node.into(),
            count,
        }
    }

    #[test]
    fn one_qualifying_user() {
        let w = cooccurrence_weights(&[act("u", "A", 10), act("u", "B", 10)], MIN_COMMENTS);
        assert_eq!(w.weight(0, 1), 1.0);
        assert_eq!(w.total_weight(), 1.0);
    }

    #[test]
    fn threshold_boundary() {
        let w = cooccurrence_weights(&[act("u", "A", 9), act("u", "B", 10)], MIN_COMMENTS);
        assert_eq!(w.weight(0, 1), 0.0);
    }

    #[test]
    fn matches_brute_force_user_enumeration() {
        let mut rows = Vec::new();
        let counts = [[12, 30, 0], [10, 10, 10], [50, 9, 11], [10, 11, 3], [0, 0, 40]];
        for (u, row) in counts.iter().enumerate() {
            for (n, &c) in row.iter().enumerate() {
                rows.push(act(&format!("u{u}"), &format!("n{n}"), c));
            }
        }
        let w = cooccurrence_weights(&rows, MIN_COMMENTS);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j {
                    0
                } else {
                    counts.iter().filter(|r| r[i] >= 10 && r[j] >= 10).count()
                };
                assert_eq!(w.weight(i, j), expected as f64, "({i},{j})");
            }
        }
        assert_eq!(w.weight(0, 1), 3.0);
    }

    #[test]
    fn split_counts_accumulate() {
        let w = cooccurrence_weights(
            &[act("u", "A", 5), act("u", "A", 5), act("u", "B", 10)],
            MIN_COMMENTS,
        );
        assert_eq!(w.weight(0, 1), 1.0);
    }

    #[test]
    fn rejects_bad_weights() {
        let names = vec!["a".to_string(), "b".to_string()];
        let mut m = Array2::zeros((2, 2));
        m[[0, 1]] = 1.0;
        assert!(WeightedNetwork::new(names.clone(), m.clone()).is_err());
        m[[1, 0]] = 1.0;
        m[[0, 0]] = 1.0;
        assert!(WeightedNetwork::new(names, m).is_err());
    }

    #[test]
    fn stats_of_a_path_with_isolated_node() {
        let g = Graph::from_indices(
            ["a", "b", "c", "d"].map(String::from).to_vec(),
            &[(0, 1), (1, 2)],
        )
        .unwrap();
        let s = graph_stats(&g);
        assert_eq!((s.n_nodes, s.n_edges), (3, 2));
        assert!((s.mean_degree - 4.0 / 3.0).abs() < 1e-12);
        assert!((s.density - 2.0 / 3.0).abs() < 1e-12);
        // distances 1,1,2 over three unordered pairs
        assert!((s.mean_shortest_path - 4.0 / 3.0).abs() < 1e-12);
    }
}
