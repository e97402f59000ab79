use serde::{Deserialize, Serialize};

use super::{graph_stats, GraphStats, WeightedNetwork};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodePair};

/// Keeps pair `(i, j)` iff `w_ij > μ_ij + δ·σ_ij` under a binomial null with
/// `p_ij = s_i s_j / W²`, `μ_ij = W p_ij` and `σ_ij = sqrt(W p_ij (1 - p_ij))`.
/// The returned graph keeps every node, isolated or not.
pub fn noise_corrected_filter(w: &WeightedNetwork, delta: f64) -> Result<Graph> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta {delta} must be finite and >= 0")));
    }
    let total = w.total_weight();
    let mut kept: Vec<NodePair> = Vec::new();
    if total > 0.0 {
        let s = w.strengths();
        for (i, j, wij) in w.weighted_edges() {
            let p = (s[i] / total) * (s[j] / total);
            let mu = total * p;
            let sigma = (total * p * (1.0 - p)).max(0.0).sqrt();
            if wij > mu + delta * sigma {
                kept.push((i, j));
            }
        }
    }
    Graph::from_indices(w.node_names().to_vec(), &kept)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KneePoint {
    pub delta: f64,
    pub edge_fraction: f64,
    pub node_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KneeResult {
    pub delta: f64,
    pub index: usize,
    /// No knee found (flat or straight curve); `delta` is the smallest candidate.
    pub degenerate: bool,
    pub curve: Vec<KneePoint>,
}

/// Difference-curve Kneedle on raw points. Returns the index maximizing
/// `y_norm - x_norm` (first index on ties) and whether the curve is degenerate.
pub fn kneedle(x: &[f64], y: &[f64]) -> (usize, bool) {
    assert_eq!(x.len(), y.len());
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi - lo)
    };
    let (x_lo, x_span) = range(x);
    let (y_lo, y_span) = range(y);
    if x.is_empty() || x_span <= 0.0 || y_span <= 0.0 {
        return (0, true);
    }
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..x.len() {
        let d = (y[i] - y_lo) / y_span - (x[i] - x_lo) / x_span;
        if d > best.1 {
            best = (i, d);
        }
    }
    if best.1 <= 1e-12 {
        (0, true)
    } else {
        (best.0, false)
    }
}

/// Fraction of weighted pairs (x) and of non-isolated nodes (y) that survive
/// each δ, then the δ at the knee of that curve.
pub fn knee_threshold(w: &WeightedNetwork, deltas: &[f64]) -> Result<KneeResult> {
    if deltas.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 candidate deltas, got {}",
            deltas.len()
        )));
    }
    if deltas.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(Error::InvalidArgument("deltas must be strictly increasing".into()));
    }
    let n_pairs = w.weighted_edges().len();
    let n_active = w.strengths().iter().filter(|&&s| s > 0.0).count();
    let frac = |k: usize, of: usize| if of == 0 { 0.0 } else { k as f64 / of as f64 };
    let mut curve = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let g = noise_corrected_filter(w, delta)?;
        let nodes = (0..g.n_nodes()).filter(|&v| g.degree(v) > 0).count();
        curve.push(KneePoint {
            delta,
            edge_fraction: frac(g.n_edges(), n_pairs),
            node_fraction: frac(nodes, n_active),
        });
    }
    let x: Vec<f64> = curve.iter().map(|p| p.edge_fraction).collect();
    let y: Vec<f64> = curve.iter().map(|p| p.node_fraction).collect();
    let (index, degenerate) = kneedle(&x, &y);
    if degenerate {
        log::warn!("backbone knee curve is flat or linear; using smallest delta {}", deltas[0]);
    }
    Ok(KneeResult {
        delta: deltas[index],
        index,
        degenerate,
        curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackboneReport {
    pub delta_used: f64,
    pub degenerate_knee: bool,
    pub knee_curve: Vec<KneePoint>,
    pub kept_edges: Vec<(String, String)>,
    pub stats: GraphStats,
}

/// Filters `w` at its knee δ and drops nodes left isolated.
pub fn backbone(w: &WeightedNetwork, deltas: &[f64]) -> Result<(Graph, BackboneReport)> {
    let knee = knee_threshold(w, deltas)?;
    let filtered = noise_corrected_filter(w, knee.delta)?;
    let keep: Vec<usize> = (0..filtered.n_nodes()).filter(|&v| filtered.degree(v) > 0).collect();
    let mut remap = vec![usize::MAX; filtered.n_nodes()];
    for (new, &old) in keep.iter().enumerate() {
        remap[old] = new;
    }
    let names: Vec<String> = keep.iter().map(|&v| filtered.node_names()[v].clone()).collect();
    let edges: Vec<NodePair> = filtered.edges().iter().map(|&(i, j)| (remap[i], remap[j])).collect();
    let graph = Graph::from_indices(names, &edges)?;
    let kept_edges = graph
        .edges()
        .iter()
        .map(|&(i, j)| (graph.node_names()[i].clone(), graph.node_names()[j].clone()))
        .collect();
    let report = BackboneReport {
        delta_used: knee.delta,
        degenerate_knee: knee.degenerate,
        knee_curve: knee.curve,
        kept_edges,
        stats: graph_stats(&graph),
    };
    Ok((graph, report))
}
