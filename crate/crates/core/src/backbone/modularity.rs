use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{canonical, Graph, NodePair};

/// Modularity of a node partition, `Σ_c (e_c/m - (d_c/2m)²)`. Zero for edgeless graphs.
pub fn modularity(g: &Graph, partition: &[usize]) -> f64 {
    assert_eq!(partition.len(), g.n_nodes(), "partition covers every node");
    let m = g.n_edges() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let k = partition.iter().copied().max().map_or(0, |c| c + 1);
    let mut internal = vec![0.0; k];
    let mut degree = vec![0.0; k];
    for &(i, j) in g.edges() {
        if partition[i] == partition[j] {
            internal[partition[i]] += 1.0;
        }
    }
    for v in 0..g.n_nodes() {
        degree[partition[v]] += g.degree(v) as f64;
    }
    internal
        .iter()
        .zip(&degree)
        .map(|(e, d)| e / m - (d / (2.0 * m)).powi(2))
        .sum()
}

/// Null distribution of Q over degree-preserving rewirings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullModel {
    pub n_shuffles: usize,
    pub q_values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
    /// Absent when the null has no spread (no swap was possible).
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModularityResult {
    /// Community of each node, numbered by first appearance in node order.
    pub partition: Vec<usize>,
    pub n_communities: usize,
    pub q: f64,
    pub null: Option<NullModel>,
}

/// Weighted graph used between Louvain levels. `self_w[i]` is the sum of
/// `A_uv` over ordered pairs inside super-node `i`.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_w: Vec<f64>,
}

impl Level {
    fn strength(&self, i: usize) -> f64 {
        self.self_w[i] + self.adj[i].iter().map(|&(_, w)| w).sum::<f64>()
    }
}

/// Moves nodes between communities until no move raises modularity.
/// Returns the community of each node and whether anything moved.
fn local_moves(level: &Level, order: &[usize], two_m: f64) -> (Vec<usize>, bool) {
    let n = level.adj.len();
    let k: Vec<f64> = (0..n).map(|i| level.strength(i)).collect();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut tot = k.clone();
    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut moved_any = false;
    loop {
        let mut moved = false;
        for &i in order {
            let own = comm[i];
            for &(j, w) in &level.adj[i] {
                let c = comm[j];
                if link[c] == 0.0 && !touched.contains(&c) {
                    touched.push(c);
                }
                link[c] += w;
            }
            tot[own] -= k[i];
            let gain = |c: usize, link: &[f64]| link[c] - tot[c] * k[i] / two_m;
            let mut best = (own, gain(own, &link));
            for &c in &touched {
                let g = gain(c, &link);
                if g > best.1 + 1e-12 {
                    best = (c, g);
                }
            }
            tot[best.0] += k[i];
            if best.0 != own {
                comm[i] = best.0;
                moved = true;
            }
            for &c in &touched {
                link[c] = 0.0;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    (comm, moved_any)
}

fn renumber(labels: &mut [usize]) -> usize {
    let mut map = vec![usize::MAX; labels.len().max(labels.iter().copied().max().map_or(0, |m| m + 1))];
    let mut next = 0;
    for l in labels.iter_mut() {
        if map[*l] == usize::MAX {
            map[*l] = next;
            next += 1;
        }
        *l = map[*l];
    }
    next
}

/// Multi-level Louvain. The node visiting order is a seeded permutation, so
/// results are reproducible per seed.
pub fn louvain(g: &Graph, seed: u64) -> ModularityResult {
    let n = g.n_nodes();
    if g.n_edges() == 0 {
        return ModularityResult {
            partition: (0..n).collect(),
            n_communities: n,
            q: 0.0,
            null: None,
        };
    }
    let two_m = 2.0 * g.n_edges() as f64;
    let mut level = Level {
        adj: (0..n)
            .map(|v| g.neighbors(v).iter().map(|&u| (u, 1.0)).collect())
            .collect(),
        self_w: vec![0.0; n],
    };
    let mut membership: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let size = level.adj.len();
        let mut order: Vec<usize> = (0..size).collect();
        order.shuffle(&mut rng);
        let (mut comm, moved) = local_moves(&level, &order, two_m);
        if !moved {
            break;
        }
        let k = renumber(&mut comm);
        for m in membership.iter_mut() {
            *m = comm[*m];
        }
        let mut self_w = vec![0.0; k];
        let mut dense: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); k];
        for i in 0..size {
            self_w[comm[i]] += level.self_w[i];
            for &(j, w) in &level.adj[i] {
                if comm[i] == comm[j] {
                    self_w[comm[i]] += w;
                } else {
                    *dense[comm[i]].entry(comm[j]).or_default() += w;
                }
            }
        }
        level = Level {
            adj: dense.into_iter().map(|m| m.into_iter().collect()).collect(),
            self_w,
        };
        if k == size {
            break;
        }
    }
    let n_communities = renumber(&mut membership);
    ModularityResult {
        q: modularity(g, &membership),
        partition: membership,
        n_communities,
        null: None,
    }
}

/// Rewires `g` with `attempts` double-edge swap attempts, keeping every
/// node's degree. Returns the rewired graph and the number of accepted swaps.
pub fn double_edge_swap<R: Rng>(g: &Graph, attempts: usize, rng: &mut R) -> (Graph, usize) {
    let mut edges: Vec<NodePair> = g.edges().to_vec();
    let mut present: HashSet<NodePair> = edges.iter().copied().collect();
    let mut accepted = 0;
    if edges.len() >= 2 {
        for _ in 0..attempts {
            let x = rng.random_range(0..edges.len());
            let y = rng.random_range(0..edges.len());
            if x == y {
                continue;
            }
            let (a, b) = edges[x];
            let (c, d) = if rng.random::<bool>() { edges[y] } else { (edges[y].1, edges[y].0) };
            // (a,b),(c,d) -> (a,d),(c,b)
            if a == d || c == b {
                continue;
            }
            let e1 = canonical(a, d);
            let e2 = canonical(c, b);
            if e1 == e2 || present.contains(&e1) || present.contains(&e2) {
                continue;
            }
            present.remove(&edges[x]);
            present.remove(&edges[y]);
            present.insert(e1);
            present.insert(e2);
            edges[x] = e1;
            edges[y] = e2;
            accepted += 1;
        }
    }
    let rewired = g.with_edges(&edges).expect("swaps keep a simple graph");
    (rewired, accepted)
}

/// Louvain Q of `g` against `n_shuffles` degree-preserving rewirings with
/// `10·|E|` swap attempts each.
pub fn degree_preserving_null(g: &Graph, n_shuffles: usize, seed: u64) -> Result<ModularityResult> {
    if n_shuffles < 10 {
        return Err(Error::InvalidArgument(format!(
            "need at least 10 shuffles, got {n_shuffles}"
        )));
    }
    let observed = louvain(g, seed);
    let degrees = g.degrees();
    let attempts = 10 * g.n_edges();
    let q_values: Vec<f64> = (0..n_shuffles)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64 + 1);
            let (null, _) = double_edge_swap(g, attempts, &mut rng);
            assert_eq!(null.degrees(), degrees, "double-edge swap changed the degree sequence");
            louvain(&null, seed).q
        })
        .collect();
    let mean = q_values.iter().sum::<f64>() / n_shuffles as f64;
    let var = q_values.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (n_shuffles - 1) as f64;
    let std = var.sqrt();
    let z_score = (std > 1e-12).then(|| (observed.q - mean) / std);
    if z_score.is_none() {
        log::warn!("modularity null has zero spread; z-score undefined");
    }
    Ok(ModularityResult {
        null: Some(NullModel {
            n_shuffles,
            q_values,
            mean,
            std,
            z_score,
        }),
        ..observed
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::from_indices((0..n).map(|i| format!("n{i}")).collect(), edges).unwrap()
    }

    fn complete(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        graph(n, &edges)
    }

    fn two_cliques() -> Graph {
        let mut edges = Vec::new();
        for b in [0, 4] {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    edges.push((b + i, b + j));
                }
            }
        }
        graph(8, &edges)
    }

    /// Best modularity over all set partitions (restricted growth strings).
    fn exhaustive_best(g: &Graph) -> f64 {
        fn rec(g: &Graph, labels: &mut Vec<usize>, max: usize, best: &mut f64) {
            if labels.len() == g.n_nodes() {
                *best = best.max(modularity(g, labels));
                return;
            }
            for c in 0..=max + 1 {
                labels.push(c);
                rec(g, labels, max.max(c), best);
                labels.pop();
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut labels = vec![0];
        rec(g, &mut labels, 0, &mut best);
        best
    }

    #[test]
    fn two_cliques_split_in_two() {
        let g = two_cliques();
        let r = louvain(&g, 0);
        assert_eq!(r.n_communities, 2);
        assert_eq!(r.partition, vec![0, 0, 0, 0, 1, 1, 1, 1]);
        assert!((r.q - 0.5).abs() < 1e-12);
        assert!((exhaustive_best(&g) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_is_one_community() {
        let r = louvain(&complete(5), 3);
        assert_eq!(r.n_communities, 1);
        assert!(r.q.abs() < 1e-12);
    }

    #[test]
    fn star_matches_exhaustive_search() {
        let g = graph(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        let best = exhaustive_best(&g);
        for seed in 0..5 {
            assert!((louvain(&g, seed).q - best).abs() < 1e-12);
        }
    }

    #[test]
    fn edgeless_graph_gives_singletons() {
        let r = louvain(&graph(3, &[]), 0);
        assert_eq!((r.partition, r.q), (vec![0, 1, 2], 0.0));
    }

    #[test]
    fn complete_graph_null_has_no_spread() {
        let r = degree_preserving_null(&complete(6), 10, 1).unwrap();
        let null = r.null.unwrap();
        assert_eq!(null.std, 0.0);
        assert!(null.z_score.is_none());
    }

    #[test]
    fn too_few_shuffles_rejected() {
        assert!(degree_preserving_null(&two_cliques(), 9, 0).is_err());
    }

    #[test]
    fn null_is_deterministic_per_seed() {
        let g = two_cliques();
        let a = degree_preserving_null(&g, 12, 5).unwrap();
        let b = degree_preserving_null(&g, 12, 5).unwrap();
        assert_eq!(a, b);
    }

    fn random_graph() -> impl Strategy<Value = Graph> {
        (4usize..16, any::<u64>(), 0.1f64..0.7).prop_map(|(n, seed, p)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
            graph(n, &edges)
        })
    }

    proptest! {
        #[test]
        fn modularity_bounds(g in random_graph(), labels in proptest::collection::vec(0usize..4, 16)) {
            let part: Vec<usize> = labels[..g.n_nodes()].to_vec();
            let q = modularity(&g, &part);
            prop_assert!((-0.5 - 1e-12..=1.0).contains(&q));
        }

        #[test]
        fn louvain_beats_singletons(g in random_graph(), seed in any::<u64>()) {
            let r = louvain(&g, seed);
            let singletons: Vec<usize> = (0..g.n_nodes()).collect();
            prop_assert!(r.q >= modularity(&g, &singletons) - 1e-12);
            prop_assert_eq!(r.partition.len(), g.n_nodes());
        }

        #[test]
        fn swaps_preserve_degrees(g in random_graph(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (null, _) = double_edge_swap(&g, 10 * g.n_edges(), &mut rng);
            prop_assert_eq!(null.degrees(), g.degrees());
            prop_assert_eq!(null.n_edges(), g.n_edges());
        }
    }
}
