//! Undirected graphs, the symmetric normalized adjacency used by the encoder,
//! and the train/dev/test edge protocol with negative sampling.

use std::collections::{HashMap, HashSet};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unordered node pair stored as `(min, max)`.
pub type NodePair = (usize, usize);

/// Graphs up to this many nodes keep a dense boolean adjacency for O(1) lookups.
pub const DENSE_LIMIT: usize = 2048;

pub(crate) fn canonical(i: usize, j: usize) -> NodePair {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Simple undirected graph: no self-loops, no parallel edges, dense node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_names: Vec<String>,
    edges: Vec<NodePair>,
    neighbors: Vec<Vec<usize>>,
    dense: Option<Vec<bool>>,
}

impl Graph {
    /// Builds a graph from index pairs. Duplicates (in either orientation) are merged.
    pub fn from_indices(node_names: Vec<String>, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = node_names.len();
        let mut seen = HashSet::with_capacity(n);
        for name in &node_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateNode(name.clone()));
            }
        }
        let mut edges = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs {
            for index in [i, j] {
                if index >= n {
                    return Err(Error::NodeIndex { index, n_nodes: n });
                }
            }
            if i == j {
                return Err(Error::SelfLoop(node_names[i].clone()));
            }
            edges.push(canonical(i, j));
        }
        edges.sort_unstable();
        edges.dedup();

        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let dense = (n <= DENSE_LIMIT).then(|| {
            let mut bits = vec![false; n * n];
            for &(i, j) in &edges {
                bits[i * n + j] = true;
                bits[j * n + i] = true;
            }
            bits
        });
        Ok(Graph {
            node_names,
            edges,
            neighbors,
            dense,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_names.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    /// Edges in canonical `(min, max)` form, sorted.
    pub fn edges(&self) -> &[NodePair] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let n = self.n_nodes();
        if i >= n || j >= n || i == j {
            return false;
        }
        match &self.dense {
            Some(bits) => bits[i * n + j],
            None => self.neighbors[i].binary_search(&j).is_ok(),
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.node_names.iter().position(|n| n == name)
    }

    /// Dense 0/1 adjacency matrix.
    pub fn adjacency_matrix(&self) -> Array2<f64> {
        let n = self.n_nodes();
        let mut a = Array2::zeros((n, n));
        for &(i, j) in &self.edges {
            a[[i, j]] = 1.0;
            a[[j, i]] = 1.0;
        }
        a
    }

    /// Same node set with a different edge list (used for the training graph).
    pub fn with_edges(&self, edges: &[NodePair]) -> Result<Graph> {
        Graph::from_indices(self.node_names.clone(), edges)
    }

    /// Connected components as sorted node lists, largest first.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &self.neighbors[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        out
    }
}

/// Builds a graph from node names and name pairs.
pub fn build_graph<S: AsRef<str>>(node_names: &[S], edge_pairs: &[(S, S)]) -> Result<Graph> {
    let names: Vec<String> = node_names.iter().map(|s| s.as_ref().to_owned()).collect();
    let index: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    if index.len() != names.len() {
        let mut seen = HashSet::new();
        let dup = names.iter().find(|n| !seen.insert(n.as_str())).unwrap();
        return Err(Error::DuplicateNode(dup.clone()));
    }
    let lookup = |s: &S| {
        index
            .get(s.as_ref())
            .copied()
            .ok_or_else(|| Error::UnknownNode(s.as_ref().to_owned()))
    };
    let mut pairs = Vec::with_capacity(edge_pairs.len());
    for (a, b) in edge_pairs {
        let (i, j) = (lookup(a)?, lookup(b)?);
        if i == j {
            return Err(Error::SelfLoop(a.as_ref().to_owned()));
        }
        pairs.push((i, j));
    }
    Graph::from_indices(names, &pairs)
}

/// `D^{-1/2} (A + I) D^{-1/2}` in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl NormalizedAdjacency {
    /// Identity propagation, used by the non-convolutional baseline.
    pub fn identity(n: usize) -> Self {
        NormalizedAdjacency {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(k) => self.values[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[[i, self.col_idx[k]]] = self.values[k];
            }
        }
        m
    }

    /// `M · x`. Since `M` is symmetric this is also `Mᵀ · x`.
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.n, "propagation shape mismatch");
        let mut out = Array2::zeros(x.raw_dim());
        let width = x.ncols();
        if let (Some(src), Some(dst)) = (x.as_slice(), out.as_slice_mut()) {
            for (i, out_row) in dst.chunks_exact_mut(width.max(1)).enumerate().take(self.n) {
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let (v, j) = (self.values[k], self.col_idx[k]);
                    for (o, &s) in out_row.iter_mut().zip(&src[j * width..(j + 1) * width]) {
                        *o += v * s;
                    }
                }
            }
            return out;
        }
        for i in 0..self.n {
            let mut row = out.row_mut(i);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row.scaled_add(self.values[k], &x.row(self.col_idx[k]));
            }
        }
        out
    }
}

pub fn normalized_adjacency(g: &Graph) -> NormalizedAdjacency {
    let n = g.n_nodes();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| 1.0 / ((g.degree(i) + 1) as f64).sqrt())
        .collect();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(n + 2 * g.n_edges());
    let mut values = Vec::with_capacity(n + 2 * g.n_edges());
    row_ptr.push(0);
    for i in 0..n {
        let nbrs = g.neighbors(i);
        let split = nbrs.partition_point(|&j| j < i);
        let cols = nbrs[..split]
            .iter()
            .copied()
            .chain(std::iter::once(i))
            .chain(nbrs[split..].iter().copied());
        for j in cols {
            col_idx.push(j);
            values.push(inv_sqrt[i] * inv_sqrt[j]);
        }
        row_ptr.push(col_idx.len());
    }
    NormalizedAdjacency {
        n,
        row_ptr,
        col_idx,
        values,
    }
}

/// Train/dev/test partition of the edge set with frozen evaluation negatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSplit {
    pub train_edges: Vec<NodePair>,
    pub dev_edges: Vec<NodePair>,
    pub test_edges: Vec<NodePair>,
    pub dev_negatives: Vec<NodePair>,
    pub test_negatives: Vec<NodePair>,
    pub seed: u64,
}

/// Which held-out part of a split to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPart {
    Dev,
    Test,
}

impl EdgeSplit {
    pub fn train_graph(&self, g: &Graph) -> Result<Graph> {
        g.with_edges(&self.train_edges)
    }

    pub fn part(&self, part: SplitPart) -> (&[NodePair], &[NodePair]) {
        match part {
            SplitPart::Dev => (&self.dev_edges, &self.dev_negatives),
            SplitPart::Test => (&self.test_edges, &self.test_negatives),
        }
    }

    /// Frozen evaluation negatives, which training never samples.
    pub fn frozen_negatives(&self) -> HashSet<NodePair> {
        self.dev_negatives
            .iter()
            .chain(&self.test_negatives)
            .copied()
            .collect()
    }

    /// Checks the split against its source graph.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        let n = g.n_nodes();
        let mut all: Vec<NodePair> = Vec::with_capacity(g.n_edges());
        for &(i, j) in self
            .train_edges
            .iter()
            .chain(&self.dev_edges)
            .chain(&self.test_edges)
        {
            all.push(canonical(i, j));
        }
        all.sort_unstable();
        let before = all.len();
        all.dedup();
        if before != all.len() || all != g.edges() {
            return Err(Error::InvalidArgument(
                "split edge lists do not partition the graph's edges".into(),
            ));
        }
        for (negs, pos) in [
            (&self.dev_negatives, &self.dev_edges),
            (&self.test_negatives, &self.test_edges),
        ] {
            if negs.len() != pos.len() {
                return Err(Error::InvalidArgument(
                    "negative and positive counts differ".into(),
                ));
            }
            for &(i, j) in negs.iter() {
                if i >= n || j >= n {
                    return Err(Error::NodeIndex {
                        index: i.max(j),
                        n_nodes: n,
                    });
                }
                if i == j || g.has_edge(i, j) {
                    return Err(Error::InvalidArgument(format!(
                        "negative pair ({i}, {j}) is an edge or self-pair"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Shuffles the edges and partitions them by `ratios` (train, dev, test).
///
/// Dev and test sizes are `floor(m * ratio)`; the remainder goes to train.
/// Each held-out part receives as many frozen negatives as it has edges.
pub fn split_edges(g: &Graph, ratios: [f64; 3], seed: u64) -> Result<EdgeSplit> {
    if ratios.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "split ratios must be positive, got {ratios:?}"
        )));
    }
    if (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split ratios must sum to 1, got {ratios:?}"
        )));
    }
    let m = g.n_edges();
    if m < 5 {
        return Err(Error::TooFewEdges {
            found: m,
            required: 5,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = g.edges().to_vec();
    edges.shuffle(&mut rng);

    let n_dev = (m as f64 * ratios[1]).floor() as usize;
    let n_test = (m as f64 * ratios[2]).floor() as usize;
    let n_train = m - n_dev - n_test;
    let test_edges = edges.split_off(n_train + n_dev);
    let dev_edges = edges.split_off(n_train);
    let train_edges = edges;

    let negatives = sample_negatives(g, n_dev + n_test, rng.random(), &HashSet::new())?;
    let (dev_negatives, test_negatives) = negatives.split_at(n_dev);
    Ok(EdgeSplit {
        train_edges,
        dev_edges,
        test_edges,
        dev_negatives: dev_negatives.to_vec(),
        test_negatives: test_negatives.to_vec(),
        seed,
    })
}

/// Every admissible non-edge of a small graph, enumerated once so repeated
/// draws cost only the sampling.
#[derive(Debug, Clone)]
pub struct NegativePool {
    candidates: Vec<NodePair>,
}

impl NegativePool {
    pub fn new(g: &Graph, exclude: &HashSet<NodePair>) -> Self {
        let n = g.n_nodes();
        let mut candidates = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if !g.has_edge(i, j) && !exclude.contains(&(i, j)) {
                    candidates.push((i, j));
                }
            }
        }
        NegativePool { candidates }
    }

    /// Same draw as [`sample_negatives`] with the same seed.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<NodePair>> {
        if count > self.candidates.len() {
            return Err(Error::InsufficientNonEdges {
                requested: count,
                available: self.candidates.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picked = rand::seq::index::sample(&mut rng, self.candidates.len(), count);
        Ok(picked.into_iter().map(|k| self.candidates[k]).collect())
    }
}

/// Draws `count` distinct non-edges, avoiding `exclude`, without replacement.
pub fn sample_negatives(
    g: &Graph,
    count: usize,
    seed: u64,
    exclude: &HashSet<NodePair>,
) -> Result<Vec<NodePair>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let n = g.n_nodes();
    if n <= DENSE_LIMIT {
        return NegativePool::new(g, exclude).sample(count, seed);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let total = n * (n - 1) / 2;
    let excluded_non_edges = exclude
        .iter()
        .filter(|&&(i, j)| i != j && i < n && j < n && !g.has_edge(i, j))
        .count();
    let available = total - g.n_edges() - excluded_non_edges;
    if count > available {
        return Err(Error::InsufficientNonEdges {
            requested: count,
            available,
        });
    }
    let mut chosen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j {
            continue;
        }
        let pair = canonical(i, j);
        if g.has_edge(i, j) || exclude.contains(&pair) || !chosen.insert(pair) {
            continue;
        }
        out.push(pair);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    pub(crate) fn two_cliques() -> Graph {
        let names: Vec<String> = (0..8).map(|i| format!("n{i}")).collect();
        let mut pairs = Vec::new();
        for block in [0usize, 4] {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    pairs.push((block + i, block + j));
                }
            }
        }
        Graph::from_indices(names, &pairs).unwrap()
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    pairs.push((i, j));
                }
            }
        }
        Graph::from_indices((0..n).map(|i| i.to_string()).collect(), &pairs).unwrap()
    }

    #[test]
    fn symmetric_duplicates_collapse() {
        let g = build_graph(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap();
        assert_eq!(g.n_edges(), 1);
        assert!(g.has_edge(1, 0));
    }

    #[test]
    fn self_loop_rejected() {
        let err = build_graph(&["a"], &[("a", "a")]).unwrap_err();
        assert!(matches!(err, Error::SelfLoop(ref n) if n == "a"));
    }

    #[test]
    fn unknown_node_rejected() {
        let err = build_graph(&["a"], &[("a", "z")]).unwrap_err();
        assert!(matches!(err, Error::UnknownNode(ref n) if n == "z"));
    }

    #[test]
    fn two_cliques_structure() {
        let g = two_cliques();
        assert_eq!(g.n_edges(), 12);
        assert_eq!(g.components().len(), 2);
    }

    #[test]
    fn isolated_node_normalizes_to_one() {
        let g = Graph::from_indices(vec!["a".into()], &[]).unwrap();
        assert_eq!(normalized_adjacency(&g).to_dense()[[0, 0]], 1.0);
    }

    #[test]
    fn single_edge_normalizes_to_halves() {
        let g = build_graph(&["a", "b"], &[("a", "b")]).unwrap();
        let m = normalized_adjacency(&g).to_dense();
        assert!(m.iter().all(|&x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn clique_diagonal_is_quarter() {
        let m = normalized_adjacency(&two_cliques());
        assert!((m.get(0, 0) - 0.25).abs() < 1e-15);
        assert_eq!(m.get(0, 5), 0.0);
    }

    #[test]
    fn split_sizes_follow_floor_then_remainder() {
        // a 10-edge path
        let names: Vec<String> = (0..11).map(|i| i.to_string()).collect();
        let pairs: Vec<_> = (0..10).map(|i| (i, i + 1)).collect();
        let g = Graph::from_indices(names, &pairs).unwrap();
        let s = split_edges(&g, [0.6, 0.2, 0.2], 7).unwrap();
        assert_eq!(
            (s.train_edges.len(), s.dev_edges.len(), s.test_edges.len()),
            (6, 2, 2)
        );
        assert_eq!(s, split_edges(&g, [0.6, 0.2, 0.2], 7).unwrap());
        s.validate(&g).unwrap();

        let s = split_edges(&two_cliques(), [0.6, 0.2, 0.2], 1).unwrap();
        assert_eq!(
            (s.train_edges.len(), s.dev_edges.len(), s.test_edges.len()),
            (8, 2, 2)
        );
    }

    #[test]
    fn complete_graph_has_no_negatives() {
        let names: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let pairs: Vec<_> = (0..4)
            .flat_map(|i| ((i + 1)..4).map(move |j| (i, j)))
            .collect();
        let g = Graph::from_indices(names, &pairs).unwrap();
        // K4 has 6 edges, enough to split, but zero non-edges
        let err = split_edges(&g, [0.6, 0.2, 0.2], 0).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientNonEdges {
                requested: 2,
                available: 0
            }
        ));
    }

    #[test]
    fn path_has_single_negative() {
        let g = build_graph(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
        assert_eq!(
            sample_negatives(&g, 1, 3, &HashSet::new()).unwrap(),
            vec![(0, 2)]
        );
        assert!(sample_negatives(&g, 0, 3, &HashSet::new())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn different_seeds_give_different_negatives() {
        let g = random_graph(80, 0.05, 11);
        let non_edges: HashSet<NodePair> = (0..80)
            .flat_map(|i| ((i + 1)..80).map(move |j| (i, j)))
            .filter(|&(i, j)| !g.has_edge(i, j))
            .collect();
        let a = sample_negatives(&g, 50, 1, &HashSet::new()).unwrap();
        let b = sample_negatives(&g, 50, 2, &HashSet::new()).unwrap();
        assert!(a.iter().chain(&b).all(|p| non_edges.contains(p)));
        assert_ne!(a, b);
    }

    #[test]
    fn rejection_path_for_large_graphs() {
        let n = DENSE_LIMIT + 10;
        let pairs: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let g = Graph::from_indices((0..n).map(|i| i.to_string()).collect(), &pairs).unwrap();
        let exclude: HashSet<_> = [(0, 2)].into_iter().collect();
        let negs = sample_negatives(&g, 500, 5, &exclude).unwrap();
        let uniq: HashSet<_> = negs.iter().collect();
        assert_eq!(uniq.len(), 500);
        assert!(negs
            .iter()
            .all(|&(i, j)| i < j && !g.has_edge(i, j) && (i, j) != (0, 2)));
    }

    fn brute_normalized(g: &Graph) -> Array2<f64> {
        let n = g.n_nodes();
        let mut a = g.adjacency_matrix();
        for i in 0..n {
            a[[i, i]] += 1.0;
        }
        let d: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                m[[i, j]] = a[[i, j]] / (d[i] * d[j]).sqrt();
            }
        }
        m
    }

    proptest! {
        #[test]
        fn normalized_matches_dense_formula(n in 1usize..50, p in 0.0f64..0.6, seed in any::<u64>()) {
            let g = random_graph(n, p, seed);
            let m = normalized_adjacency(&g).to_dense();
            let brute = brute_normalized(&g);
            for i in 0..n {
                for j in 0..n {
                    prop_assert!((m[[i, j]] - brute[[i, j]]).abs() < 1e-14);
                    prop_assert_eq!(m[[i, j]], m[[j, i]]);
                }
                prop_assert!((m[[i, i]] - 1.0 / (g.degree(i) + 1) as f64).abs() < 1e-15);
            }
        }

        #[test]
        fn apply_matches_dense_product_in_both_layouts(n in 1usize..30, p in 0.0f64..0.6, seed in any::<u64>()) {
            let g = random_graph(n, p, seed);
            let m = normalized_adjacency(&g);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = Array2::from_shape_fn((n, 4), |_| rng.random_range(-1.0..1.0));
            let expected = m.to_dense().dot(&x);
            let mut fortran = Array2::zeros(ndarray::ShapeBuilder::f((n, 4)));
            fortran.assign(&x);
            for got in [m.apply(&x), m.apply(&fortran)] {
                for (a, b) in got.iter().zip(expected.iter()) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn pool_draws_match_direct_sampling(n in 5usize..30, p in 0.0f64..0.5, seed in any::<u64>()) {
            let g = random_graph(n, p, seed);
            let exclude: HashSet<NodePair> = [(0, 1), (1, 2)].into_iter().collect();
            let pool = NegativePool::new(&g, &exclude);
            let available = pool.candidates.len();
            for count in [0, available / 2, available] {
                prop_assert_eq!(pool.sample(count, seed).unwrap(), sample_negatives(&g, count, seed, &exclude).unwrap());
            }
            prop_assert!(pool.sample(available + 1, seed).is_err());
        }

        #[test]
        fn negatives_are_never_edges(n in 5usize..40, p in 0.0f64..0.5, seed in any::<u64>(), frac in 0.0f64..1.0) {
            let g = random_graph(n, p, seed);
            let available = n * (n - 1) / 2 - g.n_edges();
            let count = (available as f64 * frac) as usize;
            let negs = sample_negatives(&g, count, seed ^ 0x5a5a, &HashSet::new()).unwrap();
            prop_assert_eq!(negs.len(), count);
            let uniq: HashSet<_> = negs.iter().collect();
            prop_assert_eq!(uniq.len(), count);
            for &(i, j) in &negs {
                prop_assert!(i != j);
                prop_assert!(g.adjacency_matrix()[[i, j]] == 0.0);
            }
        }
    }

    #[test]
    fn split_partitions_edges_on_many_graphs() {
        let mut checked = 0;
        for seed in 0..1000u64 {
            let g = random_graph(12 + (seed % 20) as usize, 0.3, seed);
            if g.n_edges() < 5 {
                continue;
            }
            let Ok(s) = split_edges(&g, [0.6, 0.2, 0.2], seed) else {
                continue;
            };
            s.validate(&g).unwrap();
            let mut union: Vec<_> = s
                .train_edges
                .iter()
                .chain(&s.dev_edges)
                .chain(&s.test_edges)
                .copied()
                .collect();
            union.sort_unstable();
            assert_eq!(union, g.edges());
            checked += 1;
        }
        assert!(checked > 900);
    }
}
