//! Independent reference implementations shared by the integration tests
//! and the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use concept_gae::features::{FeatureBundle, Provenance, SignalInputs, N_FOUNDATIONS};
use concept_gae::gae::{backward, bce_loss, decode_pairs, encode, pair_loss, ModelParams, Propagation};
use concept_gae::graph::{normalized_adjacency, Graph, NodePair};
use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// AUC by comparing every positive with every negative.
pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut twice_wins = 0u64;
    let (mut n_pos, mut n_neg) = (0u64, 0u64);
    for (i, &yi) in labels.iter().enumerate() {
        if yi {
            n_pos += 1;
        } else {
            n_neg += 1;
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj {
                continue;
            }
            if scores[i] > scores[j] {
                twice_wins += 2;
            } else if scores[i] == scores[j] {
                twice_wins += 1;
            }
        }
    }
    twice_wins as f64 / (2 * n_pos * n_neg) as f64
}

/// AP from explicit ranks: a higher score, or an equal score at a smaller
/// index, ranks first.
pub fn brute_ap(scores: &[f64], labels: &[bool]) -> f64 {
    let ahead = |j: usize, i: usize| scores[j] > scores[i] || (scores[j] == scores[i] && j <= i);
    let mut terms: Vec<(usize, usize)> = Vec::new();
    for i in (0..scores.len()).filter(|&i| labels[i]) {
        let rank = (0..scores.len()).filter(|&j| ahead(j, i)).count();
        let hits = (0..scores.len()).filter(|&j| labels[j] && ahead(j, i)).count();
        terms.push((rank, hits));
    }
    terms.sort_unstable();
    let total: f64 = terms.iter().map(|&(r, h)| h as f64 / r as f64).sum();
    total / terms.len() as f64
}

/// Random score/label set with at least one of each class; every other set
/// draws scores from a small grid to force ties.
pub fn random_scores(rng: &mut ChaCha8Rng, case: usize) -> (Vec<f64>, Vec<bool>) {
    let n = rng.random_range(2..=200);
    let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
    labels[0] = true;
    labels[1] = false;
    let scores = (0..n)
        .map(|_| {
            if case % 2 == 0 {
                rng.random::<f64>()
            } else {
                f64::from(rng.random_range(0..6u8)) / 5.0
            }
        })
        .collect();
    (scores, labels)
}

pub fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// Largest relative error between analytic and central-difference gradients,
/// taken per parameter block as `‖a − n‖ / max(‖a‖, ‖n‖)`.
pub struct GradientCheck {
    pub w0: f64,
    pub w1: f64,
    pub beta_logits: f64,
    pub gamma_logits: f64,
}

impl GradientCheck {
    pub fn worst(&self) -> f64 {
        self.w0.max(self.w1).max(self.beta_logits).max(self.gamma_logits)
    }
}

fn block_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|n| n * n).sum::<f64>().sqrt());
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

/// A 6-node instance with every pair labelled by adjacency.
pub struct GradientInstance {
    pub graph: Graph,
    pub inputs: SignalInputs,
    pub params: ModelParams,
    pub pairs: Vec<NodePair>,
    pub labels: Vec<bool>,
}

pub fn gradient_instance(seed: u64) -> GradientInstance {
    const V: usize = 6;
    const C: usize = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..V).map(|i| format!("n{i}")).collect();
    let mut edges = Vec::new();
    for i in 0..V {
        for j in i + 1..V {
            if rng.random_bool(0.5) {
                edges.push((i, j));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1));
    }
    if edges.len() == V * (V - 1) / 2 {
        edges.pop();
    }
    let graph = Graph::from_indices(names.clone(), &edges).unwrap();
    let counts = Array2::from_shape_fn((V, C), |_| rng.random_range(0..20u64));
    let framing = (0..N_FOUNDATIONS)
        .map(|_| Array2::from_shape_fn((V, C), |_| rng.random_range(-1.0..1.0)))
        .collect();
    let concepts = (0..C).map(|c| format!("c{c}")).collect();
    let bundle = FeatureBundle::new(names, concepts, counts, framing).unwrap();
    let inputs = SignalInputs::from_bundle(&bundle, true);
    let mut params = ModelParams::glorot(C, 4, 3, seed);
    params.mixture.beta_logits = Array2::from_shape_fn((C, N_FOUNDATIONS), |_| rng.random_range(-1.0..1.0));
    params.mixture.gamma_logits = Array1::from_shape_fn(C, |_| rng.random_range(-1.0..1.0));
    let mut pairs = Vec::new();
    let mut labels = Vec::new();
    for i in 0..V {
        for j in i + 1..V {
            pairs.push((i, j));
            labels.push(graph.has_edge(i, j));
        }
    }
    GradientInstance {
        graph,
        inputs,
        params,
        pairs,
        labels,
    }
}

/// Smallest distance of a hidden pre-activation from the ReLU kink.
fn kink_margin(inst: &GradientInstance, params: &ModelParams, prov: Provenance, prop: Propagation) -> f64 {
    let adj = normalized_adjacency(&inst.graph);
    let psi = inst.inputs.mix(&params.mixture, prov);
    let cache = encode(&adj, &psi, params, prop).unwrap();
    cache.propagated.dot(&params.w0).iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min)
}

/// Checks one instance for one model family. Returns `None` when a hidden
/// pre-activation sits so close to zero that central differences would
/// straddle the ReLU kink.
pub fn gradient_check(inst: &GradientInstance, prov: Provenance, prop: Propagation) -> Option<GradientCheck> {
    const H: f64 = 1e-6;
    if kink_margin(inst, &inst.params, prov, prop) < 1e-4 {
        return None;
    }
    let adj = normalized_adjacency(&inst.graph);
    let psi = inst.inputs.mix(&inst.params.mixture, prov);
    let cache = encode(&adj, &psi, &inst.params, prop).unwrap();
    let loss = |p: &ModelParams| pair_loss(&adj, &inst.inputs, p, prov, prop, &inst.pairs, &inst.labels).unwrap();
    // the clamp is inactive on these instances, so σ − y is the exact derivative
    let probs = decode_pairs(&cache.z, &inst.pairs);
    assert!(probs.iter().all(|&p| p > 1e-6 && p < 1.0 - 1e-6));
    assert!(bce_loss(&probs, &inst.labels).unwrap().is_finite());
    let grads = backward(&cache, &inst.pairs, &inst.labels, &adj, &inst.inputs, &inst.params).unwrap();

    fn numeric(
        base: &ModelParams,
        loss: &dyn Fn(&ModelParams) -> f64,
        len: usize,
        get: fn(&mut ModelParams) -> &mut [f64],
    ) -> Vec<f64> {
        (0..len)
            .map(|k| {
                let mut plus = base.clone();
                get(&mut plus)[k] += H;
                let mut minus = base.clone();
                get(&mut minus)[k] -= H;
                (loss(&plus) - loss(&minus)) / (2.0 * H)
            })
            .collect()
    }
    let p = &inst.params;
    let w0 = numeric(p, &loss, p.w0.len(), |m| m.w0.as_slice_mut().unwrap());
    let w1 = numeric(p, &loss, p.w1.len(), |m| m.w1.as_slice_mut().unwrap());
    let beta = numeric(p, &loss, p.mixture.beta_logits.len(), |m| {
        m.mixture.beta_logits.as_slice_mut().unwrap()
    });
    let gamma = numeric(p, &loss, p.mixture.gamma_logits.len(), |m| {
        m.mixture.gamma_logits.as_slice_mut().unwrap()
    });
    Some(GradientCheck {
        w0: block_error(grads.w0.as_slice().unwrap(), &w0),
        w1: block_error(grads.w1.as_slice().unwrap(), &w1),
        beta_logits: block_error(grads.mixture.beta_logits.as_slice().unwrap(), &beta),
        gamma_logits: block_error(grads.mixture.gamma_logits.as_slice().unwrap(), &gamma),
    })
}

/// Worst relative error over `restarts` instances and every model family.
/// An instance with a pre-activation near the ReLU kink is redrawn; the
/// second value counts redraws.
pub fn gradient_sweep(restarts: u64) -> (f64, usize) {
    const FAMILIES: [(Provenance, Propagation); 4] = [
        (Provenance::Mixed, Propagation::Convolution),
        (Provenance::AgendaOnly, Propagation::Convolution),
        (Provenance::FramingOnly, Propagation::Convolution),
        (Provenance::Mixed, Propagation::Identity),
    ];
    let mut worst = 0.0f64;
    let mut redraws = 0;
    for restart in 0..restarts {
        for attempt in 0.. {
            let inst = gradient_instance(restart * 1000 + attempt);
            let checks: Option<Vec<GradientCheck>> =
                FAMILIES.iter().map(|&(prov, prop)| gradient_check(&inst, prov, prop)).collect();
            match checks {
                Some(checks) => {
                    worst = checks.iter().map(GradientCheck::worst).fold(worst, f64::max);
                    break;
                }
                None => redraws += 1,
            }
        }
    }
    (worst, redraws)
}

/// Grid used for the planted benchmarks: the default learning rates with a
/// lambda axis extended upward so strong pruning is reachable.
pub fn benchmark_grid(max_epochs: usize) -> concept_gae::optim::SweepGrid {
    concept_gae::optim::SweepGrid {
        max_epochs,
        learning_rates: vec![1e-4, 3e-4, 1e-3, 3e-3],
        lambdas: vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
    }
}

pub const BIN: &str = env!("CARGO_BIN_EXE_concept-gae");

pub fn run(cwd: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(cwd)
        .env_remove("CONCEPT_GAE_OUT")
        .output()
        .unwrap()
}

pub fn ok(cwd: &Path, args: &[&str]) {
    let out = run(cwd, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Relative path -> bytes for every file under `root`.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn write_weights(dir: &Path) {
    let mut tsv = String::from("node_i\tnode_j\tweight\n");
    for i in 0..12 {
        for j in i + 1..12 {
            let w = if (i < 6) == (j < 6) { 40 + (i * j) % 7 } else { 1 + (i + j) % 2 };
            tsv.push_str(&format!("s{i:02}\ts{j:02}\t{w}\n"));
        }
    }
    fs::write(dir.join("weights.tsv"), tsv).unwrap();
}

/// Every subcommand once, with relative paths so outputs are comparable
/// across working directories.
pub fn full_pipeline(cwd: &Path) {
    write_weights(cwd);
    let data = ["--graph", "out/graph.json", "--features", "out/features", "--split", "out/split.json"];
    ok(cwd, &["synth", "--seed", "5"]);
    let mut train = vec!["train", "--seed", "5", "--epochs", "40", "--standardize", "true", "--out-dir", "out/train"];
    train.extend(data);
    ok(cwd, &train);
    let mut sweep = vec![
        "sweep", "--seed", "5", "--max-epochs", "40", "--learning-rates", "1e-3,3e-3", "--lambdas", "1e-3",
        "--theta", "50", "--standardize", "true", "--jobs", "2", "--out-dir", "out/sweep",
    ];
    sweep.extend(data);
    ok(cwd, &sweep);
    ok(
        cwd,
        &[
            "eval", "--graph", "out/graph.json", "--split", "out/split.json", "--model", "out/train/model", "--model",
            "out/sweep/model", "--out-dir", "out/eval",
        ],
    );
    ok(cwd, &["analyze", "--model", "out/sweep/model", "--features", "out/features", "--out-dir", "out/analysis"]);
    ok(
        cwd,
        &[
            "dynamics", "--period", "t0=out/train/model", "--period", "t1=out/sweep/model", "--period",
            "t2=out/train/model", "--out-dir", "out/dynamics",
        ],
    );
    ok(
        cwd,
        &[
            "plot-data", "--leaderboard", "out/sweep/leaderboard.json", "--analysis", "out/analysis/analysis.json",
            "--drift", "out/dynamics/drift_ranking.json", "--out-dir", "out/plots",
        ],
    );
    ok(cwd, &["backbone", "--weights", "weights.tsv", "--null-shuffles", "10", "--seed", "2", "--out-dir", "out/backbone"]);
}
