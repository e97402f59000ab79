//! Planted-polarization benchmark: a stochastic block model whose blocks are
//! signalled by a known subset of concepts.

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureBundle, N_FOUNDATIONS};
use crate::graph::{Graph, NodePair};

const MAX_ATTEMPTS: usize = 10;

/// How an informative concept carries the block signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "foundation")]
pub enum SignalKind {
    /// Block-dependent discussion frequency.
    Agenda,
    /// Block-dependent projection on one foundation.
    Framing(usize),
    /// Both of the above.
    Mixed(usize),
}

impl SignalKind {
    pub fn foundation(self) -> Option<usize> {
        match self {
            SignalKind::Agenda => None,
            SignalKind::Framing(k) | SignalKind::Mixed(k) => Some(k),
        }
    }

    fn has_agenda(self) -> bool {
        matches!(self, SignalKind::Agenda | SignalKind::Mixed(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedConfig {
    pub n_nodes: usize,
    pub n_blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub n_concepts: usize,
    pub n_informative: usize,
    /// Signal kinds assigned to informative concepts in turn.
    pub kinds: Vec<SignalKind>,
    /// Standard deviation of framing values around their means.
    pub noise_std: f64,
    /// Distance between block framing means, in units of `noise_std`.
    pub separation: f64,
    /// Poisson mean of a concept's count at a node.
    pub base_count: f64,
    /// Count mean multiplier for an agenda concept inside its favoured block.
    pub agenda_lift: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            n_nodes: 60,
            n_blocks: 2,
            p_in: 0.5,
            p_out: 0.05,
            n_concepts: 50,
            n_informative: 10,
            kinds: vec![SignalKind::Agenda, SignalKind::Framing(0), SignalKind::Mixed(1)],
            noise_std: 0.1,
            separation: 0.7,
            base_count: 20.0,
            agenda_lift: 1.15,
            seed: 0,
        }
    }
}

impl PlantedConfig {
    /// Two 4-cliques with one block-aligned concept among `n_concepts`.
    pub fn two_cliques(n_concepts: usize, seed: u64) -> Self {
        PlantedConfig {
            separation: 3.0,
            agenda_lift: 3.0,
            n_nodes: 8,
            n_blocks: 2,
            p_in: 1.0,
            p_out: 0.0,
            n_concepts,
            n_informative: 1,
            kinds: vec![SignalKind::Mixed(0)],
            seed,
            ..PlantedConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n_blocks == 0 || self.n_nodes < self.n_blocks {
            return bad(format!("{} nodes cannot fill {} blocks", self.n_nodes, self.n_blocks));
        }
        if !(0.0..=1.0).contains(&self.p_in) || !(0.0..=1.0).contains(&self.p_out) || self.p_in <= self.p_out {
            return bad(format!("need 0 <= p_out < p_in <= 1, got {} / {}", self.p_out, self.p_in));
        }
        if self.n_informative > self.n_concepts || self.n_concepts == 0 {
            return bad(format!(
                "{} informative concepts out of {}",
                self.n_informative, self.n_concepts
            ));
        }
        if self.n_informative > 0 && self.kinds.is_empty() {
            return bad("informative concepts need at least one signal kind".into());
        }
        if let Some(k) = self.kinds.iter().filter_map(|k| k.foundation()).find(|&k| k >= N_FOUNDATIONS) {
            return bad(format!("foundation index {k} out of range"));
        }
        if !(self.noise_std >= 0.0) || !(self.base_count > 0.0) || !(self.agenda_lift > 0.0) || !self.separation.is_finite() {
            return bad("noise_std >= 0, base_count > 0 and agenda_lift > 0 are required".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedConcept {
    pub index: usize,
    pub signal: SignalKind,
    /// Block whose nodes over-use the concept or frame it positively.
    pub favoured_block: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub blocks: Vec<usize>,
    /// Sorted by concept index.
    pub informative: Vec<PlantedConcept>,
}

impl PlantedTruth {
    pub fn informative_indices(&self) -> Vec<usize> {
        self.informative.iter().map(|c| c.index).collect()
    }
}

fn sbm(cfg: &PlantedConfig, blocks: &[usize], rng: &mut ChaCha8Rng) -> Vec<NodePair> {
    let mut edges = Vec::new();
    for i in 0..cfg.n_nodes {
        for j in (i + 1)..cfg.n_nodes {
            let p = if blocks[i] == blocks[j] { cfg.p_in } else { cfg.p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Samples a graph, features and the planted ground truth. Deterministic per seed.
pub fn generate_planted(cfg: &PlantedConfig) -> Result<(Graph, FeatureBundle, PlantedTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (n, c) = (cfg.n_nodes, cfg.n_concepts);
    let blocks: Vec<usize> = (0..n).map(|v| v * cfg.n_blocks / n).collect();
    let names: Vec<String> = (0..n).map(|v| format!("v{v:03}")).collect();

    let mut edges = Vec::new();
    for attempt in 1..=MAX_ATTEMPTS {
        edges = sbm(cfg, &blocks, &mut rng);
        if !edges.is_empty() {
            break;
        }
        if attempt == MAX_ATTEMPTS {
            return Err(Error::InvalidArgument(format!(
                "planted graph had no edges after {MAX_ATTEMPTS} attempts (p_in {}, p_out {})",
                cfg.p_in, cfg.p_out
            )));
        }
    }
    let graph = Graph::from_indices(names.clone(), &edges)?;

    let mut chosen: Vec<usize> = sample(&mut rng, c, cfg.n_informative).into_vec();
    chosen.sort_unstable();
    let informative: Vec<PlantedConcept> = chosen
        .iter()
        .enumerate()
        .map(|(r, &index)| PlantedConcept {
            index,
            signal: cfg.kinds[r % cfg.kinds.len()],
            favoured_block: r % cfg.n_blocks,
        })
        .collect();
    let mut plan: Vec<Option<&PlantedConcept>> = vec![None; c];
    for p in &informative {
        plan[p.index] = Some(p);
    }

    let base = Poisson::new(cfg.base_count).expect("positive mean");
    let lifted = Poisson::new(cfg.base_count * cfg.agenda_lift).expect("positive mean");
    let noise = Normal::new(0.0, cfg.noise_std).expect("finite std");
    let shift = 0.5 * cfg.separation * cfg.noise_std;

    let mut counts = Array2::<u64>::zeros((n, c));
    let mut framing: Vec<Array2<f64>> = (0..N_FOUNDATIONS).map(|_| Array2::zeros((n, c))).collect();
    for v in 0..n {
        for j in 0..c {
            let planted = plan[j];
            let favoured = planted.is_some_and(|p| p.favoured_block == blocks[v]);
            let count = match planted {
                Some(p) if p.signal.has_agenda() && favoured => lifted.sample(&mut rng),
                _ => base.sample(&mut rng),
            };
            counts[[v, j]] = count as u64;
            for (k, s) in framing.iter_mut().enumerate() {
                let mean = match planted.and_then(|p| p.signal.foundation()) {
                    Some(fk) if fk == k => {
                        if favoured {
                            shift
                        } else {
                            -shift
                        }
                    }
                    _ => 0.0,
                };
                s[[v, j]] = (mean + noise.sample(&mut rng)).clamp(-1.0, 1.0);
            }
        }
    }
    let concepts = (0..c).map(|j| format!("c{j:03}")).collect();
    let bundle = FeatureBundle::new(names, concepts, counts, framing)?;
    Ok((graph, bundle, PlantedTruth { blocks, informative }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    /// Undefined when nothing was selected.
    pub precision: Option<f64>,
    /// Undefined when nothing was planted.
    pub recall: Option<f64>,
    pub true_positives: usize,
}

/// Set precision and recall of `selected` against the planted concepts.
pub fn recovery_metrics(selected: &[usize], truth: &PlantedTruth) -> Recovery {
    let planted = truth.informative_indices();
    let mut sel = selected.to_vec();
    sel.sort_unstable();
    sel.dedup();
    let tp = sel.iter().filter(|i| planted.binary_search(i).is_ok()).count();
    Recovery {
        precision: (!sel.is_empty()).then(|| tp as f64 / sel.len() as f64),
        recall: (!planted.is_empty()).then(|| tp as f64 / planted.len() as f64),
        true_positives: tp,
    }
}
