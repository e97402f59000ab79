use std::collections::HashSet;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{sgd_step, Adam, OptimizerKind};
use super::prox::{group_lasso_penalty, prox_group_row};
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::eval::{evaluate_embeddings, Metrics};
use crate::features::{FeatureBundle, SignalInputs};
use crate::gae::{backward, bce_loss, decode_pairs, encode, ModelParams};
use crate::graph::{
    normalized_adjacency, sample_negatives, EdgeSplit, Graph, NegativePool, NodePair, NormalizedAdjacency, SplitPart,
    DENSE_LIMIT,
};

const NEGATIVE_STREAM: u64 = 0x6e65_6761_7469_7665;
const FULL_RECONSTRUCTION_LIMIT: usize = 200;

/// Read-only inputs shared by every training run on one graph.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub graph: Graph,
    pub split: EdgeSplit,
    pub inputs: SignalInputs,
    /// Normalized adjacency of the training graph.
    pub adj: NormalizedAdjacency,
    frozen: HashSet<NodePair>,
    /// Precomputed training negatives for graphs small enough to enumerate.
    pool: Option<NegativePool>,
}

impl TrainingData {
    pub fn new(graph: &Graph, features: &FeatureBundle, split: &EdgeSplit, standardize: bool) -> Result<Self> {
        split.validate(graph)?;
        let features = features.aligned_to(graph.node_names())?;
        let train_graph = split.train_graph(graph)?;
        let frozen = split.frozen_negatives();
        Ok(TrainingData {
            graph: graph.clone(),
            split: split.clone(),
            inputs: SignalInputs::from_bundle(&features, standardize),
            adj: normalized_adjacency(&train_graph),
            pool: (graph.n_nodes() <= DENSE_LIMIT).then(|| NegativePool::new(graph, &frozen)),
            frozen,
        })
    }

    pub fn n_concepts(&self) -> usize {
        self.inputs.n_concepts()
    }

    /// Embeddings of `params` under `config`'s variant.
    pub fn embed(&self, params: &ModelParams, config: &TrainConfig) -> Result<Array2<f64>> {
        let psi = self.inputs.mix(&params.mixture, config.variant.provenance());
        Ok(encode(&self.adj, &psi, params, config.variant.propagation())?.z)
    }

    pub fn evaluate(&self, params: &ModelParams, config: &TrainConfig, part: SplitPart) -> Result<Metrics> {
        let z = self.embed(params, config)?;
        let (pos, neg) = self.split.part(part);
        evaluate_embeddings(&z, pos, neg)
    }
}

/// Per-epoch training trace. Losses are those minimized during the epoch;
/// dev metrics and `n_active` describe the parameters after its update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss_pred: f64,
    pub loss_reg: f64,
    pub loss_total: f64,
    pub dev_auc: f64,
    pub dev_ap: f64,
    pub n_active: usize,
}

/// Parameters captured at a selected epoch.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub epoch: usize,
    pub dev: Metrics,
    pub params: ModelParams,
    pub active_concepts: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    pub active_concepts: Vec<usize>,
    pub config: TrainConfig,
    /// Epoch whose parameters `params` holds.
    pub epoch: usize,
}

/// Result of one run when checkpoints are selected under a size cap.
#[derive(Debug, Clone)]
pub(crate) struct RunOutcome {
    pub model: TrainedModel,
    pub best: Option<Checkpoint>,
    /// Best dev AUC among epochs with exactly `k` active concepts, indexed by `k`.
    pub frontier: Vec<Option<f64>>,
    pub min_active: usize,
}

/// Indices of rows of `w0` whose ℓ2 norm exceeds `tol`.
pub fn active_concepts(w0: &Array2<f64>, tol: f64) -> Vec<usize> {
    w0.rows()
        .into_iter()
        .enumerate()
        .filter(|(_, r)| r.dot(r).sqrt() > tol)
        .map(|(i, _)| i)
        .collect()
}

/// Trains one configuration for `config.epochs` epochs and returns the final model.
pub fn train(graph: &Graph, features: &FeatureBundle, split: &EdgeSplit, config: &TrainConfig) -> Result<TrainedModel> {
    let data = TrainingData::new(graph, features, split, config.standardize)?;
    Ok(run(&data, config, None)?.model)
}

/// Like [`train`] on prepared data, additionally returning the best checkpoint
/// with at most `theta` active concepts (dev AUC, then fewer concepts, then earlier epoch).
pub fn train_with_policy(
    data: &TrainingData,
    config: &TrainConfig,
    theta: Option<usize>,
) -> Result<(TrainedModel, Option<Checkpoint>)> {
    let out = run(data, config, theta)?;
    Ok((out.model, out.best))
}

fn better(candidate: (f64, usize), incumbent: (f64, usize)) -> bool {
    candidate.0 > incumbent.0 || (candidate.0 == incumbent.0 && candidate.1 < incumbent.1)
}

pub(crate) fn run(data: &TrainingData, config: &TrainConfig, theta: Option<usize>) -> Result<RunOutcome> {
    config.validate()?;
    let n_concepts = data.n_concepts();
    let provenance = config.variant.provenance();
    let propagation = config.variant.propagation();
    let n_nodes = data.graph.n_nodes();
    if config.full_reconstruction && n_nodes > FULL_RECONSTRUCTION_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "full reconstruction is limited to {FULL_RECONSTRUCTION_LIMIT} nodes, graph has {n_nodes}"
        )));
    }

    let mut params = ModelParams::glorot(n_concepts, config.hidden_dim, config.embed_dim, config.seed);
    let mut adam = Adam::new(&params, config.adam);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ NEGATIVE_STREAM);
    let threshold = config.learning_rate * config.lambda;

    let positives = &data.split.train_edges;
    let full_pairs: Option<(Vec<NodePair>, Vec<bool>)> = config.full_reconstruction.then(|| {
        let train_graph = data.split.train_graph(&data.graph).expect("validated split");
        let pairs: Vec<NodePair> = (0..n_nodes)
            .flat_map(|i| ((i + 1)..n_nodes).map(move |j| (i, j)))
            .collect();
        let labels = pairs.iter().map(|&(i, j)| train_graph.has_edge(i, j)).collect();
        (pairs, labels)
    });

    let mut history: Vec<EpochRecord> = Vec::with_capacity(config.epochs);
    let mut best: Option<Checkpoint> = None;
    let mut frontier: Vec<Option<f64>> = vec![None; n_concepts + 1];
    let mut min_active = usize::MAX;
    let (dev_pos, dev_neg) = data.split.part(SplitPart::Dev);

    let mut pending: Option<(f64, f64, f64)> = None;
    for epoch in 1..=config.epochs + 1 {
        let psi = data.inputs.mix(&params.mixture, provenance);
        let cache = encode(&data.adj, &psi, &params, propagation).map_err(|e| match e {
            Error::NonFinite(_) if epoch > 1 => Error::Divergence { epoch },
            other => other,
        })?;

        // the current parameters are the model after epoch - 1
        if let Some((loss_pred, loss_reg, loss_total)) = pending.take() {
            let done = epoch - 1;
            let dev = evaluate_embeddings(&cache.z, dev_pos, dev_neg)?;
            let active = active_concepts(&params.w0, config.zero_row_tol);
            let k = active.len();
            history.push(EpochRecord {
                epoch: done,
                loss_pred,
                loss_reg,
                loss_total,
                dev_auc: dev.auc,
                dev_ap: dev.ap,
                n_active: k,
            });
            min_active = min_active.min(k);
            if frontier[k].is_none_or(|auc| dev.auc > auc) {
                frontier[k] = Some(dev.auc);
            }
            if theta.is_none_or(|cap| k <= cap)
                && best
                    .as_ref()
                    .is_none_or(|b| better((dev.auc, k), (b.dev.auc, b.active_concepts.len())))
            {
                best = Some(Checkpoint {
                    epoch: done,
                    dev,
                    params: params.clone(),
                    active_concepts: active,
                });
            }
        }
        if epoch > config.epochs {
            break;
        }

        let (pairs, labels) = match &full_pairs {
            Some((pairs, labels)) => (pairs.clone(), labels.clone()),
            None => {
                let seed = rng.random();
                let negatives = match &data.pool {
                    Some(pool) => pool.sample(positives.len(), seed)?,
                    None => sample_negatives(&data.graph, positives.len(), seed, &data.frozen)?,
                };
                let mut pairs = positives.clone();
                pairs.extend(negatives);
                let labels = (0..pairs.len()).map(|k| k < positives.len()).collect();
                (pairs, labels)
            }
        };
        let loss_pred = bce_loss(&decode_pairs(&cache.z, &pairs), &labels)?;
        if !loss_pred.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        let loss_reg = group_lasso_penalty(&params.w0);
        pending = Some((loss_pred, loss_reg, loss_pred + config.lambda * loss_reg));

        let grads = backward(&cache, &pairs, &labels, &data.adj, &data.inputs, &params)?;
        if grads.norm_squared().is_nan() {
            return Err(Error::Divergence { epoch });
        }
        let metric = match config.optimizer {
            OptimizerKind::Adam => adam.step(&mut params, &grads, config.learning_rate),
            OptimizerKind::Sgd => sgd_step(&mut params, &grads, config.learning_rate),
        };
        if threshold > 0.0 {
            for (mut row, weights) in params.w0.rows_mut().into_iter().zip(metric.rows()) {
                let updated = prox_group_row(
                    row.as_slice().expect("contiguous row"),
                    threshold,
                    weights.as_slice().expect("contiguous row"),
                    &config.prox_newton,
                )?;
                row.iter_mut().zip(updated).for_each(|(w, u)| *w = u);
            }
        }
    }

    let active = active_concepts(&params.w0, config.zero_row_tol);
    Ok(RunOutcome {
        model: TrainedModel {
            params,
            history,
            active_concepts: active,
            config: config.clone(),
            epoch: config.epochs,
        },
        best,
        frontier,
        min_active,
    })
}

impl TrainedModel {
    /// The model restricted to a checkpoint taken during its run.
    pub fn at_checkpoint(&self, checkpoint: &Checkpoint) -> TrainedModel {
        TrainedModel {
            params: checkpoint.params.clone(),
            history: self.history.clone(),
            active_concepts: checkpoint.active_concepts.clone(),
            config: self.config.clone(),
            epoch: checkpoint.epoch,
        }
    }

    pub fn last_record(&self) -> Option<&EpochRecord> {
        self.history.iter().find(|r| r.epoch == self.epoch)
    }
}
