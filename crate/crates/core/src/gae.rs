//! Two-layer graph-convolutional encoder, inner-product decoder, binary
//! cross-entropy over node pairs, and the matching reverse-mode gradients.

use ndarray::{Array1, Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{logistic, FeatureMatrix, MixtureParams, Provenance, SignalInputs};
use crate::graph::{NodePair, NormalizedAdjacency};

pub const HIDDEN_DIM: usize = 100;
pub const EMBED_DIM: usize = 10;

/// Probability clamp applied before taking logs in the loss.
pub const PROB_CLAMP: f64 = 1e-7;

/// Trainable state: both encoder layers plus the feature mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// concepts × hidden; rows are the group-lasso groups
    pub w0: Array2<f64>,
    /// hidden × embedding
    pub w1: Array2<f64>,
    pub mixture: MixtureParams,
}

/// Gradients share the parameter layout.
pub type Gradients = ModelParams;

impl ModelParams {
    /// Glorot-uniform weights and neutral mixture logits.
    pub fn glorot(n_concepts: usize, hidden: usize, embed: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layer = |fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-limit..limit))
        };
        let w0 = layer(n_concepts, hidden);
        let w1 = layer(hidden, embed);
        ModelParams {
            w0,
            w1,
            mixture: MixtureParams::neutral(n_concepts),
        }
    }

    pub fn zeros_like(other: &ModelParams) -> Self {
        ModelParams {
            w0: Array2::zeros(other.w0.raw_dim()),
            w1: Array2::zeros(other.w1.raw_dim()),
            mixture: MixtureParams {
                beta_logits: Array2::zeros(other.mixture.beta_logits.raw_dim()),
                gamma_logits: Array1::zeros(other.mixture.gamma_logits.raw_dim()),
            },
        }
    }

    /// (concepts, hidden, embedding)
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.w0.nrows(), self.w0.ncols(), self.w1.ncols())
    }

    /// Hash of every parameter bit, used to detect stale forward caches.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let (c, h1, h2) = self.dims();
        let dims = [c as f64, h1 as f64, h2 as f64];
        let values = dims
            .iter()
            .chain(self.w0.iter())
            .chain(self.w1.iter())
            .chain(self.mixture.beta_logits.iter())
            .chain(self.mixture.gamma_logits.iter());
        // four independent FNV lanes, folded at the end
        let mut lanes = [h, h ^ 1, h ^ 2, h ^ 3];
        for (k, x) in values.enumerate() {
            let lane = &mut lanes[k % 4];
            *lane ^= x.to_bits();
            *lane = lane.wrapping_mul(0x0100_0000_01b3);
        }
        for lane in lanes {
            h ^= lane;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h
    }

    /// Squared Frobenius norm over all parameters.
    pub fn norm_squared(&self) -> f64 {
        self.w0.iter()
            .chain(self.w1.iter())
            .chain(self.mixture.beta_logits.iter())
            .chain(self.mixture.gamma_logits.iter())
            .map(|x| x * x)
            .sum()
    }
}

/// How node representations are mixed between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagation {
    /// `M = D^{-1/2}(A+I)D^{-1/2}`
    Convolution,
    /// `M = I`: the linear (non-convolutional) baseline
    Identity,
}

fn propagate(adj: &NormalizedAdjacency, mode: Propagation, x: &Array2<f64>) -> Array2<f64> {
    match mode {
        Propagation::Convolution => adj.apply(x),
        Propagation::Identity => x.clone(),
    }
}

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub psi: Array2<f64>,
    pub provenance: Provenance,
    pub propagation: Propagation,
    /// `M Ψ`
    pub propagated: Array2<f64>,
    /// `ReLU(M Ψ W0)`
    pub h1: Array2<f64>,
    /// `M H1`
    pub q: Array2<f64>,
    /// `Z = M H1 W1`
    pub z: Array2<f64>,
    fingerprint: u64,
}

fn check_finite(name: &'static str, m: &Array2<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}

pub fn encode(
    adj: &NormalizedAdjacency,
    psi: &FeatureMatrix,
    params: &ModelParams,
    propagation: Propagation,
) -> Result<ForwardCache> {
    let (c, h1_dim, _) = params.dims();
    if psi.psi.ncols() != c {
        return Err(Error::Shape(format!(
            "Ψ has {} columns but W0 has {c} rows",
            psi.psi.ncols()
        )));
    }
    if params.w1.nrows() != h1_dim {
        return Err(Error::Shape(format!(
            "W1 has {} rows but W0 has {h1_dim} columns",
            params.w1.nrows()
        )));
    }
    if propagation == Propagation::Convolution && adj.n_nodes() != psi.psi.nrows() {
        return Err(Error::Shape(format!(
            "adjacency has {} nodes but Ψ has {} rows",
            adj.n_nodes(),
            psi.psi.nrows()
        )));
    }
    check_finite("Ψ", &psi.psi)?;
    check_finite("W0", &params.w0)?;
    check_finite("W1", &params.w1)?;

    let propagated = propagate(adj, propagation, &psi.psi);
    let mut h1 = propagated.dot(&params.w0);
    h1.mapv_inplace(|x| x.max(0.0));
    let q = propagate(adj, propagation, &h1);
    let z = q.dot(&params.w1);
    check_finite("Z", &z)?;
    Ok(ForwardCache {
        psi: psi.psi.clone(),
        provenance: psi.provenance,
        propagation,
        propagated,
        h1,
        q,
        z,
        fingerprint: params.fingerprint(),
    })
}

pub fn pair_logit(z: &Array2<f64>, (i, j): NodePair) -> f64 {
    z.row(i).dot(&z.row(j))
}

/// `σ(z_i · z_j)` for each pair.
pub fn decode_pairs(z: &Array2<f64>, pairs: &[NodePair]) -> Vec<f64> {
    pairs
        .iter()
        .map(|&p| logistic(pair_logit(z, p)))
        .collect()
}

/// Mean binary cross-entropy with probabilities clamped to `[1e-7, 1 - 1e-7]`.
pub fn bce_loss(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if y {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / scores.len() as f64)
}

/// Gradients of the mean pair BCE with respect to every trainable parameter,
/// including the path through Ψ into the mixture logits.
///
/// The logit gradient is `σ(l) - y`, the exact derivative wherever the
/// probability lies inside the clamp range.
pub fn backward(
    cache: &ForwardCache,
    pairs: &[NodePair],
    labels: &[bool],
    adj: &NormalizedAdjacency,
    inputs: &SignalInputs,
    params: &ModelParams,
) -> Result<Gradients> {
    if cache.fingerprint != params.fingerprint() || cache.psi.ncols() != params.w0.nrows() {
        return Err(Error::StaleCache);
    }
    if pairs.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} pairs but {} labels",
            pairs.len(),
            labels.len()
        )));
    }
    let mut grads = ModelParams::zeros_like(params);
    if pairs.is_empty() {
        return Ok(grads);
    }
    let z = &cache.z;
    let n = pairs.len() as f64;
    let mut dz = Array2::zeros(z.raw_dim());
    for (&(i, j), &y) in pairs.iter().zip(labels) {
        let g = (logistic(pair_logit(z, (i, j))) - if y { 1.0 } else { 0.0 }) / n;
        dz.row_mut(i).scaled_add(g, &z.row(j));
        dz.row_mut(j).scaled_add(g, &z.row(i));
    }
    grads.w1 = cache.q.t().dot(&dz);
    let dq = dz.dot(&params.w1.t());
    let mut dh1 = propagate(adj, cache.propagation, &dq);
    Zip::from(&mut dh1)
        .and(&cache.h1)
        .for_each(|d, &h| {
            if h <= 0.0 {
                *d = 0.0
            }
        });
    grads.w0 = cache.propagated.t().dot(&dh1);
    if cache.provenance != Provenance::AgendaOnly {
        let dp = dh1.dot(&params.w0.t());
        let dpsi = propagate(adj, cache.propagation, &dp);
        grads.mixture = inputs.backprop(&params.mixture, cache.provenance, &dpsi);
    }
    Ok(grads)
}

/// Forward pass and loss in one go, convenient for finite-difference checks.
pub fn pair_loss(
    adj: &NormalizedAdjacency,
    inputs: &SignalInputs,
    params: &ModelParams,
    provenance: Provenance,
    propagation: Propagation,
    pairs: &[NodePair],
    labels: &[bool],
) -> Result<f64> {
    let psi = inputs.mix(&params.mixture, provenance);
    let cache = encode(adj, &psi, params, propagation)?;
    bce_loss(&decode_pairs(&cache.z, pairs), labels)
}
