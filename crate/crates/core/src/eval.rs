//! Exact ranking metrics for link prediction.
//!
//! AUC uses the Mann-Whitney form, counting tied positive/negative pairs as
//! one half. AP orders by descending score and breaks ties by input index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gae::decode_pairs;
use crate::graph::NodePair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auc: f64,
    pub ap: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

fn class_counts(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("scores"));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass { n_pos, n_neg });
    }
    Ok((n_pos, n_neg))
}

/// Probability that a random positive outranks a random negative.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (n_pos, n_neg) = class_counts(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // twice the Mann-Whitney U statistic, kept integral so ties stay exact
    let mut u2: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        let (mut pos_g, mut neg_g) = (0u64, 0u64);
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            if labels[order[end]] {
                pos_g += 1;
            } else {
                neg_g += 1;
            }
            end += 1;
        }
        u2 += pos_g * (2 * neg_below + neg_g);
        neg_below += neg_g;
        start = end;
    }
    Ok(u2 as f64 / (2 * n_pos as u64 * n_neg as u64) as f64)
}

/// Mean precision at the rank of each positive.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (n_pos, _) = class_counts(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps input order among ties
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut hits = 0usize;
    let mut total = 0.0;
    for (rank, &idx) in order.iter().enumerate() {
        if labels[idx] {
            hits += 1;
            total += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(total / n_pos as f64)
}

pub fn metrics(scores: &[f64], labels: &[bool]) -> Result<Metrics> {
    let (n_pos, n_neg) = class_counts(scores, labels)?;
    Ok(Metrics {
        auc: auc(scores, labels)?,
        ap: average_precision(scores, labels)?,
        n_pos,
        n_neg,
    })
}

/// Scores positives then negatives with the inner-product decoder.
pub fn evaluate_embeddings(
    z: &ndarray::Array2<f64>,
    positives: &[NodePair],
    negatives: &[NodePair],
) -> Result<Metrics> {
    if positives.is_empty() && negatives.is_empty() {
        return Err(Error::InvalidArgument("empty evaluation part".into()));
    }
    let pairs: Vec<NodePair> = positives.iter().chain(negatives).copied().collect();
    let labels: Vec<bool> = (0..pairs.len()).map(|k| k < positives.len()).collect();
    metrics(&decode_pairs(z, &pairs), &labels)
}
