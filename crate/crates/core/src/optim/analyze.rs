use serde::{Deserialize, Serialize};

use super::train::TrainedModel;
use super::Variant;
use crate::features::{FeatureBundle, FOUNDATIONS, N_FOUNDATIONS};

/// γ within this distance of 0 or 1 counts as an endpoint.
pub const GAMMA_ENDPOINT: f64 = 0.01;
const GAMMA_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaClass {
    /// γ ≥ 0.99
    Agenda,
    /// γ ≤ 0.01
    Framing,
    Mixed,
}

impl GammaClass {
    pub fn of(gamma: f64) -> Self {
        if gamma >= 1.0 - GAMMA_ENDPOINT {
            GammaClass::Agenda
        } else if gamma <= GAMMA_ENDPOINT {
            GammaClass::Framing
        } else {
            GammaClass::Mixed
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptReport {
    pub index: usize,
    pub concept: String,
    pub gamma: f64,
    pub gamma_class: GammaClass,
    /// β in foundation order
    pub beta: Vec<f64>,
    /// β sorted descending (the rank curve)
    pub beta_ranked: Vec<f64>,
    pub dominant_foundation: String,
    pub dominant_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaHistogram {
    pub agenda: usize,
    pub framing: usize,
    pub mixed: usize,
    /// counts over [0, 0.1), [0.1, 0.2), ..., [0.9, 1.0]
    pub bins: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoundationShare {
    pub foundation: String,
    pub count: usize,
    pub percent: f64,
}

/// `|s_k(v, c)|` for a surviving concept's dominant foundation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramingStrength {
    pub node: String,
    pub concept: String,
    pub foundation: String,
    pub strength: f64,
}

/// Summary of the surviving concept set. Concepts appear in index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub variant: Variant,
    pub epoch: usize,
    pub concepts: Vec<ConceptReport>,
    pub gamma_histogram: GammaHistogram,
    pub foundation_tally: Vec<FoundationShare>,
    pub framing_strength: Vec<FramingStrength>,
}

pub fn analyze(model: &TrainedModel, features: &FeatureBundle) -> SparsityReport {
    let mixture = &model.params.mixture;
    let gamma = mixture.effective_gamma(model.config.variant.provenance());
    let beta = mixture.beta();

    let mut concepts = Vec::with_capacity(model.active_concepts.len());
    let mut histogram = GammaHistogram {
        agenda: 0,
        framing: 0,
        mixed: 0,
        bins: vec![0; GAMMA_BINS],
    };
    let mut tally = [0usize; N_FOUNDATIONS];
    let mut framing_strength = Vec::new();

    for &c in &model.active_concepts {
        let g = gamma[c];
        let class = GammaClass::of(g);
        match class {
            GammaClass::Agenda => histogram.agenda += 1,
            GammaClass::Framing => histogram.framing += 1,
            GammaClass::Mixed => histogram.mixed += 1,
        }
        histogram.bins[((g * GAMMA_BINS as f64) as usize).min(GAMMA_BINS - 1)] += 1;

        let b: Vec<f64> = beta.row(c).to_vec();
        // first maximum wins on ties
        let dominant = (0..N_FOUNDATIONS).fold(0, |best, k| if b[k] > b[best] { k } else { best });
        tally[dominant] += 1;
        let mut ranked = b.clone();
        ranked.sort_by(|x, y| y.total_cmp(x));

        for (v, node) in features.node_names().iter().enumerate() {
            framing_strength.push(FramingStrength {
                node: node.clone(),
                concept: features.concepts()[c].clone(),
                foundation: FOUNDATIONS[dominant].to_string(),
                strength: features.framing()[dominant][[v, c]].abs(),
            });
        }
        concepts.push(ConceptReport {
            index: c,
            concept: features.concepts()[c].clone(),
            gamma: g,
            gamma_class: class,
            beta: b,
            beta_ranked: ranked,
            dominant_foundation: FOUNDATIONS[dominant].to_string(),
            dominant_index: dominant,
        });
    }

    let total = model.active_concepts.len();
    let foundation_tally = FOUNDATIONS
        .iter()
        .zip(tally)
        .map(|(name, count)| FoundationShare {
            foundation: name.to_string(),
            count,
            percent: if total == 0 {
                0.0
            } else {
                100.0 * count as f64 / total as f64
            },
        })
        .collect();

    SparsityReport {
        variant: model.config.variant,
        epoch: model.epoch,
        concepts,
        gamma_histogram: histogram,
        foundation_tally,
        framing_strength,
    }
}
