//! Node-by-concept signals: agenda (relative concept frequency), framing
//! (moral-foundation projections mixed by learnable per-concept weights), and
//! their per-concept mixture that forms the encoder input.

use std::collections::HashSet;

use ndarray::{Array1, Array2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Moral foundations in their fixed order.
pub const FOUNDATIONS: [&str; 5] = [
    "care/harm",
    "fairness/cheating",
    "loyalty/betrayal",
    "authority/subversion",
    "sanctity/degradation",
];
pub const N_FOUNDATIONS: usize = FOUNDATIONS.len();

/// Raw per-node concept statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    node_names: Vec<String>,
    concepts: Vec<String>,
    counts: Array2<u64>,
    framing: Vec<Array2<f64>>,
}

impl FeatureBundle {
    /// `counts` is nodes × concepts; `framing[k]` holds `s_k` with the same shape.
    pub fn new(
        node_names: Vec<String>,
        concepts: Vec<String>,
        counts: Array2<u64>,
        framing: Vec<Array2<f64>>,
    ) -> Result<Self> {
        let shape = (node_names.len(), concepts.len());
        if counts.dim() != shape {
            return Err(Error::Shape(format!(
                "counts are {:?}, expected {shape:?}",
                counts.dim()
            )));
        }
        let mut seen = HashSet::with_capacity(node_names.len());
        if let Some(dup) = node_names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::DuplicateNode(dup.clone()));
        }
        let mut seen = HashSet::with_capacity(concepts.len());
        if let Some(dup) = concepts.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(Error::InvalidArgument(format!("duplicate concept `{dup}`")));
        }
        if framing.len() != N_FOUNDATIONS {
            return Err(Error::Shape(format!(
                "expected {N_FOUNDATIONS} framing matrices, got {}",
                framing.len()
            )));
        }
        for (k, s) in framing.iter().enumerate() {
            if s.dim() != shape {
                return Err(Error::Shape(format!(
                    "framing_{k} is {:?}, expected {shape:?}",
                    s.dim()
                )));
            }
            if let Some(bad) = s.iter().find(|x| !(x.abs() <= 1.0)) {
                return Err(Error::InvalidArgument(format!(
                    "framing_{k} value {bad} outside [-1, 1]"
                )));
            }
        }
        Ok(FeatureBundle {
            node_names,
            concepts,
            counts,
            framing,
        })
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn concepts(&self) -> &[String] {
        &self.concepts
    }

    pub fn counts(&self) -> &Array2<u64> {
        &self.counts
    }

    pub fn framing(&self) -> &[Array2<f64>] {
        &self.framing
    }

    pub fn n_nodes(&self) -> usize {
        self.node_names.len()
    }

    pub fn n_concepts(&self) -> usize {
        self.concepts.len()
    }

    /// Reorders rows to follow `order` (a node-name list), e.g. a graph's node order.
    pub fn aligned_to(&self, order: &[String]) -> Result<FeatureBundle> {
        if order == self.node_names.as_slice() {
            return Ok(self.clone());
        }
        if order.len() != self.node_names.len() {
            return Err(Error::Shape(format!(
                "graph has {} nodes, features have {}",
                order.len(),
                self.node_names.len()
            )));
        }
        let rows: Vec<usize> = order
            .iter()
            .map(|name| {
                self.node_names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::UnknownNode(name.clone()))
            })
            .collect::<Result<_>>()?;
        Ok(FeatureBundle {
            node_names: order.to_vec(),
            concepts: self.concepts.clone(),
            counts: self.counts.select(Axis(0), &rows),
            framing: self
                .framing
                .iter()
                .map(|s| s.select(Axis(0), &rows))
                .collect(),
        })
    }
}

/// `a(v, c) = n(v, c) / Σ_k n(v, k)`; all-zero rows stay zero.
pub fn agenda_matrix(counts: &Array2<u64>) -> Array2<f64> {
    let mut out = counts.mapv(|n| n as f64);
    for mut row in out.rows_mut() {
        let total: f64 = row.sum();
        if total > 0.0 {
            row /= total;
        }
    }
    out
}

/// Which signal feeds the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// `γ ≡ 1`
    AgendaOnly,
    /// `γ ≡ 0`
    FramingOnly,
    Mixed,
}

/// Per-concept mixture weights, stored as unconstrained logits.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    /// concepts × 5; `β(c) = softmax(beta_logits[c])`
    pub beta_logits: Array2<f64>,
    /// `γ(c) = logistic(gamma_logits[c])`
    pub gamma_logits: Array1<f64>,
}

impl MixtureParams {
    /// Zero logits: uniform β and γ = 0.5.
    pub fn neutral(n_concepts: usize) -> Self {
        MixtureParams {
            beta_logits: Array2::zeros((n_concepts, N_FOUNDATIONS)),
            gamma_logits: Array1::zeros(n_concepts),
        }
    }

    pub fn n_concepts(&self) -> usize {
        self.gamma_logits.len()
    }

    pub fn beta(&self) -> Array2<f64> {
        let mut out = self.beta_logits.clone();
        for mut row in out.rows_mut() {
            let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
            row.mapv_inplace(|x| (x - max).exp());
            let total = row.sum();
            row /= total;
        }
        out
    }

    pub fn gamma(&self) -> Array1<f64> {
        self.gamma_logits.mapv(logistic)
    }

    /// γ as seen by the model under `mode`.
    pub fn effective_gamma(&self, mode: Provenance) -> Array1<f64> {
        match mode {
            Provenance::AgendaOnly => Array1::ones(self.n_concepts()),
            Provenance::FramingOnly => Array1::zeros(self.n_concepts()),
            Provenance::Mixed => self.gamma(),
        }
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `f(v, c) = Σ_k β_k(c) s_k(v, c)`.
pub fn framing_scalar(framing: &[Array2<f64>], params: &MixtureParams) -> Array2<f64> {
    let beta = params.beta();
    let mut f = Array2::zeros(framing[0].raw_dim());
    for (k, s) in framing.iter().enumerate() {
        let weights = beta.column(k);
        Zip::from(f.rows_mut()).and(s.rows()).for_each(|mut f_row, s_row| {
            Zip::from(&mut f_row)
                .and(&s_row)
                .and(&weights)
                .for_each(|f, &s, &b| *f += b * s);
        });
    }
    f
}

/// The encoder input `Ψ` together with the variant that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub psi: Array2<f64>,
    pub provenance: Provenance,
}

/// Dense real-valued signals derived once from a [`FeatureBundle`].
#[derive(Debug, Clone, PartialEq)]
pub struct SignalInputs {
    pub agenda: Array2<f64>,
    pub framing: Vec<Array2<f64>>,
}

impl SignalInputs {
    /// With `standardize`, every agenda column and every framing column is
    /// z-scored across nodes (constant columns become zero).
    pub fn from_bundle(bundle: &FeatureBundle, standardize: bool) -> Self {
        let mut agenda = agenda_matrix(bundle.counts());
        let mut framing = bundle.framing().to_vec();
        if standardize {
            standardize_columns(&mut agenda);
            framing.iter_mut().for_each(standardize_columns);
        }
        SignalInputs { agenda, framing }
    }

    pub fn n_nodes(&self) -> usize {
        self.agenda.nrows()
    }

    pub fn n_concepts(&self) -> usize {
        self.agenda.ncols()
    }

    /// Ψ for the given mixture and mode.
    pub fn mix(&self, params: &MixtureParams, mode: Provenance) -> FeatureMatrix {
        let psi = match mode {
            Provenance::AgendaOnly => self.agenda.clone(),
            Provenance::FramingOnly => framing_scalar(&self.framing, params),
            Provenance::Mixed => {
                let gamma = params.gamma();
                let mut u = framing_scalar(&self.framing, params);
                Zip::from(u.rows_mut())
                    .and(self.agenda.rows())
                    .for_each(|mut u_row, a_row| {
                        Zip::from(&mut u_row)
                            .and(&a_row)
                            .and(&gamma)
                            .for_each(|u, &a, &g| *u = g * a + (1.0 - g) * *u);
                    });
                u
            }
        };
        FeatureMatrix {
            psi,
            provenance: mode,
        }
    }

    /// Entry-wise partial derivatives of `u` under the mixed model:
    /// `∂u/∂gamma_logits[c]` (nodes × concepts) and, per foundation k,
    /// `∂u/∂beta_logits[c, k]` (nodes × concepts).
    pub fn partials(&self, params: &MixtureParams) -> (Array2<f64>, Vec<Array2<f64>>) {
        let gamma = params.gamma();
        let beta = params.beta();
        let f = framing_scalar(&self.framing, params);
        let mut d_gamma = &self.agenda - &f;
        for mut row in d_gamma.rows_mut() {
            Zip::from(&mut row)
                .and(&gamma)
                .for_each(|d, &g| *d *= g * (1.0 - g));
        }
        let d_beta = (0..N_FOUNDATIONS)
            .map(|k| {
                let mut d = &self.framing[k] - &f;
                for mut row in d.rows_mut() {
                    Zip::from(&mut row)
                        .and(&gamma)
                        .and(beta.column(k))
                        .for_each(|d, &g, &b| *d *= (1.0 - g) * b);
                }
                d
            })
            .collect();
        (d_gamma, d_beta)
    }

    /// Pulls an upstream gradient `d_psi` back onto the mixture logits.
    pub fn backprop(
        &self,
        params: &MixtureParams,
        mode: Provenance,
        d_psi: &Array2<f64>,
    ) -> MixtureParams {
        let n_concepts = self.n_concepts();
        let mut grad = MixtureParams::neutral(n_concepts);
        if mode == Provenance::AgendaOnly {
            return grad;
        }
        let gamma = params.effective_gamma(mode);
        let beta = params.beta();
        let f = framing_scalar(&self.framing, params);
        // weighted column sums Σ_v d_psi(v,c) · x(v,c)
        let col_dot = |x: &Array2<f64>| -> Array1<f64> { (d_psi * x).sum_axis(Axis(0)) };
        let df_dot = col_dot(&f);
        for k in 0..N_FOUNDATIONS {
            let ds = col_dot(&self.framing[k]);
            for c in 0..n_concepts {
                grad.beta_logits[[c, k]] = (1.0 - gamma[c]) * beta[[c, k]] * (ds[c] - df_dot[c]);
            }
        }
        if mode == Provenance::Mixed {
            let da = col_dot(&self.agenda);
            for c in 0..n_concepts {
                grad.gamma_logits[c] = gamma[c] * (1.0 - gamma[c]) * (da[c] - df_dot[c]);
            }
        }
        grad
    }
}

fn standardize_columns(m: &mut Array2<f64>) {
    let n = m.nrows() as f64;
    if n == 0.0 {
        return;
    }
    for mut col in m.columns_mut() {
        let mean = col.sum() / n;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd > 1e-12 {
            col.mapv_inplace(|x| (x - mean) / sd);
        } else {
            col.fill(0.0);
        }
    }
}

/// `u = γ·a + (1-γ)·f` from raw counts and framing projections.
pub fn mixture_features(
    counts: &Array2<u64>,
    framing: &[Array2<f64>],
    params: &MixtureParams,
) -> FeatureMatrix {
    let inputs = SignalInputs {
        agenda: agenda_matrix(counts),
        framing: framing.to_vec(),
    };
    inputs.mix(params, Provenance::Mixed)
}
