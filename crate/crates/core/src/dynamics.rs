//! Alignment of per-period embeddings and drift of nodes away from their
//! first-period position.

use std::collections::HashMap;

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// Orthogonal map applied on the right: `source · rotation ≈ target`.
    pub rotation: Array2<f64>,
    /// Frobenius norm of `source · rotation - target`.
    pub residual: f64,
    /// Fewer rows than columns; the rotation is not unique.
    pub underdetermined: bool,
}

fn to_nalgebra(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Orthogonal Procrustes: `R = U Vᵀ` from the SVD of `sourceᵀ · target`.
/// No centering or scaling is applied.
pub fn procrustes_align(source: &Array2<f64>, target: &Array2<f64>) -> Result<Alignment> {
    if source.dim() != target.dim() {
        return Err(Error::Shape(format!(
            "source is {:?}, target is {:?}",
            source.dim(),
            target.dim()
        )));
    }
    if source.iter().chain(target.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("embeddings"));
    }
    let (n, d) = source.dim();
    let m = to_nalgebra(&source.t().dot(target));
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let r = u * v_t;
    let rotation = Array2::from_shape_fn((d, d), |(i, j)| r[(i, j)]);
    let residual = (source.dot(&rotation) - target).iter().map(|x| x * x).sum::<f64>().sqrt();
    let underdetermined = n < d;
    if underdetermined {
        log::warn!("procrustes alignment over {n} shared nodes in {d} dimensions is underdetermined");
    }
    Ok(Alignment {
        rotation,
        residual,
        underdetermined,
    })
}

/// Embeddings of one period, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Period {
    pub label: String,
    pub node_names: Vec<String>,
    pub z: Array2<f64>,
}

impl Period {
    pub fn new(label: impl Into<String>, node_names: Vec<String>, z: Array2<f64>) -> Result<Self> {
        if node_names.len() != z.nrows() {
            return Err(Error::Shape(format!(
                "{} node names for {} embedding rows",
                node_names.len(),
                z.nrows()
            )));
        }
        Ok(Period {
            label: label.into(),
            node_names,
            z,
        })
    }

    fn index(&self) -> HashMap<&str, usize> {
        self.node_names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect()
    }
}

/// Ordered periods; the first is the alignment target for all others.
#[derive(Debug, Clone)]
pub struct EmbeddingSeries {
    periods: Vec<Period>,
    rotations: Vec<Alignment>,
}

impl EmbeddingSeries {
    /// Aligns each period to the first over their shared nodes.
    pub fn new(periods: Vec<Period>) -> Result<Self> {
        let Some(first) = periods.first() else {
            return Err(Error::InvalidArgument("no periods".into()));
        };
        let dim = first.z.ncols();
        if let Some(p) = periods.iter().find(|p| p.z.ncols() != dim) {
            return Err(Error::Shape(format!(
                "period `{}` has width {}, expected {dim}",
                p.label,
                p.z.ncols()
            )));
        }
        let base = first.index();
        let mut rotations = Vec::with_capacity(periods.len());
        for p in &periods {
            let shared: Vec<(usize, usize)> = p
                .node_names
                .iter()
                .enumerate()
                .filter_map(|(i, name)| base.get(name.as_str()).map(|&j| (i, j)))
                .collect();
            let source = Array2::from_shape_fn((shared.len(), dim), |(r, c)| p.z[[shared[r].0, c]]);
            let target = Array2::from_shape_fn((shared.len(), dim), |(r, c)| first.z[[shared[r].1, c]]);
            rotations.push(procrustes_align(&source, &target)?);
        }
        Ok(EmbeddingSeries { periods, rotations })
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn alignment(&self, period: usize) -> &Alignment {
        &self.rotations[period]
    }

    /// Cosine to the first-period embedding in every period where `node`
    /// appears (the first period included), and Pearson r of (period index, cosine).
    pub fn drift(&self, node: &str) -> Result<DriftSeries> {
        let first = &self.periods[0];
        let Some(&i0) = first.index().get(node) else {
            return Err(Error::UnknownNode(node.to_owned()));
        };
        let anchor = first.z.row(i0);
        let mut periods = Vec::new();
        let mut cosines = Vec::new();
        for (t, p) in self.periods.iter().enumerate() {
            let Some(i) = p.node_names.iter().position(|n| n == node) else {
                continue;
            };
            let aligned = p.z.row(i).dot(&self.rotations[t].rotation);
            let Some(c) = cosine(anchor, aligned.view()) else {
                return Err(Error::InvalidArgument(format!(
                    "node `{node}` has a zero-norm embedding in period `{}`",
                    p.label
                )));
            };
            periods.push(t);
            cosines.push(c);
        }
        if periods.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "node `{node}` appears in {} periods, need 3",
                periods.len()
            )));
        }
        let x: Vec<f64> = periods.iter().map(|&t| t as f64).collect();
        Ok(DriftSeries {
            node: node.to_owned(),
            pearson_r: pearson(&x, &cosines),
            periods: periods.iter().map(|&t| self.periods[t].label.clone()).collect(),
            cosines,
        })
    }

    /// Drift of every first-period node, most negative r first. Nodes whose
    /// drift is undefined are reported in `skipped`.
    pub fn ranking(&self) -> DriftRanking {
        let mut series = Vec::new();
        let mut skipped = Vec::new();
        for node in &self.periods[0].node_names {
            match self.drift(node) {
                Ok(s) => series.push(s),
                Err(e) => {
                    log::info!("skipping `{node}`: {e}");
                    skipped.push((node.clone(), e.to_string()));
                }
            }
        }
        // undefined r (constant cosines) sorts last
        series.sort_by(|a, b| match (a.pearson_r, b.pearson_r) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        });
        DriftRanking { series, skipped }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSeries {
    pub node: String,
    pub periods: Vec<String>,
    pub cosines: Vec<f64>,
    /// Absent when either series has zero variance.
    pub pearson_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRanking {
    pub series: Vec<DriftSeries>,
    pub skipped: Vec<(String, String)>,
}

pub fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Option<f64> {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    (na > 0.0 && nb > 0.0).then(|| (a.dot(&b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Pearson correlation; `None` when either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    // variance below rounding noise counts as constant
    let flat = |ss: f64, mean: f64| ss <= n * (1e-12 * mean.abs().max(1.0)).powi(2);
    if flat(sxx, mx) || flat(syy, my) {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array1};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
    }

    /// Random orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
    pub(crate) fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let mut q = gaussian(d, d, rng);
        for j in 0..d {
            for k in 0..j {
                let proj = q.column(j).dot(&q.column(k));
                let col_k = q.column(k).to_owned();
                q.column_mut(j).scaled_add(-proj, &col_k);
            }
            let norm = q.column(j).dot(&q.column(j)).sqrt();
            q.column_mut(j).mapv_inplace(|v| v / norm);
        }
        q
    }

    fn max_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        (a - b).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i}")).collect()
    }

    #[test]
    fn identity_when_target_equals_source() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = gaussian(20, 4, &mut rng);
        let a = procrustes_align(&x, &x).unwrap();
        assert!(max_diff(&a.rotation, &Array2::eye(4)) < 1e-10);
    }

    #[test]
    fn recovers_random_orthogonal_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let x = gaussian(30, 10, &mut rng);
            let q = random_orthogonal(10, &mut rng);
            let a = procrustes_align(&x, &x.dot(&q)).unwrap();
            assert!(a.residual < 1e-8);
            assert!(max_diff(&a.rotation.t().dot(&a.rotation), &Array2::eye(10)) < 1e-10);
            assert!(!a.underdetermined);
        }
    }

    #[test]
    fn noisy_target_residual_matches_nuclear_norm_formula() {
        // min ‖XR - Y‖² = ‖X‖² + ‖Y‖² - 2 Σ σ_i(XᵀY)
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = gaussian(25, 5, &mut rng);
        let y = x.dot(&random_orthogonal(5, &mut rng)) + gaussian(25, 5, &mut rng) * 0.3;
        let a = procrustes_align(&x, &y).unwrap();
        let sv = to_nalgebra(&x.t().dot(&y)).singular_values().sum();
        let expected = (x.iter().map(|v| v * v).sum::<f64>() + y.iter().map(|v| v * v).sum::<f64>() - 2.0 * sv).sqrt();
        assert_abs_diff_eq!(a.residual, expected, epsilon = 1e-9);
    }

    #[test]
    fn flags_fewer_nodes_than_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = gaussian(3, 5, &mut rng);
        let a = procrustes_align(&x, &x).unwrap();
        assert!(a.underdetermined);
        assert!(a.residual < 1e-10);
    }

    #[test]
    fn pearson_of_linear_decrease() {
        assert_abs_diff_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 0.9, 0.8]).unwrap(), -1.0, epsilon = 1e-12);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]), None);
    }

    #[test]
    fn static_embeddings_have_unit_cosines_and_no_r() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = gaussian(12, 3, &mut rng);
        let periods = (0..4)
            .map(|t| Period::new(format!("{t}"), names(12), z.clone()).unwrap())
            .collect();
        let series = EmbeddingSeries::new(periods).unwrap();
        let d = series.drift("v3").unwrap();
        for c in &d.cosines {
            assert_abs_diff_eq!(*c, 1.0, epsilon = 1e-12);
        }
        assert_eq!(d.pearson_r, None);
    }

    #[test]
    fn progressive_rotation_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let base = gaussian(30, 4, &mut rng);
        let periods: Vec<Period> = (0..6)
            .map(|t| {
                let mut z = &base + &(gaussian(30, 4, &mut rng) * 0.01);
                // node 0 turns away from its start in the (0, 1) plane
                let angle = 0.3 * t as f64;
                let (x, y) = (base[[0, 0]], base[[0, 1]]);
                z[[0, 0]] = x * angle.cos() - y * angle.sin();
                z[[0, 1]] = x * angle.sin() + y * angle.cos();
                Period::new(format!("{}", 2010 + t), names(30), z).unwrap()
            })
            .collect();
        let series = EmbeddingSeries::new(periods).unwrap();
        let ranking = series.ranking();
        assert_eq!(ranking.series[0].node, "v0");
        assert!(ranking.series[0].pearson_r.unwrap() < -0.9);
    }

    #[test]
    fn absent_and_zero_nodes_are_skipped() {
        let z = array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [1.0, 1.0]];
        let p0 = Period::new("a", names(4), z.clone()).unwrap();
        let p1 = Period::new("b", names(3), z.slice(ndarray::s![..3, ..]).to_owned()).unwrap();
        let p2 = Period::new("c", names(4), z.clone()).unwrap();
        let series = EmbeddingSeries::new(vec![p0, p1, p2]).unwrap();
        let ranking = series.ranking();
        let skipped: Vec<&str> = ranking.skipped.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(skipped, vec!["v2", "v3"]);
        assert_eq!(ranking.series.len(), 2);
    }

    proptest! {
        #[test]
        fn alignment_never_worse_than_identity(seed in any::<u64>(), n in 2usize..20, d in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = gaussian(n, d, &mut rng);
            let y = gaussian(n, d, &mut rng);
            let a = procrustes_align(&x, &y).unwrap();
            let unaligned = (&x - &y).iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(a.residual <= unaligned + 1e-9);
        }

        #[test]
        fn cosines_invariant_to_common_orthogonal_map(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let periods: Vec<Array2<f64>> = (0..4).map(|_| gaussian(15, 3, &mut rng)).collect();
            let q = random_orthogonal(3, &mut rng);
            let build = |zs: Vec<Array2<f64>>| {
                EmbeddingSeries::new(
                    zs.into_iter()
                        .enumerate()
                        .map(|(t, z)| Period::new(format!("{t}"), names(15), z).unwrap())
                        .collect(),
                )
                .unwrap()
            };
            let plain = build(periods.clone());
            let turned = build(periods.iter().map(|z| z.dot(&q)).collect());
            for node in ["v0", "v7", "v14"] {
                let a: Array1<f64> = plain.drift(node).unwrap().cosines.into();
                let b: Array1<f64> = turned.drift(node).unwrap().cosines.into();
                prop_assert!((a - b).iter().all(|d| d.abs() < 1e-9));
            }
        }
    }
}
