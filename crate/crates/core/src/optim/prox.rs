//! Group-lasso penalty over the rows of the input weight matrix and its
//! (optionally diagonally weighted) proximal operator.
//!
//! The weighted problem is
//!
//! ```text
//! argmin_x  ½ Σ_i d_i (x_i - z_i)² + t ‖x‖₂
//! ```
//!
//! The solution is zero iff `‖D z‖₂ ≤ t`. Otherwise `x_i = d_i z_i α / (d_i α + t)`
//! where `α = ‖x‖₂` is the root of `φ(α) = Σ_i (d_i z_i / (d_i α + t))² - 1`.
//! `φ` is convex and decreasing on `α ≥ 0`, so Newton-Raphson started left of
//! the root increases monotonically towards it.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            max_iter: 100,
            tol: 1e-10,
        }
    }
}

/// `Σ_j ‖w0_j‖₂` over rows.
pub fn group_lasso_penalty(w0: &Array2<f64>) -> f64 {
    w0.rows().into_iter().map(|r| r.dot(&r).sqrt()).sum()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Closed-form `max(0, 1 - t/‖z‖) z`.
pub fn block_soft_threshold(row: &[f64], t: f64) -> Vec<f64> {
    let n = norm(row);
    if n <= t {
        return vec![0.0; row.len()];
    }
    let scale = 1.0 - t / n;
    row.iter().map(|x| x * scale).collect()
}

fn check_args(row: &[f64], t: f64, diag: &[f64]) -> Result<()> {
    if row.len() != diag.len() {
        return Err(Error::Shape(format!(
            "row has {} entries, weights have {}",
            row.len(),
            diag.len()
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {t} must be >= 0")));
    }
    if let Some(d) = diag.iter().find(|&&d| !(d > 0.0) || !d.is_finite()) {
        return Err(Error::InvalidArgument(format!("prox weight {d} must be positive")));
    }
    Ok(())
}

/// Weighted group prox. Uniform weights take the closed form; otherwise the
/// scalar equation for `‖x‖₂` is solved by Newton-Raphson.
pub fn prox_group_row(row: &[f64], t: f64, diag: &[f64], newton: &NewtonConfig) -> Result<Vec<f64>> {
    check_args(row, t, diag)?;
    match diag.first() {
        Some(&d) if diag.iter().all(|&x| x == d) => Ok(block_soft_threshold(row, t / d)),
        _ => weighted_prox_newton(row, t, diag, newton),
    }
}

/// Newton-Raphson path of the weighted prox, usable for any positive weights.
pub fn weighted_prox_newton(
    row: &[f64],
    t: f64,
    diag: &[f64],
    newton: &NewtonConfig,
) -> Result<Vec<f64>> {
    check_args(row, t, diag)?;
    if t == 0.0 {
        return Ok(row.to_vec());
    }
    let scaled: Vec<f64> = row.iter().zip(diag).map(|(z, d)| z * d).collect();
    if norm(&scaled) <= t {
        return Ok(vec![0.0; row.len()]);
    }
    let d_min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    // φ(‖z‖ - t/d_min) ≥ 0, so this starts left of the root.
    let mut alpha = (norm(row) - t / d_min).max(0.0);
    let mut residual = f64::INFINITY;
    for _ in 0..newton.max_iter {
        let (mut phi, mut dphi) = (-1.0, 0.0);
        for (&dz, &d) in scaled.iter().zip(diag) {
            let denom = d * alpha + t;
            let ratio = dz / denom;
            phi += ratio * ratio;
            dphi -= 2.0 * d * ratio * ratio / denom;
        }
        residual = phi.abs();
        if phi <= 0.0 || dphi == 0.0 {
            break;
        }
        let next = alpha - phi / dphi;
        let step = next - alpha;
        alpha = next;
        if step <= newton.tol * alpha {
            residual = 0.0;
            break;
        }
    }
    if residual > newton.tol {
        return Err(Error::ProxNonConvergence {
            iterations: newton.max_iter,
            residual,
        });
    }
    Ok(scaled
        .iter()
        .zip(diag)
        .map(|(&dz, &d)| dz * alpha / (d * alpha + t))
        .collect())
}
