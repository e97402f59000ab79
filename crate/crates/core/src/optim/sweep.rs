use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::train::{run, TrainedModel, TrainingData};
use super::{TrainConfig, LAMBDA_GRID, LEARNING_RATE_GRID, MAX_EPOCHS};
use crate::error::{Error, Result};
use crate::eval::Metrics;
use crate::graph::SplitPart;

/// Search space. Every epoch up to `max_epochs` is a checkpoint, so the epoch
/// axis costs one run per (learning rate, lambda) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub max_epochs: usize,
    pub learning_rates: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            max_epochs: MAX_EPOCHS,
            learning_rates: LEARNING_RATE_GRID.to_vec(),
            lambdas: LAMBDA_GRID.to_vec(),
        }
    }
}

impl SweepGrid {
    fn cells(&self) -> Vec<(f64, f64)> {
        self.learning_rates
            .iter()
            .flat_map(|&r| self.lambdas.iter().map(move |&l| (r, l)))
            .collect()
    }
}

/// Leaderboard row for one (learning rate, lambda) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub learning_rate: f64,
    pub lambda: f64,
    /// Selected epoch, absent when no epoch satisfied the cap.
    pub epoch: Option<usize>,
    pub n_active: Option<usize>,
    pub dev: Option<Metrics>,
    pub test: Option<Metrics>,
    /// Fewest active concepts seen at any epoch.
    pub min_active: usize,
    /// Best dev AUC at exactly `k` active concepts, indexed by `k`.
    pub frontier: Vec<Option<f64>>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub best: TrainedModel,
    pub best_cell: usize,
    pub cells: Vec<CellSummary>,
    pub theta: Option<usize>,
}

/// Trains every grid cell, drops checkpoints with more than `theta` active
/// concepts and returns the best remaining model by dev AUC, then fewer
/// concepts, then smaller lambda.
pub fn sweep(
    data: &TrainingData,
    base: &TrainConfig,
    grid: &SweepGrid,
    theta: Option<usize>,
    jobs: usize,
) -> Result<SweepOutcome> {
    let cells = grid.cells();
    if cells.is_empty() || grid.max_epochs == 0 {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    let job = |&(learning_rate, lambda): &(f64, f64)| -> Result<(CellSummary, Option<TrainedModel>)> {
        let config = TrainConfig {
            epochs: grid.max_epochs,
            learning_rate,
            lambda,
            ..base.clone()
        };
        let out = run(data, &config, theta)?;
        let (chosen, test) = match &out.best {
            Some(cp) => {
                let test = data.evaluate(&cp.params, &config, SplitPart::Test)?;
                (Some(out.model.at_checkpoint(cp)), Some(test))
            }
            None => (None, None),
        };
        let summary = CellSummary {
            learning_rate,
            lambda,
            epoch: out.best.as_ref().map(|b| b.epoch),
            n_active: out.best.as_ref().map(|b| b.active_concepts.len()),
            dev: out.best.as_ref().map(|b| b.dev),
            test,
            min_active: out.min_active,
            frontier: out.frontier,
        };
        Ok((summary, chosen))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<(CellSummary, Option<TrainedModel>)> =
        pool.install(|| cells.par_iter().map(job).collect::<Result<Vec<_>>>())?;

    let mut best: Option<usize> = None;
    for (i, (cell, _)) in results.iter().enumerate() {
        let Some(dev) = cell.dev else { continue };
        let replace = match best {
            None => true,
            Some(b) => {
                let inc = &results[b].0;
                let inc_dev = inc.dev.expect("selected cell has metrics");
                dev.auc
                    .partial_cmp(&inc_dev.auc)
                    .unwrap_or(Ordering::Equal)
                    .then(inc.n_active.cmp(&cell.n_active))
                    .then(inc.lambda.partial_cmp(&cell.lambda).unwrap_or(Ordering::Equal))
                    == Ordering::Greater
            }
        };
        if replace {
            best = Some(i);
        }
    }
    let Some(best_cell) = best else {
        let closest = results.iter().map(|(c, _)| c.min_active).min().unwrap_or(0);
        return Err(Error::Infeasible {
            theta: theta.unwrap_or(usize::MAX),
            closest,
        });
    };
    let mut cells_out = Vec::with_capacity(results.len());
    let mut chosen = None;
    for (i, (cell, model)) in results.into_iter().enumerate() {
        if i == best_cell {
            chosen = model;
        }
        cells_out.push(cell);
    }
    Ok(SweepOutcome {
        best: chosen.expect("best cell carries a model"),
        best_cell,
        cells: cells_out,
        theta,
    })
}

/// Best dev AUC achievable with at most `θ` active concepts, for each `θ`.
pub fn threshold_curve(cells: &[CellSummary], thetas: impl IntoIterator<Item = usize>) -> Vec<(usize, Option<f64>)> {
    thetas
        .into_iter()
        .map(|theta| {
            let best = cells
                .iter()
                .flat_map(|c| c.frontier.iter().take(theta.saturating_add(1)).flatten())
                .copied()
                .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))));
            (theta, best)
        })
        .collect()
}
