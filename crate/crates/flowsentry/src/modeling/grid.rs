//! The 8-optimizer x 3-activation grid: one seeded train/evaluate run per
//! cell, emitted as a table with activations as rows and optimizers as
//! columns.

use rayon::prelude::*;

use super::train::{train, TrainConfig};
use super::{ModelError, ModelSpec};
use crate::evaluation::{GridCell, GridReport};
use crate::flowdata::Dataset;
use crate::neuralcore::Activation;
use crate::optimizers::{OptimizerConfig, OptimizerKind};
use crate::preprocess::PreprocessPipeline;
use crate::seeds;

/// Per-cell seed: hash of the base seed with the optimizer and activation
/// names, so cells are reproducible yet distinct.
pub fn cell_seed(base: u64, kind: OptimizerKind, act: Activation) -> u64 {
    seeds::derive(base, &format!("grid/{}/{}", kind.name(), act.name()), 0)
}

/// Run all 24 cells. Every cell trains `base_spec` (with the row's
/// activation) using the column optimizer's default hyperparameters at
/// `base_config`'s epochs/batch/regularization, then scores accuracy on the
/// held-out test set. A failed cell records its error and the grid
/// continues.
///
/// `threads` > 1 runs cells on a scoped thread pool; results are keyed by
/// cell position, so parallel and serial runs emit identical grids.
pub fn run_optimizer_activation_grid(
    train_set: &Dataset,
    validation: &Dataset,
    test: &Dataset,
    base_spec: &ModelSpec,
    base_config: &TrainConfig,
    pipeline: &PreprocessPipeline,
    threads: usize,
) -> Result<GridReport, ModelError> {
    let cells: Vec<(usize, usize, Activation, OptimizerKind)> = Activation::ALL
        .iter()
        .enumerate()
        .flat_map(|(row, &act)| {
            OptimizerKind::ALL
                .iter()
                .enumerate()
                .map(move |(col, &kind)| (row, col, act, kind))
        })
        .collect();

    let run_cell = |&(_, _, act, kind): &(usize, usize, Activation, OptimizerKind)| -> GridCell {
        let seed = cell_seed(base_config.seed, kind, act);
        let spec = ModelSpec { activation: act, ..base_spec.clone() };
        let config = TrainConfig {
            optimizer: OptimizerConfig::defaults(kind),
            seed,
            ..base_config.clone()
        };
        let result = train(&spec, train_set, validation, &config, pipeline)
            .and_then(|(model, _)| model.evaluate_transformed(test, config.threshold));
        match result {
            Ok((report, _)) => GridCell { accuracy: Some(report.accuracy), error: None, seed },
            Err(e) => {
                log::error!("grid cell {}/{} failed: {e}", kind.name(), act.name());
                GridCell { accuracy: None, error: Some(e.to_string()), seed }
            }
        }
    };

    let results: Vec<GridCell> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| ModelError::InvalidSetup(format!("thread pool: {e}")))?;
        pool.install(|| cells.par_iter().map(run_cell).collect())
    } else {
        cells.iter().map(run_cell).collect()
    };

    let mut grid = vec![Vec::with_capacity(OptimizerKind::ALL.len()); Activation::ALL.len()];
    for ((row, _, _, _), cell) in cells.iter().zip(results) {
        grid[*row].push(cell);
    }
    Ok(GridReport {
        activations: Activation::ALL.to_vec(),
        optimizers: OptimizerKind::ALL.to_vec(),
        cells: grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::render_grid_csv;
    use crate::preprocess::split_train_test;
    use crate::synth::two_gaussians;

    fn grid_fixture() -> (Dataset, Dataset, Dataset, PreprocessPipeline) {
        let ds = two_gaussians(160, 4, 2.5, 77);
        let (train, test) = split_train_test(&ds, 0.75, 1, true).unwrap();
        let (train, val) = split_train_test(&train, 0.8, 2, true).unwrap();
        let pipeline = PreprocessPipeline::identity(&ds.schema);
        (train, val, test, pipeline)
    }

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            batch_size: 32,
            dropout_rate: 0.0,
            l2: 0.0,
            early_stop_patience: 0,
            seed: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn grid_is_three_by_eight_and_deterministic() {
        let (train_set, val, test, pipeline) = grid_fixture();
        let spec = ModelSpec::ann(4);
        let config = tiny_config();
        let g1 =
            run_optimizer_activation_grid(&train_set, &val, &test, &spec, &config, &pipeline, 1)
                .unwrap();
        assert_eq!(g1.activations.len(), 3);
        assert_eq!(g1.optimizers.len(), 8);
        assert_eq!(g1.cells.len(), 3);
        assert!(g1.cells.iter().all(|row| row.len() == 8));
        assert!(g1
            .cells
            .iter()
            .flatten()
            .all(|c| c.accuracy.is_some() && c.error.is_none()));

        let g2 =
            run_optimizer_activation_grid(&train_set, &val, &test, &spec, &config, &pipeline, 1)
                .unwrap();
        assert_eq!(render_grid_csv(&g1), render_grid_csv(&g2));
    }

    #[test]
    fn parallel_equals_serial() {
        let (train_set, val, test, pipeline) = grid_fixture();
        let spec = ModelSpec::ann(4);
        let config = tiny_config();
        let serial =
            run_optimizer_activation_grid(&train_set, &val, &test, &spec, &config, &pipeline, 1)
                .unwrap();
        let parallel =
            run_optimizer_activation_grid(&train_set, &val, &test, &spec, &config, &pipeline, 4)
                .unwrap();
        assert_eq!(render_grid_csv(&serial), render_grid_csv(&parallel));
    }

    #[test]
    fn cell_seeds_are_distinct_per_combination() {
        let mut seen = std::collections::HashSet::new();
        for kind in OptimizerKind::ALL {
            for act in Activation::ALL {
                assert!(seen.insert(cell_seed(9, kind, act)));
            }
        }
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn failing_cells_record_errors_and_grid_continues() {
        let (train_set, val, test, pipeline) = grid_fixture();
        // a CNN whose kernel exceeds the feature count fails in every cell
        let spec = ModelSpec { kernel_size: 99, ..ModelSpec::cnn(4) };
        let config = tiny_config();
        let grid =
            run_optimizer_activation_grid(&train_set, &val, &test, &spec, &config, &pipeline, 1)
                .unwrap();
        assert!(grid.cells.iter().flatten().all(|c| c.accuracy.is_none() && c.error.is_some()));
        let csv = render_grid_csv(&grid);
        assert!(csv.contains("ERR"));
    }
}
