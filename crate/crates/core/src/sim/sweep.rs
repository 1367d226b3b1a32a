//! Preset experiment sweeps: the convergence-time grid over noise levels
//! (single-source) and the detection-count grid over target counts
//! (multi-source). Runs inside a sweep are independent and executed in
//! parallel; per-run seeds derive from the base seed, the cell index and the
//! run index, so a sweep is reproducible bit for bit.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::sim::{run_multi_source, run_single_source, SimError};

/// Step-variance rows of the convergence grid.
pub const CONVERGENCE_GRID_STEP_VARIANCES: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
/// DoA-concentration columns of the convergence grid.
pub const CONVERGENCE_GRID_DOA_CONCENTRATIONS: [f64; 3] = [100.0, 10.0, 1.0];
/// Per-row run lengths for the convergence grid. Listening-phase length
/// grows linearly with the step variance, so each row gets a horizon of
/// roughly twice the expected convergence time; the stability requirement
/// then has a long verified window without simulating the worst case for
/// every cell.
pub const CONVERGENCE_GRID_DURATIONS_S: [f64; 5] = [800.0, 800.0, 900.0, 2500.0, 14000.0];

/// Target-count rows of the detection grid.
pub const DETECTION_GRID_TARGET_COUNTS: [usize; 6] = [3, 4, 5, 6, 7, 8];
/// Baseline detection averages reported next to measured ones in the
/// emitted table, for side-by-side comparison.
pub const DETECTION_GRID_BASELINE_MEANS: [f64; 6] = [2.7, 3.6, 4.4, 4.5, 5.4, 6.4];

/// Seed for one run of one cell: `base ^ cell ^ run`.
pub fn run_seed(base_seed: u64, cell_index: usize, run_index: u32) -> u64 {
    base_seed ^ cell_index as u64 ^ run_index as u64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceCell {
    pub step_variance: f64,
    pub doa_concentration: f64,
    pub duration_s: f64,
    /// Convergence time per run; `None` where the run did not converge
    /// within its horizon.
    pub t_s_runs: Vec<Option<f64>>,
    /// Mean over runs; only defined when every run converged.
    pub mean_t_s: Option<f64>,
}

/// Run the full 5 x 3 convergence grid with `runs` seeds per cell.
pub fn sweep_convergence_grid(
    base: &ScenarioConfig,
    runs: u32,
    base_seed: u64,
    durations: &[f64; 5],
) -> Result<Vec<ConvergenceCell>, SimError> {
    if base.scenario != ScenarioKind::Single {
        return Err(SimError::ScenarioMismatch {
            expected: ScenarioKind::Single,
            found: base.scenario,
        });
    }
    let mut jobs = Vec::new();
    for (row, &step_variance) in CONVERGENCE_GRID_STEP_VARIANCES.iter().enumerate() {
        for (col, &doa_concentration) in CONVERGENCE_GRID_DOA_CONCENTRATIONS.iter().enumerate() {
            let cell = row * CONVERGENCE_GRID_DOA_CONCENTRATIONS.len() + col;
            let mut config = base.clone();
            config.noise.step_variance = step_variance;
            config.noise.doa_concentration = doa_concentration;
            config.duration_s = durations[row];
            for run in 0..runs {
                jobs.push((cell, run, config.clone()));
            }
        }
    }
    let results: Result<Vec<(usize, Option<f64>)>, SimError> = jobs
        .into_par_iter()
        .map(|(cell, run, config)| {
            let metrics = run_single_source(&config, run_seed(base_seed, cell, run))?;
            Ok((cell, metrics.t_s))
        })
        .collect();
    let results = results?;

    let cell_count =
        CONVERGENCE_GRID_STEP_VARIANCES.len() * CONVERGENCE_GRID_DOA_CONCENTRATIONS.len();
    let mut per_cell: Vec<Vec<Option<f64>>> = vec![Vec::new(); cell_count];
    for (cell, t_s) in results {
        per_cell[cell].push(t_s);
    }
    Ok((0..cell_count)
        .map(|cell| {
            let row = cell / CONVERGENCE_GRID_DOA_CONCENTRATIONS.len();
            let col = cell % CONVERGENCE_GRID_DOA_CONCENTRATIONS.len();
            let t_s_runs = per_cell[cell].clone();
            let mean_t_s = if t_s_runs.iter().all(|t| t.is_some()) {
                Some(t_s_runs.iter().map(|t| t.unwrap()).sum::<f64>() / t_s_runs.len() as f64)
            } else {
                None
            };
            ConvergenceCell {
                step_variance: CONVERGENCE_GRID_STEP_VARIANCES[row],
                doa_concentration: CONVERGENCE_GRID_DOA_CONCENTRATIONS[col],
                duration_s: durations[row],
                t_s_runs,
                mean_t_s,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionCell {
    pub target_count: usize,
    pub detections_runs: Vec<usize>,
    pub mean_detections: f64,
    pub baseline_mean: f64,
}

/// Run the detection grid (3 to 8 targets) with `runs` seeds per cell.
pub fn sweep_detection_grid(
    base: &ScenarioConfig,
    runs: u32,
    base_seed: u64,
) -> Result<Vec<DetectionCell>, SimError> {
    if base.scenario != ScenarioKind::Multi {
        return Err(SimError::ScenarioMismatch {
            expected: ScenarioKind::Multi,
            found: base.scenario,
        });
    }
    let mut jobs = Vec::new();
    for (cell, &targets) in DETECTION_GRID_TARGET_COUNTS.iter().enumerate() {
        let mut config = base.clone();
        let mut spawn = config.spawn.unwrap_or(crate::config::SpawnSpec {
            count: targets,
            area_side: 50.0,
        });
        spawn.count = targets;
        config.spawn = Some(spawn);
        config.sources = None;
        for run in 0..runs {
            jobs.push((cell, run, config.clone()));
        }
    }
    let results: Result<Vec<(usize, usize)>, SimError> = jobs
        .into_par_iter()
        .map(|(cell, run, config)| {
            let metrics = run_multi_source(&config, run_seed(base_seed, cell, run))?;
            Ok((cell, metrics.sources_located.unwrap_or(0)))
        })
        .collect();
    let results = results?;

    let mut per_cell: Vec<Vec<usize>> = vec![Vec::new(); DETECTION_GRID_TARGET_COUNTS.len()];
    for (cell, located) in results {
        per_cell[cell].push(located);
    }
    Ok(DETECTION_GRID_TARGET_COUNTS
        .iter()
        .enumerate()
        .map(|(cell, &target_count)| {
            let detections_runs = per_cell[cell].clone();
            let mean_detections =
                detections_runs.iter().sum::<usize>() as f64 / detections_runs.len() as f64;
            DetectionCell {
                target_count,
                detections_runs,
                mean_detections,
                baseline_mean: DETECTION_GRID_BASELINE_MEANS[cell],
            }
        })
        .collect())
}
