use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adversarial::train::{train_run, RunRecord, TrainConfig};
use crate::error::{Error, Result};
use crate::sim::UnitaryMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunDigest {
    pub run_id: usize,
    pub seed: u64,
    pub f_max: f64,
    pub final_fidelity: Option<f64>,
    pub stop_iteration: Option<usize>,
    pub aborted: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config_hash: String,
    pub n_runs: usize,
    pub n_aborted: usize,
    /// Mean of per-run `f_max` over completed runs.
    pub f_avg_max: f64,
    /// Standard error of that mean (0 for fewer than two runs).
    pub std_error: f64,
    pub n_reached_threshold: usize,
    pub runs: Vec<RunDigest>,
}

pub fn config_hash(config: &TrainConfig) -> String {
    let json = serde_json::to_vec(config).expect("TrainConfig serializes");
    hex::encode(Sha256::digest(&json))
}

/// Runs `n_runs` seeds `seed + j` on a pool of `workers` threads. Records come
/// back in run order regardless of scheduling.
pub fn batch_runs(
    config: &TrainConfig,
    target: &UnitaryMatrix,
    n_runs: usize,
    workers: usize,
) -> Result<Vec<RunRecord>> {
    if n_runs < 1 {
        return Err(Error::Invalid("a batch needs at least one run".into()));
    }
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..n_runs)
            .into_par_iter()
            .map(|j| {
                let cfg = TrainConfig {
                    seed: config.seed.wrapping_add(j as u64),
                    ..config.clone()
                };
                train_run(&cfg, target)
            })
            .collect()
    })
}

pub fn summarize(config: &TrainConfig, records: &[RunRecord]) -> ExperimentSummary {
    let runs: Vec<RunDigest> = records
        .iter()
        .enumerate()
        .map(|(run_id, r)| RunDigest {
            run_id,
            seed: r.seed,
            f_max: r.f_max,
            final_fidelity: r.final_fidelity(),
            stop_iteration: r.stop_iteration,
            aborted: r.aborted.clone(),
        })
        .collect();
    let completed: Vec<f64> = runs
        .iter()
        .filter(|r| r.aborted.is_none())
        .map(|r| r.f_max)
        .collect();
    let n = completed.len() as f64;
    let (mean, std_error) = if completed.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mean = completed.iter().sum::<f64>() / n;
        let se = if completed.len() > 1 {
            let var = completed.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        (mean, se)
    };
    ExperimentSummary {
        config_hash: config_hash(config),
        n_runs: runs.len(),
        n_aborted: runs.len() - completed.len(),
        f_avg_max: mean,
        std_error,
        n_reached_threshold: runs.iter().filter(|r| r.stop_iteration.is_some()).count(),
        runs,
    }
}

pub fn batch_experiment(
    config: &TrainConfig,
    target: &UnitaryMatrix,
    n_runs: usize,
    workers: usize,
) -> Result<ExperimentSummary> {
    let records = batch_runs(config, target, n_runs, workers)?;
    Ok(summarize(config, &records))
}
