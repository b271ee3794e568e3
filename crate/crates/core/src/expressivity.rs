//! Dimensional expressivity: rank of the Jacobian of `C(θ)|0…0⟩` with respect
//! to the circuit parameters, over sampled parameter points.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_generator_spec, AncillaConfig, GeneratorSpec};
use crate::error::{Error, Result};
use crate::sim::{apply_generator_rows, Statevector, C64};

pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Column `k` is `∂_k C(θ)|0…0⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianMatrix {
    dim: usize,
    columns: Vec<Vec<C64>>,
    state: Vec<C64>,
}

impl JacobianMatrix {
    pub fn from_columns(dim: usize, columns: Vec<Vec<C64>>, state: Vec<C64>) -> Result<Self> {
        if state.len() != dim || columns.iter().any(|c| c.len() != dim) {
            return Err(Error::Dimension(format!(
                "Jacobian columns and state must have length {dim}"
            )));
        }
        Ok(Self { dim, columns, state })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_params(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, k: usize) -> &[C64] {
        &self.columns[k]
    }

    /// The circuit output the Jacobian was taken at.
    pub fn state(&self) -> &[C64] {
        &self.state
    }

    fn real_embedding(&self, extra: Option<&[C64]>) -> DMatrix<f64> {
        let cols: Vec<&[C64]> = self
            .columns
            .iter()
            .map(Vec::as_slice)
            .chain(extra)
            .collect();
        DMatrix::from_fn(2 * self.dim, cols.len(), |r, c| {
            let z = cols[c][r % self.dim];
            if r < self.dim {
                z.re
            } else {
                z.im
            }
        })
    }
}

/// Analytic Jacobian: the gate's Pauli generator times `−i/2` is inserted
/// right after gate `k`, then the rest of the circuit runs.
pub fn state_jacobian(spec: &GeneratorSpec, theta: &[f64]) -> Result<JacobianMatrix> {
    spec.check_params(theta)?;
    let n = spec.n_qubits();
    let gates = spec.gates();
    let mut prefix = Statevector::zero_state(n);
    let mut columns = Vec::with_capacity(gates.len());
    let minus_half_i = C64::new(0.0, -0.5);
    for (k, g) in gates.iter().enumerate() {
        prefix.rotate(g.kind, &g.qubits, theta[k])?;
        let mut col = prefix.amplitudes().to_vec();
        apply_generator_rows(&mut col, n, 1, g.kind, &g.qubits);
        col.iter_mut().for_each(|a| *a *= minus_half_i);
        let mut col = Statevector::from_amplitudes(n, col)?;
        for (h, &angle) in gates[k + 1..].iter().zip(&theta[k + 1..]) {
            col.rotate(h.kind, &h.qubits, angle)?;
        }
        columns.push(col.into_amplitudes());
    }
    let dim = prefix.dim();
    JacobianMatrix::from_columns(dim, columns, prefix.into_amplitudes())
}

fn rank_of(m: DMatrix<f64>, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::Invalid(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    if m.ncols() == 0 {
        return Ok(0);
    }
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > rel_tol * max).count())
}

/// Rank of the real `2·dim × n_params` embedding (real parts stacked over
/// imaginary parts), counting singular values above `rel_tol · σ_max`.
pub fn numerical_rank(jacobian: &JacobianMatrix, rel_tol: f64) -> Result<usize> {
    rank_of(jacobian.real_embedding(None), rel_tol)
}

/// Rank with the global-phase direction `i|ψ⟩` quotiented out.
pub fn phase_quotiented_rank(jacobian: &JacobianMatrix, rel_tol: f64) -> Result<usize> {
    let phase: Vec<C64> = jacobian.state.iter().map(|a| a * C64::new(0.0, 1.0)).collect();
    let with_phase = rank_of(jacobian.real_embedding(Some(&phase)), rel_tol)?;
    Ok(with_phase.saturating_sub(1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySettings {
    pub n_system_qubits: usize,
    pub n_layers: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub rel_tol: f64,
    /// Evaluate every sample at `θ = 0` instead of drawing parameters.
    pub zero_params: bool,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self {
            n_system_qubits: 3,
            n_layers: 1,
            n_samples: 1000,
            seed: 0,
            rel_tol: DEFAULT_REL_TOL,
            zero_params: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub config: AncillaConfig,
    pub n_layers: usize,
    pub n_params: usize,
    pub state_dim: usize,
    pub n_samples: usize,
    pub rel_tol: f64,
    /// rank → number of samples.
    pub histogram: BTreeMap<usize, usize>,
    /// Most frequent sampled rank (ties go to the smaller rank).
    pub generic_rank: usize,
    pub generic_phase_quotiented_rank: usize,
    pub zero_param_rank: usize,
    pub zero_param_phase_quotiented_rank: usize,
    /// Fraction of samples whose rank differs from the generic rank.
    pub exception_fraction: f64,
    #[serde(skip)]
    pub sample_ranks: Vec<usize>,
}

fn modal(values: &[usize]) -> (BTreeMap<usize, usize>, usize) {
    let mut hist = BTreeMap::new();
    for &v in values {
        *hist.entry(v).or_insert(0) += 1;
    }
    let mode = hist
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map_or(0, |(&r, _)| r);
    (hist, mode)
}

fn sample_theta(spec: &GeneratorSpec, settings: &StudySettings, sample: usize) -> Vec<f64> {
    if settings.zero_params {
        return vec![0.0; spec.n_params()];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    rng.set_stream(sample as u64);
    (0..spec.n_params()).map(|_| rng.gen_range(0.0..TAU)).collect()
}

pub fn rank_report(config: AncillaConfig, settings: &StudySettings) -> Result<RankReport> {
    if settings.n_samples < 1 {
        return Err(Error::Invalid("expressivity study needs at least one sample".into()));
    }
    let spec = build_generator_spec(settings.n_system_qubits, settings.n_layers, config)?;
    let per_sample: Vec<(usize, usize)> = (0..settings.n_samples)
        .into_par_iter()
        .map(|s| {
            let j = state_jacobian(&spec, &sample_theta(&spec, settings, s))?;
            Ok((
                numerical_rank(&j, settings.rel_tol)?,
                phase_quotiented_rank(&j, settings.rel_tol)?,
            ))
        })
        .collect::<Result<_>>()?;
    let ranks: Vec<usize> = per_sample.iter().map(|p| p.0).collect();
    let quotiented: Vec<usize> = per_sample.iter().map(|p| p.1).collect();
    let (histogram, generic_rank) = modal(&ranks);
    let (_, generic_phase_quotiented_rank) = modal(&quotiented);
    let zero = state_jacobian(&spec, &vec![0.0; spec.n_params()])?;
    let exceptions = ranks.iter().filter(|&&r| r != generic_rank).count();
    Ok(RankReport {
        config,
        n_layers: settings.n_layers,
        n_params: spec.n_params(),
        state_dim: zero.dim(),
        n_samples: settings.n_samples,
        rel_tol: settings.rel_tol,
        histogram,
        generic_rank,
        generic_phase_quotiented_rank,
        zero_param_rank: numerical_rank(&zero, settings.rel_tol)?,
        zero_param_phase_quotiented_rank: phase_quotiented_rank(&zero, settings.rel_tol)?,
        exception_fraction: exceptions as f64 / ranks.len() as f64,
        sample_ranks: ranks,
    })
}

/// One report per configuration; samples run on a pool of `workers` threads.
pub fn expressivity_study(
    configs: &[AncillaConfig],
    settings: &StudySettings,
    workers: usize,
) -> Result<Vec<RankReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| configs.iter().map(|&c| rank_report(c, settings)).collect())
}

/// Verdicts on the A1/A3/A4 chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingVerdict {
    /// `E(A4) > E(A3) > E(A1)` on generic ranks.
    pub strict_ordering: bool,
    /// The three configurations share one rank at `θ = 0`.
    pub zero_ranks_equal: bool,
}

pub fn ordering_verdict(reports: &[RankReport]) -> Result<OrderingVerdict> {
    let find = |c: AncillaConfig| {
        reports
            .iter()
            .find(|r| r.config == c)
            .ok_or_else(|| Error::Invalid(format!("no rank report for configuration {c}")))
    };
    let (a1, a3, a4) = (find(AncillaConfig::A1)?, find(AncillaConfig::A3)?, find(AncillaConfig::A4)?);
    Ok(OrderingVerdict {
        strict_ordering: a4.generic_rank > a3.generic_rank && a3.generic_rank > a1.generic_rank,
        zero_ranks_equal: a1.zero_param_rank == a3.zero_param_rank
            && a3.zero_param_rank == a4.zero_param_rank,
    })
}
