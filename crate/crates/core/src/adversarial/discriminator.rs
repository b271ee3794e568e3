use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Pauli, PauliString};

pub const DEFAULT_MAX_WEIGHT: usize = 4;
pub const DEFAULT_CLIP_BOUND: f64 = 1.0;

/// Weighted Pauli sum `D(φ) = Σ_k φ_k P_k` over every non-identity string of
/// weight at most `max_weight`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorSpec {
    n_qubits: usize,
    max_weight: usize,
    clip_bound: f64,
    terms: Vec<PauliString>,
}

impl DiscriminatorSpec {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn max_weight(&self) -> usize {
        self.max_weight
    }

    pub fn clip_bound(&self) -> f64 {
        self.clip_bound
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn with_clip_bound(mut self, clip_bound: f64) -> Result<Self> {
        if !(clip_bound > 0.0 && clip_bound.is_finite()) {
            return Err(Error::Invalid(format!(
                "clip bound must be positive, got {clip_bound}"
            )));
        }
        self.clip_bound = clip_bound;
        Ok(self)
    }

    /// Same term family on `extra` more qubits, plus the weights carried
    /// over: a surviving term keeps its weight, a new term starts at zero.
    pub fn widen(&self, extra: usize, weights: &[f64]) -> Result<(DiscriminatorSpec, Vec<f64>)> {
        if weights.len() != self.len() {
            return Err(Error::ParamCount {
                expected: self.len(),
                got: weights.len(),
            });
        }
        let wider = build_discriminator(self.n_qubits + extra, self.max_weight)?
            .with_clip_bound(self.clip_bound)?;
        let index: HashMap<PauliString, usize> = self
            .terms
            .iter()
            .enumerate()
            .map(|(k, p)| (p.padded(extra), k))
            .collect();
        let carried = wider
            .terms
            .iter()
            .map(|p| index.get(p).map_or(0.0, |&k| weights[k]))
            .collect();
        Ok((wider, carried))
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for q in start..n {
            cur.push(q);
            rec(q + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Enumerates terms by weight, then qubit support (lexicographic), then
/// letters in X < Y < Z order.
pub fn build_discriminator(n_qubits: usize, max_weight: usize) -> Result<DiscriminatorSpec> {
    if max_weight < 1 {
        return Err(Error::Invalid("discriminator max weight must be at least 1".into()));
    }
    if n_qubits < 1 {
        return Err(Error::Invalid("discriminator needs at least one qubit".into()));
    }
    const LETTERS: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
    let mut terms = Vec::new();
    for w in 1..=max_weight.min(n_qubits) {
        for support in combinations(n_qubits, w) {
            for code in 0..3usize.pow(w as u32) {
                let mut letters = vec![Pauli::I; n_qubits];
                let mut c = code;
                for &q in support.iter().rev() {
                    letters[q] = LETTERS[c % 3];
                    c /= 3;
                }
                terms.push(PauliString::new(letters));
            }
        }
    }
    Ok(DiscriminatorSpec {
        n_qubits,
        max_weight,
        clip_bound: DEFAULT_CLIP_BOUND,
        terms,
    })
}
