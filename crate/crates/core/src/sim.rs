//! Dense statevector and unitary simulation for small registers.
//!
//! Basis ordering is big-endian: qubit 0 is the most significant bit of the
//! basis index. On a Choi register the A copy comes first, then the B system
//! the gates act on, then (optionally) the ancilla as the least significant
//! qubit.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Parameterized rotation gates, all of the form `exp(-i angle/2 P)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationKind {
    Rx,
    Rz,
    Rzz,
}

impl RotationKind {
    pub fn arity(self) -> usize {
        match self {
            RotationKind::Rx | RotationKind::Rz => 1,
            RotationKind::Rzz => 2,
        }
    }
}

#[inline]
fn bit_mask(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

pub(crate) fn check_qubits(kind: RotationKind, qubits: &[usize], n_qubits: usize) -> Result<()> {
    if qubits.len() != kind.arity() {
        return Err(Error::GateArity {
            kind,
            expected: kind.arity(),
            got: qubits.len(),
        });
    }
    for &q in qubits {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
    }
    if qubits.len() == 2 && qubits[0] == qubits[1] {
        return Err(Error::DuplicateQubit(qubits[0]));
    }
    Ok(())
}

/// Applies `exp(-i angle/2 P)` from the left to a block of `2^n_qubits` rows,
/// each `row_len` entries long. A statevector is the `row_len == 1` case; a
/// row-major unitary is `row_len == dim`. Qubits must already be validated.
pub(crate) fn rotate_rows(
    data: &mut [C64],
    n_qubits: usize,
    row_len: usize,
    kind: RotationKind,
    qubits: &[usize],
    angle: f64,
) {
    let dim = 1usize << n_qubits;
    debug_assert_eq!(data.len(), dim * row_len);
    let half = 0.5 * angle;
    match kind {
        RotationKind::Rx => {
            let mask = bit_mask(n_qubits, qubits[0]);
            let c = half.cos();
            let mis = C64::new(0.0, -half.sin());
            for r0 in (0..dim).filter(|r| r & mask == 0) {
                let r1 = r0 | mask;
                let (lo, hi) = data.split_at_mut(r1 * row_len);
                let row0 = &mut lo[r0 * row_len..(r0 + 1) * row_len];
                let row1 = &mut hi[..row_len];
                for (a, b) in row0.iter_mut().zip(row1.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = x * c + y * mis;
                    *b = x * mis + y * c;
                }
            }
        }
        RotationKind::Rz => {
            let mask = bit_mask(n_qubits, qubits[0]);
            let down = C64::from_polar(1.0, -half);
            let up = down.conj();
            for (r, row) in data.chunks_exact_mut(row_len).enumerate() {
                let phase = if r & mask == 0 { down } else { up };
                row.iter_mut().for_each(|v| *v *= phase);
            }
        }
        RotationKind::Rzz => {
            let m0 = bit_mask(n_qubits, qubits[0]);
            let m1 = bit_mask(n_qubits, qubits[1]);
            let same = C64::from_polar(1.0, -half);
            let diff = same.conj();
            for (r, row) in data.chunks_exact_mut(row_len).enumerate() {
                let phase = if ((r & m0 == 0) as u8 ^ (r & m1 == 0) as u8) == 0 {
                    same
                } else {
                    diff
                };
                row.iter_mut().for_each(|v| *v *= phase);
            }
        }
    }
}

/// Applies the Pauli generator of a rotation gate (X, Z or Z⊗Z) in place.
pub(crate) fn apply_generator_rows(
    data: &mut [C64],
    n_qubits: usize,
    row_len: usize,
    kind: RotationKind,
    qubits: &[usize],
) {
    let dim = 1usize << n_qubits;
    match kind {
        RotationKind::Rx => {
            let mask = bit_mask(n_qubits, qubits[0]);
            for r0 in (0..dim).filter(|r| r & mask == 0) {
                let r1 = r0 | mask;
                let (lo, hi) = data.split_at_mut(r1 * row_len);
                lo[r0 * row_len..(r0 + 1) * row_len].swap_with_slice(&mut hi[..row_len]);
            }
        }
        RotationKind::Rz | RotationKind::Rzz => {
            let mask = qubits
                .iter()
                .fold(0usize, |m, &q| m | bit_mask(n_qubits, q));
            for (r, row) in data.chunks_exact_mut(row_len).enumerate() {
                if (r & mask).count_ones() % 2 == 1 {
                    row.iter_mut().for_each(|v| *v = -*v);
                }
            }
        }
    }
}

/// Pure state of `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl Statevector {
    /// `|0…0⟩`.
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Dimension(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::Dimension(format!(
                "{} amplitudes for {} qubits",
                amplitudes.len(),
                n_qubits
            )));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "inner product of {}- and {}-dimensional states",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// In-place rotation; see [`apply_rotation`].
    pub fn rotate(&mut self, kind: RotationKind, qubits: &[usize], angle: f64) -> Result<()> {
        check_qubits(kind, qubits, self.n_qubits)?;
        rotate_rows(&mut self.amplitudes, self.n_qubits, 1, kind, qubits, angle);
        Ok(())
    }

    pub fn apply_matrix(&self, u: &UnitaryMatrix) -> Result<Statevector> {
        if u.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix on {}-dimensional state",
                u.dim(),
                u.dim(),
                self.dim()
            )));
        }
        let amplitudes = (0..u.dim())
            .map(|r| {
                u.row(r)
                    .iter()
                    .zip(&self.amplitudes)
                    .map(|(m, a)| m * a)
                    .sum()
            })
            .collect();
        Ok(Statevector {
            n_qubits: self.n_qubits,
            amplitudes,
        })
    }
}

/// Returns `exp(-i angle/2 P)|state⟩` with `P` the Pauli generator of `kind`.
pub fn apply_rotation(
    state: &Statevector,
    kind: RotationKind,
    qubits: &[usize],
    angle: f64,
) -> Result<Statevector> {
    let mut out = state.clone();
    out.rotate(kind, qubits, angle)?;
    Ok(out)
}

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl UnitaryMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = ONE;
        }
        Self { dim, entries }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let entries = (0..dim * dim).map(|k| f(k / dim, k % dim)).collect();
        Self { dim, entries }
    }

    pub fn from_row_major(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "{} entries for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let dim = diag.len();
        Self::from_fn(dim, |r, c| if r == c { diag[r] } else { ZERO })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits, if the dimension is a power of two.
    pub fn n_qubits(&self) -> Option<usize> {
        self.dim
            .is_power_of_two()
            .then(|| self.dim.trailing_zeros() as usize)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[C64] {
        &self.entries[row * self.dim..(row + 1) * self.dim]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }

    pub fn matmul(&self, rhs: &UnitaryMatrix) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::Dimension(format!(
                "product of {}x{} and {}x{} matrices",
                self.dim, self.dim, rhs.dim, rhs.dim
            )));
        }
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == ZERO {
                    continue;
                }
                let rrow = &rhs.entries[k * n..(k + 1) * n];
                for (o, b) in out[i * n..(i + 1) * n].iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            dim: n,
            entries: out,
        })
    }

    /// Kronecker product `self ⊗ rhs`; `self` occupies the more significant bits.
    pub fn kron(&self, rhs: &UnitaryMatrix) -> Self {
        let (m, n) = (self.dim, rhs.dim);
        Self::from_fn(m * n, |r, c| {
            self.get(r / n, c / n) * rhs.get(r % n, c % n)
        })
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(self† other)`.
    pub fn hs_inner(&self, other: &UnitaryMatrix) -> Result<C64> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "Hilbert-Schmidt product of dimensions {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += self.get(k, i).conj() * self.get(k, j);
                }
                let expect = if i == j { ONE } else { ZERO };
                worst = worst.max((acc - expect).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    pub fn max_abs_diff(&self, other: &UnitaryMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "max_abs_diff: dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
    }

    /// In-place `G · self` for a rotation gate acting on this matrix's qubits.
    pub fn left_rotate(&mut self, kind: RotationKind, qubits: &[usize], angle: f64) -> Result<()> {
        let n_qubits = self
            .n_qubits()
            .ok_or_else(|| Error::Dimension(format!("dimension {} is not 2^n", self.dim)))?;
        check_qubits(kind, qubits, n_qubits)?;
        let dim = self.dim;
        rotate_rows(&mut self.entries, n_qubits, dim, kind, qubits, angle);
        Ok(())
    }
}

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> UnitaryMatrix {
        let i = C64::new(0.0, 1.0);
        let entries = match self {
            Pauli::I => vec![ONE, ZERO, ZERO, ONE],
            Pauli::X => vec![ZERO, ONE, ONE, ZERO],
            Pauli::Y => vec![ZERO, -i, i, ZERO],
            Pauli::Z => vec![ONE, ZERO, ZERO, -ONE],
        };
        UnitaryMatrix { dim: 2, entries }
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of Pauli letters, one per qubit (qubit 0 first).
///
/// Acts on basis states as `P|b⟩ = i^{#Y} (-1)^{|b ∧ z|} |b ⊕ x⟩`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    letters: Vec<Pauli>,
    x_mask: usize,
    z_mask: usize,
    n_y: u8,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        let n = letters.len();
        let (mut x_mask, mut z_mask, mut n_y) = (0, 0, 0u8);
        for (q, &p) in letters.iter().enumerate() {
            let m = bit_mask(n, q);
            match p {
                Pauli::I => {}
                Pauli::X => x_mask |= m,
                Pauli::Z => z_mask |= m,
                Pauli::Y => {
                    x_mask |= m;
                    z_mask |= m;
                    n_y = n_y.wrapping_add(1);
                }
            }
        }
        Self {
            letters,
            x_mask,
            z_mask,
            n_y,
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::new(vec![Pauli::I; n_qubits])
    }

    /// Places the given letters on the listed qubits, identity elsewhere.
    pub fn from_sparse(n_qubits: usize, entries: &[(usize, Pauli)]) -> Result<Self> {
        let mut letters = vec![Pauli::I; n_qubits];
        for &(q, p) in entries {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
            letters[q] = p;
        }
        Ok(Self::new(letters))
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    fn y_phase(&self) -> C64 {
        match self.n_y % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    /// Same letters with `extra` identity qubits appended at the least
    /// significant end.
    pub fn padded(&self, extra: usize) -> Self {
        let mut letters = self.letters.clone();
        letters.extend(std::iter::repeat_n(Pauli::I, extra));
        Self::new(letters)
    }

    /// `⟨ψ|P|ψ⟩` without checking sizes; real for Hermitian `P`.
    fn expectation_unchecked(&self, amps: &[C64]) -> f64 {
        let mut acc = ZERO;
        for (b, a) in amps.iter().enumerate() {
            let t = amps[b ^ self.x_mask].conj() * a;
            if (b & self.z_mask).count_ones().is_multiple_of(2) {
                acc += t;
            } else {
                acc -= t;
            }
        }
        (acc * self.y_phase()).re
    }

    pub fn expectation(&self, state: &Statevector) -> Result<f64> {
        if state.n_qubits() != self.n_qubits() {
            return Err(Error::Dimension(format!(
                "{}-qubit Pauli string on {}-qubit state",
                self.n_qubits(),
                state.n_qubits()
            )));
        }
        Ok(self.expectation_unchecked(state.amplitudes()))
    }

    /// Dense matrix; intended for small checks.
    pub fn matrix(&self) -> UnitaryMatrix {
        self.letters
            .iter()
            .fold(UnitaryMatrix::identity(1), |acc, p| acc.kron(&p.matrix()))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.letters.iter().try_for_each(|p| write!(f, "{}", p.symbol()))
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::Invalid(format!("unknown Pauli letter '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(PauliString::new)
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// In-place unnormalized Walsh–Hadamard transform:
/// `out[z] = Σ_b (−1)^{|b ∧ z|} in[b]`.
fn walsh_hadamard(data: &mut [C64]) {
    let n = data.len();
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (data[i], data[i + h]);
                data[i] = a + b;
                data[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// A fixed list of Pauli strings, grouped by X-support so that all
/// expectations (or the weighted action) cost one Walsh–Hadamard transform per
/// group instead of one pass per string.
#[derive(Clone, Debug)]
pub struct PauliSum {
    n_qubits: usize,
    n_terms: usize,
    groups: Vec<PauliGroup>,
}

#[derive(Clone, Debug)]
struct PauliGroup {
    x_mask: usize,
    /// (term index, z mask, i^{#Y})
    members: Vec<(usize, usize, C64)>,
}

impl PauliSum {
    pub fn new(terms: &[PauliString]) -> Result<Self> {
        let n_qubits = terms.first().map_or(0, PauliString::n_qubits);
        if terms.iter().any(|p| p.n_qubits() != n_qubits) {
            return Err(Error::Dimension("Pauli strings of mixed length".into()));
        }
        let mut by_x: std::collections::BTreeMap<usize, Vec<(usize, usize, C64)>> =
            Default::default();
        for (k, p) in terms.iter().enumerate() {
            by_x.entry(p.x_mask)
                .or_default()
                .push((k, p.z_mask, p.y_phase()));
        }
        Ok(Self {
            n_qubits,
            n_terms: terms.len(),
            groups: by_x
                .into_iter()
                .map(|(x_mask, members)| PauliGroup { x_mask, members })
                .collect(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.n_terms
    }

    pub fn is_empty(&self) -> bool {
        self.n_terms == 0
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != 1 << self.n_qubits {
            return Err(Error::Dimension(format!(
                "{}-qubit Pauli sum on a vector of length {len}",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// `⟨ψ|P_k|ψ⟩` for every term, in term order.
    pub fn expectations(&self, state: &Statevector) -> Result<Vec<f64>> {
        self.check(state.dim())?;
        let amps = state.amplitudes();
        let mut out = vec![0.0; self.n_terms];
        let mut buf = vec![ZERO; amps.len()];
        for g in &self.groups {
            for (b, slot) in buf.iter_mut().enumerate() {
                *slot = amps[b ^ g.x_mask].conj() * amps[b];
            }
            walsh_hadamard(&mut buf);
            for &(k, z, phase) in &g.members {
                out[k] = (phase * buf[z]).re;
            }
        }
        Ok(out)
    }

    /// `Σ_k w_k P_k |ψ⟩`.
    pub fn apply_weighted(&self, weights: &[f64], state: &Statevector) -> Result<Vec<C64>> {
        self.check(state.dim())?;
        if weights.len() != self.n_terms {
            return Err(Error::ParamCount {
                expected: self.n_terms,
                got: weights.len(),
            });
        }
        let amps = state.amplitudes();
        let mut out = vec![ZERO; amps.len()];
        let mut buf = vec![ZERO; amps.len()];
        for g in &self.groups {
            buf.iter_mut().for_each(|v| *v = ZERO);
            for &(k, z, phase) in &g.members {
                buf[z] += phase * weights[k];
            }
            walsh_hadamard(&mut buf);
            for (b, (f, a)) in buf.iter().zip(amps).enumerate() {
                out[b ^ g.x_mask] += f * a;
            }
        }
        Ok(out)
    }
}

/// `Σ_k c_k ⟨ψ|P_k|ψ⟩`.
pub fn pauli_expectation(state: &Statevector, terms: &[(f64, PauliString)]) -> Result<f64> {
    terms
        .iter()
        .map(|(c, p)| p.expectation(state).map(|e| c * e))
        .sum()
}

/// Diagonal `exp(-i t Z⊗Z⊗Z)` on three qubits.
pub fn target_unitary_zzz(t: f64) -> UnitaryMatrix {
    let diag: Vec<C64> = (0..8usize)
        .map(|b| {
            let parity = if b.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            C64::from_polar(1.0, -t * parity)
        })
        .collect();
    UnitaryMatrix::diagonal(&diag)
}

/// `U ⊗ I_a`: the target with an untouched ancilla on the least significant qubit.
pub fn with_idle_ancilla(u: &UnitaryMatrix) -> UnitaryMatrix {
    u.kron(&UnitaryMatrix::identity(2))
}

/// Maximally entangled input `|Ω⟩ = Σ_i |i⟩_A|i⟩_B / √d`, optionally
/// followed by an ancilla in `|0⟩`.
pub fn choi_input_state(n_system: usize, with_ancilla: bool) -> Statevector {
    let d = 1usize << n_system;
    let b_dim = if with_ancilla { 2 * d } else { d };
    let stride = if with_ancilla { 2 } else { 1 };
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut amplitudes = vec![ZERO; d * b_dim];
    for i in 0..d {
        amplitudes[i * b_dim + i * stride] = amp;
    }
    let n_qubits = 2 * n_system + usize::from(with_ancilla);
    Statevector {
        n_qubits,
        amplitudes,
    }
}

/// `(I_A ⊗ U)|Ω⟩` (or `(I_A ⊗ U_Ga)|Ω'⟩` when `with_ancilla`), built from the
/// vectorization identity: amplitude of `|i⟩_A|k⟩_B` is `U[k, s·i]/√d` with
/// `s = 2` when the ancilla is present.
pub fn choi_output_state(u: &UnitaryMatrix, with_ancilla: bool) -> Result<Statevector> {
    let n_total = u
        .n_qubits()
        .ok_or_else(|| Error::Dimension(format!("dimension {} is not 2^n", u.dim())))?;
    if with_ancilla && n_total < 1 {
        return Err(Error::Dimension(
            "ancilla Choi state needs at least one qubit".into(),
        ));
    }
    let n_system = if with_ancilla { n_total - 1 } else { n_total };
    let d = 1usize << n_system;
    let b_dim = u.dim();
    let stride = b_dim / d;
    let norm = 1.0 / (d as f64).sqrt();
    let mut amplitudes = Vec::with_capacity(d * b_dim);
    for i in 0..d {
        for k in 0..b_dim {
            amplitudes.push(u.get(k, stride * i) * norm);
        }
    }
    Ok(Statevector {
        n_qubits: n_system + n_total,
        amplitudes,
    })
}

/// `|Tr(U_G† U_T)|² / d²`.
pub fn fidelity_hs(generated: &UnitaryMatrix, target: &UnitaryMatrix) -> Result<f64> {
    let d = generated.dim() as f64;
    Ok(generated.hs_inner(target)?.norm_sqr() / (d * d))
}

/// Blocks of a system+ancilla operator with respect to the ancilla basis.
#[derive(Clone, Debug, PartialEq)]
pub struct AncillaBlockDecomposition {
    /// `⟨0|_a U |0⟩_a`.
    pub kept_block: UnitaryMatrix,
    /// `⟨1|_a U |1⟩_a`.
    pub discarded_block: UnitaryMatrix,
    /// Frobenius norm of the two ancilla-flipping blocks.
    pub off_block_norm: f64,
}

impl AncillaBlockDecomposition {
    pub fn is_block_diagonal(&self, tol: f64) -> bool {
        self.off_block_norm <= tol
    }
}

pub fn project_ancilla_block(u: &UnitaryMatrix) -> Result<AncillaBlockDecomposition> {
    let dim = u.dim();
    if dim < 2 || !dim.is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "cannot split dimension {dim} over an ancilla qubit"
        )));
    }
    let d = dim / 2;
    let kept_block = UnitaryMatrix::from_fn(d, |r, c| u.get(2 * r, 2 * c));
    let discarded_block = UnitaryMatrix::from_fn(d, |r, c| u.get(2 * r + 1, 2 * c + 1));
    let mut off = 0.0;
    for r in 0..d {
        for c in 0..d {
            off += u.get(2 * r, 2 * c + 1).norm_sqr() + u.get(2 * r + 1, 2 * c).norm_sqr();
        }
    }
    Ok(AncillaBlockDecomposition {
        kept_block,
        discarded_block,
        off_block_norm: off.sqrt(),
    })
}

/// Fidelity of a system+ancilla generator against a system target, through
/// the ancilla-|0⟩ block.
pub fn projected_fidelity(generated: &UnitaryMatrix, target: &UnitaryMatrix) -> Result<f64> {
    if generated.dim() != 2 * target.dim() {
        return Err(Error::Dimension(format!(
            "generator dimension {} is not twice the target dimension {}",
            generated.dim(),
            target.dim()
        )));
    }
    fidelity_hs(&project_ancilla_block(generated)?.kept_block, target)
}
