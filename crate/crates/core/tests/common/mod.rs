//! Dense reference implementations shared by the integration tests. Nothing
//! here calls into the simulator's own gate or Choi code.
#![allow(dead_code)]

use qgan_core::ansatz::GeneratorSpec;
use qgan_core::sim::{RotationKind, Statevector, UnitaryMatrix, C64};
use rand::Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Row-major dense matrix.
#[derive(Clone, Debug)]
pub struct Dense {
    pub dim: usize,
    pub a: Vec<C64>,
}

impl Dense {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, a: vec![c(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.a[i * dim + i] = c(1.0, 0.0);
        }
        m
    }

    pub fn at(&self, r: usize, col: usize) -> C64 {
        self.a[r * self.dim + col]
    }

    pub fn mul(&self, rhs: &Dense) -> Dense {
        let n = self.dim;
        let mut out = Dense::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self.at(i, k);
                if x == c(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += x * rhs.at(k, j);
                }
            }
        }
        out
    }

    pub fn kron(&self, rhs: &Dense) -> Dense {
        let n = self.dim * rhs.dim;
        let mut out = Dense::zeros(n);
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..rhs.dim {
                    for l in 0..rhs.dim {
                        out.a[(i * rhs.dim + k) * n + j * rhs.dim + l] = self.at(i, j) * rhs.at(k, l);
                    }
                }
            }
        }
        out
    }

    pub fn add_scaled(&self, rhs: &Dense, s: C64) -> Dense {
        Dense {
            dim: self.dim,
            a: self.a.iter().zip(&rhs.a).map(|(x, y)| x + s * y).collect(),
        }
    }

    pub fn scaled(&self, s: C64) -> Dense {
        Dense { dim: self.dim, a: self.a.iter().map(|x| x * s).collect() }
    }

    pub fn dagger(&self) -> Dense {
        let n = self.dim;
        let mut out = Dense::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.a[j * n + i] = self.at(i, j).conj();
            }
        }
        out
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|r| (0..self.dim).map(|k| self.at(r, k) * v[k]).sum())
            .collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.at(i, i)).sum()
    }

    pub fn to_unitary(&self) -> UnitaryMatrix {
        UnitaryMatrix::from_row_major(self.dim, self.a.clone()).unwrap()
    }

    pub fn from_unitary(u: &UnitaryMatrix) -> Dense {
        Dense { dim: u.dim(), a: u.entries().to_vec() }
    }
}

pub fn pauli_2x2(letter: char) -> Dense {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    let a = match letter {
        'I' => vec![o, z, z, o],
        'X' => vec![z, o, o, z],
        'Y' => vec![z, -i, i, z],
        'Z' => vec![o, z, z, -o],
        _ => panic!("bad letter {letter}"),
    };
    Dense { dim: 2, a }
}

/// Kronecker product of single-qubit Paulis, leftmost letter on qubit 0.
pub fn pauli_dense(letters: &str) -> Dense {
    letters
        .chars()
        .fold(Dense::identity(1), |acc, l| acc.kron(&pauli_2x2(l)))
}

/// `cos(a/2) I − i sin(a/2) P` for the rotation's Pauli on `n` qubits.
pub fn gate_dense(kind: RotationKind, qubits: &[usize], angle: f64, n: usize) -> Dense {
    let mut letters = vec!['I'; n];
    let l = match kind {
        RotationKind::Rx => 'X',
        RotationKind::Rz | RotationKind::Rzz => 'Z',
    };
    for &q in qubits {
        letters[q] = l;
    }
    let p = pauli_dense(&letters.iter().collect::<String>());
    let (s, co) = (angle / 2.0).sin_cos();
    Dense::identity(1 << n).scaled(c(co, 0.0)).add_scaled(&p, c(0.0, -s))
}

/// Gate-by-gate dense product of a generator circuit.
pub fn circuit_dense(spec: &GeneratorSpec, theta: &[f64]) -> Dense {
    let n = spec.n_qubits();
    spec.gates()
        .iter()
        .zip(theta)
        .fold(Dense::identity(1 << n), |acc, (g, &a)| {
            gate_dense(g.kind, &g.qubits, a, n).mul(&acc)
        })
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Haar-distributed unitary: Gram-Schmidt on a complex Gaussian matrix.
pub fn haar_unitary(n_qubits: usize, rng: &mut impl Rng) -> Dense {
    let d = 1 << n_qubits;
    let mut cols: Vec<Vec<C64>> = (0..d)
        .map(|_| (0..d).map(|_| c(gaussian(rng), gaussian(rng))).collect())
        .collect();
    for j in 0..d {
        for k in 0..j {
            let proj: C64 = cols[k].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
            let prev = cols[k].clone();
            for (x, p) in cols[j].iter_mut().zip(prev) {
                *x -= proj * p;
            }
        }
        let norm = cols[j].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|x| *x /= norm);
    }
    let mut m = Dense::zeros(d);
    for (j, col) in cols.iter().enumerate() {
        for (i, x) in col.iter().enumerate() {
            m.a[i * d + j] = *x;
        }
    }
    m
}

pub fn random_state(n_qubits: usize, rng: &mut impl Rng) -> Statevector {
    let mut v: Vec<C64> = (0..1 << n_qubits).map(|_| c(gaussian(rng), gaussian(rng))).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    Statevector::from_amplitudes(n_qubits, v).unwrap()
}

/// `|Ω⟩ = Σ_i |i⟩|i⟩/√d` on `2n` qubits, optionally tensored with `|0⟩`.
pub fn omega(n: usize, with_ancilla: bool) -> Vec<C64> {
    let d = 1 << n;
    let basis = |k: usize, dim: usize| {
        let mut v = vec![c(0.0, 0.0); dim];
        v[k] = c(1.0, 0.0);
        v
    };
    let mut out = vec![c(0.0, 0.0); d * d];
    for i in 0..d {
        let a = basis(i, d);
        for (k, x) in a.iter().enumerate() {
            for (l, y) in a.iter().enumerate() {
                out[k * d + l] += x * y;
            }
        }
    }
    out.iter_mut().for_each(|x| *x /= (d as f64).sqrt());
    if with_ancilla {
        out.iter().flat_map(|&x| [x, c(0.0, 0.0)]).collect()
    } else {
        out
    }
}

/// `(I_A ⊗ U)|Ω⟩` by explicit matrix-vector product on the doubled register.
pub fn choi_explicit(u: &Dense, n_system: usize, with_ancilla: bool) -> Vec<C64> {
    Dense::identity(1 << n_system).kron(u).apply(&omega(n_system, with_ancilla))
}

pub fn overlap(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn uniform_angles(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect()
}
