//! Layered generator circuits and their ancilla extensions.
//!
//! Every layer applies RX to each qubit, then RZ to each qubit, then RZZ on
//! the nearest-neighbour system chain, then the ancilla couplings of the
//! chosen configuration. The ancilla, when present, is the last qubit.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{RotationKind, Statevector, UnitaryMatrix};

/// How the ancilla is wired into each layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AncillaConfig {
    None,
    /// Local RX, RZ on the ancilla; one coupling to the last system qubit.
    A1,
    /// Couplings to the first and last system qubits, no ancilla rotations.
    A2,
    /// A2 plus ancilla rotations.
    A3,
    /// A3 plus couplings to every remaining system qubit.
    A4,
}

impl AncillaConfig {
    pub const ALL: [AncillaConfig; 5] = [
        AncillaConfig::None,
        AncillaConfig::A1,
        AncillaConfig::A2,
        AncillaConfig::A3,
        AncillaConfig::A4,
    ];

    pub fn has_ancilla(self) -> bool {
        self != AncillaConfig::None
    }

    fn has_local_rotations(self) -> bool {
        matches!(self, AncillaConfig::A1 | AncillaConfig::A3 | AncillaConfig::A4)
    }

    /// System qubits coupled to the ancilla, in gate order.
    fn coupled_qubits(self, n_system: usize) -> Vec<usize> {
        let last = n_system - 1;
        match self {
            AncillaConfig::None => vec![],
            AncillaConfig::A1 => vec![last],
            AncillaConfig::A2 | AncillaConfig::A3 => vec![last, 0],
            AncillaConfig::A4 => std::iter::once(last).chain(0..last).collect(),
        }
    }

    pub fn params_per_layer(self, n_system: usize) -> usize {
        let locals = 2 * (n_system + usize::from(self.has_local_rotations()));
        locals + (n_system - 1) + self.coupled_qubits(n_system).len()
    }

    pub fn name(self) -> &'static str {
        match self {
            AncillaConfig::None => "none",
            AncillaConfig::A1 => "a1",
            AncillaConfig::A2 => "a2",
            AncillaConfig::A3 => "a3",
            AncillaConfig::A4 => "a4",
        }
    }
}

impl fmt::Display for AncillaConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AncillaConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AncillaConfig::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Invalid(format!("unknown ancilla configuration '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    Random,
    Zero,
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::Random => "random",
            InitMode::Zero => "zero",
        })
    }
}

/// One parameterized gate. Gate `k` of a spec owns parameter slot `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gate {
    pub layer: usize,
    pub kind: RotationKind,
    pub qubits: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    n_system_qubits: usize,
    n_layers: usize,
    ancilla: AncillaConfig,
    gates: Vec<Gate>,
}

impl GeneratorSpec {
    pub fn n_system_qubits(&self) -> usize {
        self.n_system_qubits
    }

    /// System qubits plus the ancilla, if any.
    pub fn n_qubits(&self) -> usize {
        self.n_system_qubits + usize::from(self.ancilla.has_ancilla())
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn ancilla(&self) -> AncillaConfig {
        self.ancilla
    }

    pub fn has_ancilla(&self) -> bool {
        self.ancilla.has_ancilla()
    }

    pub fn ancilla_qubit(&self) -> Option<usize> {
        self.has_ancilla().then_some(self.n_system_qubits)
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn n_params(&self) -> usize {
        self.gates.len()
    }

    /// Slot of the gate with the given placement, if present.
    pub fn slot_of(&self, layer: usize, kind: RotationKind, qubits: &[usize]) -> Option<usize> {
        self.gates
            .iter()
            .position(|g| g.layer == layer && g.kind == kind && g.qubits == qubits)
    }

    /// Slots whose gate touches the ancilla.
    pub fn ancilla_slots(&self) -> Vec<usize> {
        match self.ancilla_qubit() {
            None => vec![],
            Some(a) => self
                .gates
                .iter()
                .enumerate()
                .filter(|(_, g)| g.qubits.contains(&a))
                .map(|(k, _)| k)
                .collect(),
        }
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::ParamCount {
                expected: self.n_params(),
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Applies the circuit to a state on `n_qubits()` qubits.
    pub fn apply(&self, state: &mut Statevector, params: &[f64]) -> Result<()> {
        self.check_params(params)?;
        for (g, &angle) in self.gates.iter().zip(params) {
            state.rotate(g.kind, &g.qubits, angle)?;
        }
        Ok(())
    }

    pub fn unitary(&self, params: &[f64]) -> Result<UnitaryMatrix> {
        circuit_unitary(self, params)
    }
}

pub fn build_generator_spec(
    n_qubits: usize,
    n_layers: usize,
    config: AncillaConfig,
) -> Result<GeneratorSpec> {
    if n_qubits < 2 {
        return Err(Error::Invalid(format!(
            "generator needs at least 2 system qubits, got {n_qubits}"
        )));
    }
    if n_layers < 1 {
        return Err(Error::Invalid("generator needs at least one layer".into()));
    }
    if config.has_ancilla() && n_qubits < 3 {
        return Err(Error::Invalid(format!(
            "ancilla configuration {config} needs at least 3 system qubits"
        )));
    }
    let ancilla = n_qubits;
    let local: Vec<usize> = if config.has_local_rotations() {
        (0..=n_qubits).collect()
    } else {
        (0..n_qubits).collect()
    };
    let couplings = config.coupled_qubits(n_qubits);

    let mut gates = Vec::with_capacity(n_layers * config.params_per_layer(n_qubits));
    for layer in 0..n_layers {
        for kind in [RotationKind::Rx, RotationKind::Rz] {
            gates.extend(local.iter().map(|&q| Gate {
                layer,
                kind,
                qubits: vec![q],
            }));
        }
        gates.extend((0..n_qubits - 1).map(|q| Gate {
            layer,
            kind: RotationKind::Rzz,
            qubits: vec![q, q + 1],
        }));
        gates.extend(couplings.iter().map(|&q| Gate {
            layer,
            kind: RotationKind::Rzz,
            qubits: vec![q, ancilla],
        }));
    }
    Ok(GeneratorSpec {
        n_system_qubits: n_qubits,
        n_layers,
        ancilla: config,
        gates,
    })
}

/// Product of the circuit's gates; column `j` is the circuit applied to `|j⟩`.
pub fn circuit_unitary(spec: &GeneratorSpec, params: &[f64]) -> Result<UnitaryMatrix> {
    spec.check_params(params)?;
    let mut u = UnitaryMatrix::identity(1 << spec.n_qubits());
    for (g, &angle) in spec.gates.iter().zip(params) {
        u.left_rotate(g.kind, &g.qubits, angle)?;
    }
    Ok(u)
}

fn draw(mode: InitMode, rng: &mut impl Rng) -> f64 {
    match mode {
        InitMode::Random => rng.gen_range(0.0..TAU),
        InitMode::Zero => 0.0,
    }
}

pub fn init_params(spec: &GeneratorSpec, mode: InitMode, rng: &mut impl Rng) -> Vec<f64> {
    (0..spec.n_params()).map(|_| draw(mode, rng)).collect()
}

/// Rebuilds `spec` with an ancilla wired per `config`. Existing slot values
/// carry over by gate placement; the new ancilla slots are drawn per `init`.
pub fn extend_with_ancilla(
    spec: &GeneratorSpec,
    params: &[f64],
    config: AncillaConfig,
    init: InitMode,
    rng: &mut impl Rng,
) -> Result<(GeneratorSpec, Vec<f64>)> {
    if spec.has_ancilla() {
        return Err(Error::Invalid("generator already has an ancilla".into()));
    }
    if !config.has_ancilla() {
        return Err(Error::Invalid(
            "cannot extend with ancilla configuration 'none'".into(),
        ));
    }
    spec.check_params(params)?;
    let extended = build_generator_spec(spec.n_system_qubits, spec.n_layers, config)?;
    let new_params = extended
        .gates
        .iter()
        .map(
            |g| match spec.slot_of(g.layer, g.kind, &g.qubits) {
                Some(old) => params[old],
                None => draw(init, rng),
            },
        )
        .collect();
    Ok((extended, new_params))
}
