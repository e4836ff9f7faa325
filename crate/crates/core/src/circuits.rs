//! Gate definitions and drive-cycle unitaries.
//!
//! Qubit 0 is the most significant bit of the computational-basis index, so
//! the label `"+0"` means qubit 0 in `|+>` and qubit 1 in `|0>`.

use serde::{Deserialize, Serialize};

use crate::error::{PoeError, Result};
use crate::liouville::{c, kron, ComplexMatrix, ONE, ZERO};

/// Entangling angle of the reference circuit, radians.
pub const PAPER_THETA: f64 = 1.0;
/// Single-qubit rotation angle of the reference circuit, radians.
pub const PAPER_PHI: f64 = 2.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    /// `exp(-i angle/2 X_j X_k)`.
    XX,
    /// `exp(-i angle/2 Y)`, or Pauli Y when no angle is given.
    Y,
    /// `exp(-i angle/2 X)`, or Pauli X when no angle is given.
    X,
    /// `exp(-i angle/2 Z)`, or Pauli Z when no angle is given.
    Z,
    /// Hadamard.
    H,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    #[serde(rename = "gate")]
    pub kind: GateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    pub targets: Vec<usize>,
}

impl GateSpec {
    pub fn xx(theta: f64, a: usize, b: usize) -> Self {
        Self {
            kind: GateKind::XX,
            angle: Some(theta),
            targets: vec![a, b],
        }
    }

    pub fn y(phi: f64, q: usize) -> Self {
        Self::single(GateKind::Y, Some(phi), q)
    }

    pub fn x(q: usize) -> Self {
        Self::single(GateKind::X, None, q)
    }

    pub fn z(q: usize) -> Self {
        Self::single(GateKind::Z, None, q)
    }

    pub fn h(q: usize) -> Self {
        Self::single(GateKind::H, None, q)
    }

    pub fn rotation(kind: GateKind, angle: f64, q: usize) -> Self {
        Self::single(kind, Some(angle), q)
    }

    fn single(kind: GateKind, angle: Option<f64>, q: usize) -> Self {
        Self {
            kind,
            angle,
            targets: vec![q],
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let arity = if self.kind == GateKind::XX { 2 } else { 1 };
        if self.targets.len() != arity {
            return Err(PoeError::InvalidGate(format!(
                "{:?} takes {arity} target(s), got {}",
                self.kind,
                self.targets.len()
            )));
        }
        if let Some(&q) = self.targets.iter().find(|&&q| q >= n_qubits) {
            return Err(PoeError::InvalidGate(format!(
                "target qubit {q} outside a {n_qubits}-qubit register"
            )));
        }
        if arity == 2 && self.targets[0] == self.targets[1] {
            return Err(PoeError::InvalidGate("XX targets must be distinct".into()));
        }
        match (self.kind, self.angle) {
            (_, Some(a)) if !a.is_finite() => {
                Err(PoeError::InvalidGate(format!("angle {a} is not finite")))
            }
            (GateKind::XX, None) => Err(PoeError::InvalidGate("XX requires an angle".into())),
            (GateKind::H, Some(_)) => Err(PoeError::InvalidGate("H takes no angle".into())),
            _ => Ok(()),
        }
    }
}

/// One drive cycle: gates applied in list order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub gates: Vec<GateSpec>,
}

impl CircuitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(PoeError::InvalidCircuit("register needs at least one qubit".into()));
        }
        if self.n_qubits > 10 {
            return Err(PoeError::InvalidCircuit(format!(
                "{} qubits is beyond dense simulation range",
                self.n_qubits
            )));
        }
        if self.gates.is_empty() {
            return Err(PoeError::InvalidCircuit("gate list is empty".into()));
        }
        self.gates.iter().try_for_each(|g| g.validate(self.n_qubits))
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Copy with every XX angle shifted by `delta`.
    pub fn with_xx_offset(&self, delta: f64) -> CircuitSpec {
        let mut out = self.clone();
        for g in out.gates.iter_mut().filter(|g| g.kind == GateKind::XX) {
            g.angle = g.angle.map(|a| a + delta);
        }
        out
    }
}

/// The two-gate reference cycle: XX(1.0) on qubits (0, 1), then Y(2.4) on qubit 0.
pub fn paper_circuit() -> CircuitSpec {
    circuit_with_angles(PAPER_THETA, PAPER_PHI, 0)
}

/// The reference cycle with custom angles and a choice of Y target.
pub fn circuit_with_angles(theta: f64, phi: f64, y_target: usize) -> CircuitSpec {
    CircuitSpec {
        n_qubits: 2,
        gates: vec![GateSpec::xx(theta, 0, 1), GateSpec::y(phi, y_target)],
    }
}

fn pauli(kind: GateKind) -> ComplexMatrix {
    match kind {
        GateKind::X => ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        GateKind::Y => ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]),
        GateKind::Z => ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c(-1.0, 0.0)]),
        GateKind::H => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            ComplexMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
        }
        GateKind::XX => unreachable!("XX is not a single-qubit operator"),
    }
}

/// `cos(a/2) I - i sin(a/2) P` for a Pauli-product `P` with `P^2 = I`.
fn pauli_rotation(p: &ComplexMatrix, angle: f64) -> ComplexMatrix {
    let n = p.nrows();
    ComplexMatrix::identity(n, n) * c((angle / 2.0).cos(), 0.0) - p * c(0.0, (angle / 2.0).sin())
}

/// Places single-qubit operators at the given qubits, identity elsewhere.
fn embed(ops: &[(usize, &ComplexMatrix)], n_qubits: usize) -> ComplexMatrix {
    let id = ComplexMatrix::identity(2, 2);
    (0..n_qubits).fold(ComplexMatrix::identity(1, 1), |acc, q| {
        let factor = ops
            .iter()
            .find(|(t, _)| *t == q)
            .map(|(_, m)| *m)
            .unwrap_or(&id);
        kron(&acc, factor)
    })
}

/// Full `2^n x 2^n` unitary of one gate.
pub fn gate_matrix(g: &GateSpec, n_qubits: usize) -> Result<ComplexMatrix> {
    g.validate(n_qubits)?;
    let m = match g.kind {
        GateKind::XX => {
            let x = pauli(GateKind::X);
            let xx = embed(&[(g.targets[0], &x), (g.targets[1], &x)], n_qubits);
            pauli_rotation(&xx, g.angle.unwrap_or_default())
        }
        kind => {
            let p = pauli(kind);
            let local = match g.angle {
                Some(a) => pauli_rotation(&p, a),
                None => p,
            };
            embed(&[(g.targets[0], &local)], n_qubits)
        }
    };
    Ok(m)
}

/// Product of the gate matrices, first gate acting first.
pub fn cycle_unitary(circuit: &CircuitSpec) -> Result<ComplexMatrix> {
    circuit.validate()?;
    let dim = circuit.dim();
    circuit
        .gates
        .iter()
        .try_fold(ComplexMatrix::identity(dim, dim), |acc, g| {
            Ok(gate_matrix(g, circuit.n_qubits)? * acc)
        })
}
