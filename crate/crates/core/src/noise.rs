//! Error models injected into the drive cycle.
//!
//! Incoherent channels (damping, dephasing, depolarizing) act identically on
//! every qubit after the cycle unitary. Miscalibration shifts every XX angle by
//! a fixed amount; drift shifts it by `k * rate` on cycle `k`. SPAM only touches
//! the initial state and the outcome distribution, never the cycle channel.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::circuits::{cycle_unitary, gate_matrix, CircuitSpec, GateSpec};
use crate::error::{PoeError, Result};
use crate::liouville::{
    c, compose, kraus_superop, kron, unitary_superop, ComplexMatrix, DensityVector, Superoperator,
    ONE, ZERO,
};

const SUM_TOL: f64 = 1e-12;

/// Where the per-cycle damping is applied relative to the cycle unitary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingPlacement {
    #[default]
    After,
    /// Half the decay before the unitary, half after.
    Split,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    None,
    AmplitudeDamping {
        t1_in_cycles: f64,
        #[serde(default)]
        placement: DampingPlacement,
    },
    Miscalibration {
        delta_theta: f64,
    },
    Drift {
        dtheta_per_cycle: f64,
    },
    Dephasing {
        p: f64,
    },
    Depolarizing {
        p: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub model: NoiseModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spam: Option<SpamSpec>,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(model: NoiseModel) -> Self {
        Self { model, spam: None }
    }

    pub fn amplitude_damping(t1_in_cycles: f64) -> Self {
        Self::new(NoiseModel::AmplitudeDamping {
            t1_in_cycles,
            placement: DampingPlacement::After,
        })
    }

    pub fn miscalibration(delta_theta: f64) -> Self {
        Self::new(NoiseModel::Miscalibration { delta_theta })
    }

    pub fn drift(dtheta_per_cycle: f64) -> Self {
        Self::new(NoiseModel::Drift { dtheta_per_cycle })
    }

    pub fn with_spam(mut self, spam: SpamSpec) -> Self {
        self.spam = Some(spam);
        self
    }

    /// Whether every cycle applies the same channel.
    pub fn is_periodic(&self) -> bool {
        !matches!(self.model, NoiseModel::Drift { .. })
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let prob = |p: f64, what: &str| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(PoeError::InvalidNoise(format!("{what} probability {p} outside [0, 1]")))
            }
        };
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(PoeError::InvalidNoise(format!("{what} must be finite")))
            }
        };
        match self.model {
            NoiseModel::None => {}
            NoiseModel::AmplitudeDamping { t1_in_cycles, .. } => {
                damping_gamma(t1_in_cycles)?;
            }
            NoiseModel::Miscalibration { delta_theta } => finite(delta_theta, "delta_theta")?,
            NoiseModel::Drift { dtheta_per_cycle } => finite(dtheta_per_cycle, "dtheta_per_cycle")?,
            NoiseModel::Dephasing { p } => prob(p, "dephasing")?,
            NoiseModel::Depolarizing { p } => prob(p, "depolarizing")?,
        }
        if let Some(spam) = &self.spam {
            spam.validate(n_qubits)?;
        }
        Ok(())
    }
}

/// Per-cycle decay probability of `|1>` for a lifetime given in cycles.
pub fn damping_gamma(t1_in_cycles: f64) -> Result<f64> {
    if t1_in_cycles.is_nan() || t1_in_cycles <= 0.0 {
        return Err(PoeError::InvalidNoise(format!(
            "lifetime must be positive, got {t1_in_cycles}"
        )));
    }
    Ok(-(-1.0 / t1_in_cycles).exp_m1())
}

fn real(x: f64) -> crate::liouville::C64 {
    c(x, 0.0)
}

fn damping_kraus(gamma: f64) -> Vec<ComplexMatrix> {
    vec![
        ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, real((1.0 - gamma).sqrt())]),
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, real(gamma.sqrt()), ZERO, ZERO]),
    ]
}

fn dephasing_kraus(p: f64) -> Vec<ComplexMatrix> {
    vec![
        ComplexMatrix::identity(2, 2) * real((1.0 - p).sqrt()),
        ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, real(-1.0)]) * real(p.sqrt()),
    ]
}

fn depolarizing_kraus(p: f64) -> Vec<ComplexMatrix> {
    let pauli = [
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]),
        ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, real(-1.0)]),
    ];
    let mut out = vec![ComplexMatrix::identity(2, 2) * real((1.0 - 0.75 * p).sqrt())];
    out.extend(pauli.into_iter().map(|m| m * real((p / 4.0).sqrt())));
    out
}

/// Applies the same single-qubit Kraus channel to every qubit.
fn per_qubit_channel(local: &[ComplexMatrix], n_qubits: usize) -> Result<Superoperator> {
    let dim = 1 << n_qubits;
    (0..n_qubits).try_fold(Superoperator::identity(dim), |acc, q| {
        let left = ComplexMatrix::identity(1 << q, 1 << q);
        let right = ComplexMatrix::identity(1 << (n_qubits - q - 1), 1 << (n_qubits - q - 1));
        let embedded: Vec<_> = local.iter().map(|k| kron(&kron(&left, k), &right)).collect();
        compose(&acc, &kraus_superop(&embedded)?)
    })
}

/// The channel applied during drive cycle `k` (0-based).
pub fn cycle_channel(circuit: &CircuitSpec, noise: &NoiseSpec, k: usize) -> Result<Superoperator> {
    circuit.validate()?;
    noise.validate(circuit.n_qubits)?;
    let n = circuit.n_qubits;
    let unitary = |circ: &CircuitSpec| unitary_superop(&cycle_unitary(circ)?);
    match noise.model {
        NoiseModel::None => unitary(circuit),
        NoiseModel::AmplitudeDamping {
            t1_in_cycles,
            placement,
        } => {
            let u = unitary(circuit)?;
            match placement {
                DampingPlacement::After => {
                    let d = per_qubit_channel(&damping_kraus(damping_gamma(t1_in_cycles)?), n)?;
                    compose(&u, &d)
                }
                DampingPlacement::Split => {
                    let d = per_qubit_channel(&damping_kraus(damping_gamma(2.0 * t1_in_cycles)?), n)?;
                    compose(&compose(&d, &u)?, &d)
                }
            }
        }
        NoiseModel::Miscalibration { delta_theta } => unitary(&circuit.with_xx_offset(delta_theta)),
        NoiseModel::Drift { dtheta_per_cycle } => {
            unitary(&circuit.with_xx_offset(k as f64 * dtheta_per_cycle))
        }
        NoiseModel::Dephasing { p } => compose(&unitary(circuit)?, &per_qubit_channel(&dephasing_kraus(p), n)?),
        NoiseModel::Depolarizing { p } => {
            compose(&unitary(circuit)?, &per_qubit_channel(&depolarizing_kraus(p), n)?)
        }
    }
}

/// Builds cycle channels on demand, caching the single channel of periodic noise.
#[derive(Debug, Clone)]
pub struct ChannelSchedule<'a> {
    circuit: &'a CircuitSpec,
    noise: &'a NoiseSpec,
    periodic: Option<Superoperator>,
}

impl<'a> ChannelSchedule<'a> {
    pub fn new(circuit: &'a CircuitSpec, noise: &'a NoiseSpec) -> Result<Self> {
        let periodic = if noise.is_periodic() {
            Some(cycle_channel(circuit, noise, 0)?)
        } else {
            circuit.validate()?;
            noise.validate(circuit.n_qubits)?;
            None
        };
        Ok(Self {
            circuit,
            noise,
            periodic,
        })
    }

    pub fn channel(&self, k: usize) -> Result<Cow<'_, Superoperator>> {
        match &self.periodic {
            Some(s) => Ok(Cow::Borrowed(s)),
            None => cycle_channel(self.circuit, self.noise, k).map(Cow::Owned),
        }
    }
}

/// One term of the preparation mixture: with `probability`, the listed gates act
/// on the ideal initial state. An empty gate list is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepComponent {
    pub probability: f64,
    #[serde(default)]
    pub gates: Vec<GateSpec>,
}

/// State-preparation mixture and detector confusion matrix.
///
/// `detector_matrix[i][j]` is the probability of reporting outcome `i` when the
/// true outcome is `j`; each column sums to one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpamSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prep_mixture: Vec<PrepComponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_matrix: Option<Vec<Vec<f64>>>,
}

impl SpamSpec {
    /// Detector matrix for independent per-qubit readout with flip probabilities
    /// `p01` (true 0 read as 1) and `p10` (true 1 read as 0).
    pub fn independent_readout(n_qubits: usize, p01: f64, p10: f64) -> Vec<Vec<f64>> {
        let local = [[1.0 - p01, p10], [p01, 1.0 - p10]];
        let dim = 1usize << n_qubits;
        (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        (0..n_qubits)
                            .map(|q| {
                                let shift = n_qubits - 1 - q;
                                local[(i >> shift) & 1][(j >> shift) & 1]
                            })
                            .product()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if !self.prep_mixture.is_empty() {
            if let Some(p) = self
                .prep_mixture
                .iter()
                .map(|m| m.probability)
                .find(|p| !(0.0..=1.0).contains(p))
            {
                return Err(PoeError::InvalidSpam(format!("mixture probability {p} outside [0, 1]")));
            }
            let total: f64 = self.prep_mixture.iter().map(|m| m.probability).sum();
            if (total - 1.0).abs() > SUM_TOL {
                return Err(PoeError::InvalidSpam(format!("mixture probabilities sum to {total}")));
            }
            for g in self.prep_mixture.iter().flat_map(|m| &m.gates) {
                g.validate(n_qubits).map_err(|e| PoeError::InvalidSpam(e.to_string()))?;
            }
        }
        if let Some(m) = &self.detector_matrix {
            let dim = 1usize << n_qubits;
            if m.len() != dim || m.iter().any(|row| row.len() != dim) {
                return Err(PoeError::InvalidSpam(format!("detector matrix must be {dim}x{dim}")));
            }
            if m.iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(PoeError::InvalidSpam("detector entries must lie in [0, 1]".into()));
            }
            for j in 0..dim {
                let col: f64 = m.iter().map(|row| row[j]).sum();
                if (col - 1.0).abs() > SUM_TOL {
                    return Err(PoeError::InvalidSpam(format!("detector column {j} sums to {col}")));
                }
            }
        }
        Ok(())
    }

    /// `sum_m p_m U_m rho U_m^dagger`.
    pub fn prepare(&self, rho: &DensityVector, n_qubits: usize) -> Result<DensityVector> {
        self.validate(n_qubits)?;
        if self.prep_mixture.is_empty() {
            return Ok(rho.clone());
        }
        let dim = 1usize << n_qubits;
        if rho.dim() != dim {
            return Err(PoeError::DimensionMismatch {
                expected: dim,
                actual: rho.dim(),
            });
        }
        let mut acc = nalgebra::DVector::zeros(dim * dim);
        for comp in &self.prep_mixture {
            let u = comp
                .gates
                .iter()
                .try_fold(ComplexMatrix::identity(dim, dim), |acc, g| {
                    Ok::<_, PoeError>(gate_matrix(g, n_qubits)? * acc)
                })?;
            acc += unitary_superop(&u)?.act(rho.amps()) * real(comp.probability);
        }
        let out = DensityVector::from_raw(dim, acc);
        out.validate()?;
        Ok(out)
    }

    /// Maps a true outcome distribution `q` to the reported one, `M q`.
    pub fn measure(&self, q: &[f64]) -> Result<Vec<f64>> {
        match &self.detector_matrix {
            None => Ok(q.to_vec()),
            Some(m) => {
                if m.len() != q.len() {
                    return Err(PoeError::DimensionMismatch {
                        expected: m.len(),
                        actual: q.len(),
                    });
                }
                Ok(m.iter()
                    .map(|row| row.iter().zip(q).map(|(a, b)| a * b).sum())
                    .collect())
            }
        }
    }
}
