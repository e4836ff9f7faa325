//! Periodic-drive measurement records and the S_n / T_n series built from them.
//!
//! A record holds the recurrence probabilities `R_k` (or symmetrized transition
//! probabilities) for `k = 0..=n_max`. Because `U` is unitary and the drive is
//! periodic, `<rho0|F^n|rho0>` expands into a binomial-weighted sum of these
//! points:
//!
//! ```text
//! S_n = C(2n, n)/4^n R_0 + sum_{k=1..n} 2 (-1)^k C(2n, n-k)/4^n R_k
//! ```
//!
//! The cross-state series `T_n = <b|F^n|a>` uses the same weights on
//! `(P_k^{a->b} + P_k^{b->a})/2`. The printed form of that expansion in the
//! literature drops the `(-1)^k` and halves the coefficients; we keep the signs
//! and factors that follow from `F^n` itself, which is what the spectral decay
//! argument applies to.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::circuits::CircuitSpec;
use crate::error::{PoeError, Result};
use crate::liouville::{
    apply, c, inner, kron, ComplexMatrix, DensityVector, C64, ONE, VALIDATION_TOL, ZERO,
};
use crate::noise::{ChannelSchedule, NoiseSpec, SpamSpec};

/// Weights `w_0..w_n` with `S_n = sum_k w_k R_k`.
///
/// `w_0 = C(2n, n)/4^n` is built as the product of `(2i-1)/(2i)`, every factor
/// below one; the rest follow from `C(2n, n-k-1) = C(2n, n-k) (n-k)/(n+k+1)`,
/// so no factorial is ever formed.
pub fn binomial_weights(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(PoeError::InvalidArgument(
            "weights start at n = 1; S_0 = R_0 carries no decay information".into(),
        ));
    }
    let mut coeff = (1..=n).fold(1.0_f64, |acc, i| acc * (2 * i - 1) as f64 / (2 * i) as f64);
    let mut weights = Vec::with_capacity(n + 1);
    weights.push(coeff);
    for k in 0..n {
        coeff = coeff * (n - k) as f64 / (n + k + 1) as f64;
        let sign = if (k + 1) % 2 == 0 { 2.0 } else { -2.0 };
        weights.push(sign * coeff);
    }
    Ok(weights)
}

/// How the overlap with a reference state is read out in a single basis.
///
/// `<rho0|rho> = sum_i target[i] <i|V rho V^dagger|i>`, where `V` rotates into
/// the measurement basis and `target` is the diagonal of `V rho0 V^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementFrame {
    pub basis_change: ComplexMatrix,
    pub target: Vec<f64>,
}

impl MeasurementFrame {
    /// Outcome distribution of `rho` in the measurement basis.
    pub fn outcome_distribution(&self, rho: &DensityVector) -> Vec<f64> {
        let m = rho.to_matrix();
        let rotated = &self.basis_change * m * self.basis_change.adjoint();
        rotated.diagonal().iter().map(|z| z.re).collect()
    }

    /// Largest target weight and whether the target is that weight times a
    /// 0/1 indicator (then a record point is `scale` times an event probability).
    fn event_scale(&self) -> (f64, bool) {
        let scale = self.target.iter().copied().fold(0.0, f64::max);
        let indicator = scale > 0.0
            && self
                .target
                .iter()
                .all(|&t| t.abs() <= 1e-12 || (t - scale).abs() <= 1e-12);
        (scale, indicator)
    }

    fn tensor(&self, other: &MeasurementFrame) -> MeasurementFrame {
        MeasurementFrame {
            basis_change: kron(&self.basis_change, &other.basis_change),
            target: self
                .target
                .iter()
                .flat_map(|a| other.target.iter().map(move |b| a * b))
                .collect(),
        }
    }
}

/// An initial (or reference) state together with the basis it is measured in.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeState {
    pub label: String,
    pub n_qubits: usize,
    pub state: DensityVector,
    pub frame: MeasurementFrame,
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(PoeError::InvalidState(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

impl ProbeState {
    /// Product state from a label over `0`, `1`, `+`, `-` (qubit 0 first).
    /// `+`/`-` qubits are read out after a Hadamard.
    pub fn from_label(label: &str) -> Result<Self> {
        if label.is_empty() {
            return Err(PoeError::InvalidState("empty state label".into()));
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = ComplexMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
        let mut psi = DVector::from_element(1, ONE);
        let mut basis_change = ComplexMatrix::identity(1, 1);
        let mut index = 0usize;
        for ch in label.chars() {
            let (amps, rotate, bit) = match ch {
                '0' => ([ONE, ZERO], false, 0),
                '1' => ([ZERO, ONE], false, 1),
                '+' => ([c(s, 0.0), c(s, 0.0)], true, 0),
                '-' => ([c(s, 0.0), c(-s, 0.0)], true, 1),
                other => {
                    return Err(PoeError::InvalidState(format!(
                        "unknown qubit label '{other}' (use 0, 1, + or -)"
                    )))
                }
            };
            psi = psi.kronecker(&DVector::from_column_slice(&amps));
            let local = if rotate { h.clone() } else { ComplexMatrix::identity(2, 2) };
            basis_change = kron(&basis_change, &local);
            index = index * 2 + bit;
        }
        let n_qubits = label.chars().count();
        let mut target = vec![0.0; 1 << n_qubits];
        target[index] = 1.0;
        Ok(Self {
            label: label.to_string(),
            n_qubits,
            state: DensityVector::from_pure(psi.as_slice())?,
            frame: MeasurementFrame {
                basis_change,
                target,
            },
        })
    }

    /// Pure state from explicit amplitudes (must be normalized).
    pub fn from_amplitudes(amps: &[C64]) -> Result<Self> {
        let state = DensityVector::from_pure(amps)?;
        Self::from_density("custom", state)
    }

    /// Any valid density matrix. Diagonal states are measured in the
    /// computational basis; others in their own eigenbasis.
    pub fn from_density(label: &str, state: DensityVector) -> Result<Self> {
        state.validate()?;
        let n_qubits = qubits_for_dim(state.dim())?;
        let m = state.to_matrix();
        let dim = state.dim();
        let off_diagonal = (0..dim)
            .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(0.0_f64, |acc, (i, j)| acc.max(m[(i, j)].norm()));
        let frame = if off_diagonal <= 1e-12 {
            MeasurementFrame {
                basis_change: ComplexMatrix::identity(dim, dim),
                target: state.populations(),
            }
        } else {
            let eig = m.symmetric_eigen();
            MeasurementFrame {
                basis_change: eig.eigenvectors.adjoint(),
                target: eig.eigenvalues.iter().copied().collect(),
            }
        };
        Ok(Self {
            label: label.to_string(),
            n_qubits,
            state,
            frame,
        })
    }

    /// This state on the leading qubits with `extra` maximally mixed qubits appended.
    pub fn with_mixed_ancillas(&self, extra: usize) -> ProbeState {
        let anc_dim = 1usize << extra;
        let mixed = ProbeState {
            label: "I".repeat(extra),
            n_qubits: extra,
            state: DensityVector::maximally_mixed(anc_dim),
            frame: MeasurementFrame {
                basis_change: ComplexMatrix::identity(anc_dim, anc_dim),
                target: vec![1.0 / anc_dim as f64; anc_dim],
            },
        };
        ProbeState {
            label: format!("{}{}", self.label, mixed.label),
            n_qubits: self.n_qubits + extra,
            state: self.state.tensor(&mixed.state),
            frame: self.frame.tensor(&mixed.frame),
        }
    }

    /// `<rho0|rho>` as seen through the detector.
    fn measured_overlap(&self, rho: &DensityVector, spam: Option<&SpamSpec>) -> Result<f64> {
        match spam.filter(|s| s.detector_matrix.is_some()) {
            None => inner(&self.state, rho),
            Some(spam) => {
                let reported = spam.measure(&self.frame.outcome_distribution(rho))?;
                Ok(reported.iter().zip(&self.frame.target).map(|(r, t)| r * t).sum())
            }
        }
    }
}

/// Cycle count, shots per point (0 = exact) and root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampling {
    pub n_max: usize,
    pub shots: u64,
    pub seed: u64,
}

impl Sampling {
    pub fn exact(n_max: usize) -> Self {
        Self {
            n_max,
            shots: 0,
            seed: 0,
        }
    }

    pub fn sampled(n_max: usize, shots: u64, seed: u64) -> Self {
        Self { n_max, shots, seed }
    }

    pub fn is_exact(&self) -> bool {
        self.shots == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Recurrence,
    CrossState,
    Subsystem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsystemMode {
    /// Prepare `rho_pure ⊗ I/2^(N-d)` directly.
    DirectMixed,
    /// Average one experiment per computational basis state of the ancillas.
    EmulatedAverage,
}

/// One independently prepared and measured series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub label: String,
    pub values: Vec<f64>,
    pub variances: Vec<f64>,
    /// Raw success counts, present for sampled or ingested data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub successes: Option<Vec<u64>>,
    /// Each value is `scale` times the measured event probability.
    pub scale: f64,
}

impl Family {
    pub fn exact(label: impl Into<String>, values: Vec<f64>, scale: f64) -> Self {
        let variances = vec![0.0; values.len()];
        Self {
            label: label.into(),
            values,
            variances,
            successes: None,
            scale,
        }
    }

    /// Probabilities `scale * s/shots` with binomial variance estimates.
    pub fn from_counts(label: impl Into<String>, successes: Vec<u64>, shots: u64, scale: f64) -> Result<Self> {
        if shots == 0 {
            return Err(PoeError::InvalidRecord("shots must be positive".into()));
        }
        if let Some(&s) = successes.iter().find(|&&s| s > shots) {
            return Err(PoeError::InvalidRecord(format!("{s} successes exceed {shots} shots")));
        }
        let total = shots as f64;
        let (values, variances) = successes
            .iter()
            .map(|&s| {
                let p = s as f64 / total;
                (scale * p, scale * scale * p * (1.0 - p) / total)
            })
            .unzip();
        Ok(Self {
            label: label.into(),
            values,
            variances,
            successes: Some(successes),
            scale,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordMetadata {
    pub states: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsystem_mode: Option<SubsystemMode>,
}

/// A measured or simulated series `k = 0..=n_max`.
///
/// `values` is the mean of the families: the single recurrence family, the
/// forward/reverse pair of a cross-state run, or the emulated preparations of a
/// subsystem run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoeRecord {
    pub kind: RecordKind,
    pub n_max: usize,
    pub shots: u64,
    pub values: Vec<f64>,
    pub variances: Vec<f64>,
    pub families: Vec<Family>,
    pub metadata: RecordMetadata,
}

impl PoeRecord {
    pub fn from_families(
        kind: RecordKind,
        shots: u64,
        families: Vec<Family>,
        metadata: RecordMetadata,
    ) -> Result<Self> {
        let first = families
            .first()
            .ok_or_else(|| PoeError::InvalidRecord("record has no measurement families".into()))?;
        let len = first.values.len();
        if len < 2 {
            return Err(PoeError::InvalidRecord("record needs at least k = 0 and k = 1".into()));
        }
        if families
            .iter()
            .any(|f| f.values.len() != len || f.variances.len() != len)
        {
            return Err(PoeError::InvalidRecord("families have different lengths".into()));
        }
        if kind == RecordKind::CrossState && families.len() != 2 {
            return Err(PoeError::InvalidRecord("cross-state records need exactly two families".into()));
        }
        let m = families.len() as f64;
        let values = (0..len)
            .map(|k| families.iter().map(|f| f.values[k]).sum::<f64>() / m)
            .collect();
        let variances = (0..len)
            .map(|k| families.iter().map(|f| f.variances[k]).sum::<f64>() / (m * m))
            .collect();
        Ok(Self {
            kind,
            n_max: len - 1,
            shots,
            values,
            variances,
            families,
            metadata,
        })
    }

    pub fn is_exact(&self) -> bool {
        self.shots == 0
    }

    /// Builds a record from already-combined values (e.g. hand-entered data).
    pub fn from_values(kind: RecordKind, values: Vec<f64>) -> Result<Self> {
        Self::from_families(kind, 0, vec![Family::exact("values", values, 1.0)], RecordMetadata::default())
    }
}

/// Evolves `start` through the schedule and reads each `rho_k` against `reference`.
fn exact_family(
    schedule: &ChannelSchedule<'_>,
    start: &DensityVector,
    reference: &ProbeState,
    noise: &NoiseSpec,
    n_max: usize,
) -> Result<Vec<f64>> {
    let spam = noise.spam.as_ref();
    let mut rho = match spam {
        Some(s) => s.prepare(start, reference.n_qubits)?,
        None => start.clone(),
    };
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(reference.measured_overlap(&rho, spam)?);
    for k in 0..n_max {
        rho = apply(&*schedule.channel(k)?, &rho)?;
        out.push(reference.measured_overlap(&rho, spam)?);
    }
    Ok(out)
}

fn sample_family(
    label: String,
    exact: &[f64],
    reference: &ProbeState,
    plan: &Sampling,
    stream: u64,
) -> Result<Family> {
    let (event_scale, indicator) = reference.frame.event_scale();
    let scale = if indicator { event_scale } else { 1.0 };
    let mut rng = ChaCha20Rng::seed_from_u64(plan.seed);
    rng.set_stream(stream);
    let successes = exact
        .iter()
        .map(|&v| {
            let p = (v / scale).clamp(0.0, 1.0);
            let dist = Binomial::new(plan.shots, p)
                .map_err(|e| PoeError::InvalidArgument(format!("binomial sampling: {e}")))?;
            Ok(dist.sample(&mut rng))
        })
        .collect::<Result<Vec<u64>>>()?;
    Family::from_counts(label, successes, plan.shots, scale)
}

fn run_family(
    label: &str,
    schedule: &ChannelSchedule<'_>,
    start: &DensityVector,
    reference: &ProbeState,
    noise: &NoiseSpec,
    plan: &Sampling,
    stream: u64,
) -> Result<Family> {
    let exact = exact_family(schedule, start, reference, noise, plan.n_max)?;
    if plan.is_exact() {
        let (scale, indicator) = reference.frame.event_scale();
        Ok(Family::exact(label, exact, if indicator { scale } else { 1.0 }))
    } else {
        sample_family(label.to_string(), &exact, reference, plan, stream)
    }
}

fn check_plan(circuit: &CircuitSpec, state: &ProbeState, plan: &Sampling) -> Result<()> {
    if plan.n_max < 1 {
        return Err(PoeError::InvalidArgument("n_max must be at least 1".into()));
    }
    if state.n_qubits != circuit.n_qubits {
        return Err(PoeError::DimensionMismatch {
            expected: circuit.n_qubits,
            actual: state.n_qubits,
        });
    }
    Ok(())
}

fn metadata(states: Vec<String>, circuit: &CircuitSpec, noise: &NoiseSpec, plan: &Sampling) -> RecordMetadata {
    RecordMetadata {
        states,
        circuit: Some(circuit.clone()),
        noise: Some(noise.clone()),
        seed: (!plan.is_exact()).then_some(plan.seed),
        subsystem_mode: None,
    }
}

/// Recurrence probabilities `R_k = <rho0|rho_k>`, `rho_k` being the state after
/// `k` drive cycles.
pub fn run_recurrence(
    circuit: &CircuitSpec,
    noise: &NoiseSpec,
    rho0: &ProbeState,
    plan: &Sampling,
) -> Result<PoeRecord> {
    check_plan(circuit, rho0, plan)?;
    let schedule = ChannelSchedule::new(circuit, noise)?;
    let family = run_family("recurrence", &schedule, &rho0.state, rho0, noise, plan, 0)?;
    PoeRecord::from_families(
        RecordKind::Recurrence,
        plan.shots,
        vec![family],
        metadata(vec![rho0.label.clone()], circuit, noise, plan),
    )
}

/// Two-way transition probabilities between pure states `a` and `b`.
///
/// The forward family starts in `a` and is read out in `b`'s basis; the
/// reverse family starts in `b` and is read out in `a`'s basis.
pub fn run_cross_state(
    circuit: &CircuitSpec,
    noise: &NoiseSpec,
    a: &ProbeState,
    b: &ProbeState,
    plan: &Sampling,
) -> Result<PoeRecord> {
    check_plan(circuit, a, plan)?;
    check_plan(circuit, b, plan)?;
    for s in [a, b] {
        if !s.state.is_pure() {
            return Err(PoeError::InvalidState(format!(
                "cross-state probes must be pure; '{}' is mixed",
                s.label
            )));
        }
    }
    let schedule = ChannelSchedule::new(circuit, noise)?;
    let forward = run_family("forward", &schedule, &a.state, b, noise, plan, 0)?;
    let reverse = run_family("reverse", &schedule, &b.state, a, noise, plan, 1)?;
    PoeRecord::from_families(
        RecordKind::CrossState,
        plan.shots,
        vec![forward, reverse],
        metadata(vec![a.label.clone(), b.label.clone()], circuit, noise, plan),
    )
}

/// Recurrence of `rho_pure ⊗ I/2^(N-d)`, the pure part occupying the leading qubits.
pub fn run_subsystem(
    circuit: &CircuitSpec,
    noise: &NoiseSpec,
    pure_part: &ProbeState,
    plan: &Sampling,
    mode: SubsystemMode,
) -> Result<PoeRecord> {
    let n = circuit.n_qubits;
    let d = pure_part.n_qubits;
    if d > n {
        return Err(PoeError::InvalidArgument(format!(
            "probe covers {d} qubits but the register has {n}"
        )));
    }
    if !pure_part.state.is_pure() {
        return Err(PoeError::InvalidState("subsystem probe must be pure".into()));
    }
    let mixed = pure_part.with_mixed_ancillas(n - d);
    check_plan(circuit, &mixed, plan)?;
    let schedule = ChannelSchedule::new(circuit, noise)?;
    let families = match mode {
        SubsystemMode::DirectMixed => {
            vec![run_family("mixed", &schedule, &mixed.state, &mixed, noise, plan, 0)?]
        }
        SubsystemMode::EmulatedAverage => {
            let anc_dim = 1usize << (n - d);
            (0..anc_dim)
                .map(|j| {
                    let start = pure_part.state.tensor(&DensityVector::basis(anc_dim, j)?);
                    run_family(&format!("prep_{j}"), &schedule, &start, &mixed, noise, plan, j as u64)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let mut meta = metadata(vec![mixed.label.clone()], circuit, noise, plan);
    meta.subsystem_mode = Some(mode);
    PoeRecord::from_families(RecordKind::Subsystem, plan.shots, families, meta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesKind {
    /// `S_n = <rho0|F^n|rho0>`: non-negative, monotone, exponentially decaying.
    S,
    /// `T_n = <b|F^n|a>`: exponentially decaying, no sign constraint.
    T,
}

/// `S_n` (or `T_n`) for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnSeries {
    pub kind: SeriesKind,
    pub values: Vec<f64>,
    pub variances: Vec<f64>,
    pub weights_used: Vec<Vec<f64>>,
}

impl SnSeries {
    /// Builds a series directly from values, for synthetic data or tests.
    pub fn from_values(kind: SeriesKind, values: Vec<f64>, variances: Option<Vec<f64>>) -> Result<Self> {
        let variances = variances.unwrap_or_else(|| vec![0.0; values.len()]);
        if variances.len() != values.len() {
            return Err(PoeError::InvalidArgument("values and variances differ in length".into()));
        }
        Ok(Self {
            kind,
            values,
            variances,
            weights_used: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Cycle counts `1..=len`.
    pub fn ns(&self) -> impl Iterator<Item = usize> {
        1..=self.values.len()
    }

    /// `S_n` for 1-based `n`.
    pub fn at(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    pub fn variance_at(&self, n: usize) -> f64 {
        self.variances[n - 1]
    }

    pub fn is_exact(&self) -> bool {
        self.variances.iter().all(|&v| v == 0.0)
    }
}

/// `(S_n, Var S_n)` from a record, treating the points as independent.
pub fn sn_from_record(rec: &PoeRecord, n: usize) -> Result<(f64, f64)> {
    if n > rec.n_max {
        return Err(PoeError::InvalidArgument(format!(
            "n = {n} exceeds the record length (n_max = {})",
            rec.n_max
        )));
    }
    let w = binomial_weights(n)?;
    let value = w.iter().zip(&rec.values).map(|(w, r)| w * r).sum();
    let variance = w.iter().zip(&rec.variances).map(|(w, v)| w * w * v).sum();
    Ok((value, variance))
}

/// `S_n` (or `T_n` for cross-state records) for every `n = 1..=n_max`.
pub fn sn_series(rec: &PoeRecord) -> Result<SnSeries> {
    let kind = match rec.kind {
        RecordKind::CrossState => SeriesKind::T,
        RecordKind::Recurrence | RecordKind::Subsystem => SeriesKind::S,
    };
    let mut values = Vec::with_capacity(rec.n_max);
    let mut variances = Vec::with_capacity(rec.n_max);
    let mut weights_used = Vec::with_capacity(rec.n_max);
    for n in 1..=rec.n_max {
        let (v, var) = sn_from_record(rec, n)?;
        values.push(v);
        variances.push(var);
        weights_used.push(binomial_weights(n)?);
    }
    Ok(SnSeries {
        kind,
        values,
        variances,
        weights_used,
    })
}

/// A point where `S_n < -tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityViolation {
    pub n: usize,
    pub value: f64,
}

/// Every `n` with `S_n < -tol`. Only defined for `S` series.
pub fn inequality_check(s: &SnSeries, tol: f64) -> Result<Vec<InequalityViolation>> {
    if s.kind != SeriesKind::S {
        return Err(PoeError::UnsupportedSeries(
            "the positivity inequality holds for S_n only, not cross-state T_n".into(),
        ));
    }
    Ok(s.ns()
        .zip(&s.values)
        .filter(|(_, &v)| v < -tol)
        .map(|(n, &value)| InequalityViolation { n, value })
        .collect())
}

/// Positivity tolerance used for exact series.
pub const INEQUALITY_TOL: f64 = VALIDATION_TOL;
