//! Dense Liouville-space linear algebra.
//!
//! Density matrices are flattened row-major: `amps[i * N + j] = rho[(i, j)]`.
//! Under this convention the channel `rho -> U rho U^dagger` is the matrix
//! `U ⊗ conj(U)` acting on the flattened vector, and a Kraus channel is
//! `sum_i K_i ⊗ conj(K_i)`. Every function in the crate relies on this layout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{PoeError, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Tolerance for validating states, unitarity and Kraus completeness.
pub const VALIDATION_TOL: f64 = 1e-10;
/// Agreement expected between two exact routes to the same quantity.
pub const ORACLE_TOL: f64 = 1e-12;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest absolute entry.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

fn require_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(PoeError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn require_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(PoeError::InvalidState("non-finite entry".into()))
    }
}

/// `max |U^dagger U - I|`.
pub fn unitarity_error(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &ComplexMatrix::identity(n, n))
}

pub fn hermiticity_error(m: &ComplexMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Checks the density-matrix invariants: Hermitian, unit trace, PSD.
pub fn check_density_matrix(rho: &ComplexMatrix) -> Result<()> {
    require_square(rho)?;
    require_finite(rho)?;
    let herm = hermiticity_error(rho);
    if herm > VALIDATION_TOL {
        return Err(PoeError::InvalidState(format!(
            "not Hermitian (max deviation {herm:e})"
        )));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > VALIDATION_TOL {
        return Err(PoeError::InvalidState(format!("trace {} != 1", tr.re)));
    }
    let min_ev = hermitian_eigenvalues(rho).first().copied().unwrap_or(0.0);
    if min_ev < -VALIDATION_TOL {
        return Err(PoeError::InvalidState(format!(
            "not positive semidefinite (min eigenvalue {min_ev:e})"
        )));
    }
    Ok(())
}

/// A flattened `N x N` density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector {
    dim: usize,
    amps: DVector<C64>,
}

impl DensityVector {
    /// Builds a state from raw row-major amplitudes, validating the invariants.
    pub fn from_amps(amps: Vec<C64>) -> Result<Self> {
        let rho = devectorize_amps(&amps)?;
        vectorize(&rho)
    }

    /// `|psi><psi|` for a normalized state vector.
    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > VALIDATION_TOL {
            return Err(PoeError::InvalidState(format!(
                "state vector norm^2 {norm} != 1"
            )));
        }
        let v = DVector::from_column_slice(psi);
        vectorize(&(&v * v.adjoint()))
    }

    /// Computational basis projector `|index><index|`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(PoeError::InvalidArgument(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = DVector::zeros(dim * dim);
        amps[index * dim + index] = ONE;
        Ok(Self { dim, amps })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut amps = DVector::zeros(dim * dim);
        let p = c(1.0 / dim as f64, 0.0);
        for i in 0..dim {
            amps[i * dim + i] = p;
        }
        Self { dim, amps }
    }

    pub(crate) fn from_raw(dim: usize, amps: DVector<C64>) -> Self {
        debug_assert_eq!(amps.len(), dim * dim);
        Self { dim, amps }
    }

    /// Hilbert-space dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amps(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.amps[i * self.dim + i].re).sum()
    }

    /// Diagonal of the density matrix (computational-basis populations).
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.amps[i * self.dim + i].re)
            .collect()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_pure(&self) -> bool {
        (self.purity() - 1.0).abs() <= VALIDATION_TOL
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        devectorize(self)
    }

    /// `self ⊗ other`, with `self` on the more significant qubits.
    pub fn tensor(&self, other: &DensityVector) -> DensityVector {
        let m = kron(&self.to_matrix(), &other.to_matrix());
        let dim = m.nrows();
        DensityVector::from_raw(dim, flatten(&m))
    }

    pub fn validate(&self) -> Result<()> {
        check_density_matrix(&self.to_matrix())
    }
}

fn flatten(m: &ComplexMatrix) -> DVector<C64> {
    let n = m.ncols();
    DVector::from_fn(m.nrows() * n, |idx, _| m[(idx / n, idx % n)])
}

/// Flattens a density matrix row-major after validating it.
pub fn vectorize(rho: &ComplexMatrix) -> Result<DensityVector> {
    let dim = require_square(rho)?;
    check_density_matrix(rho)?;
    Ok(DensityVector::from_raw(dim, flatten(rho)))
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &DensityVector) -> ComplexMatrix {
    let n = v.dim;
    ComplexMatrix::from_fn(n, n, |i, j| v.amps[i * n + j])
}

/// Reshapes raw amplitudes into a square matrix; fails if the length is not a perfect square.
pub fn devectorize_amps(amps: &[C64]) -> Result<ComplexMatrix> {
    let len = amps.len();
    let n = (len as f64).sqrt().round() as usize;
    if n == 0 || n * n != len {
        return Err(PoeError::NotPerfectSquare(len));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| amps[i * n + j]))
}

/// Linear map on density vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: ComplexMatrix,
    cptp: bool,
}

impl Superoperator {
    pub fn identity(dim: usize) -> Self {
        let n2 = dim * dim;
        Self {
            dim,
            matrix: ComplexMatrix::identity(n2, n2),
            cptp: true,
        }
    }

    /// Wraps an arbitrary `N^2 x N^2` matrix. The result is not treated as a channel.
    pub fn from_matrix(dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        let n2 = dim * dim;
        if matrix.nrows() != n2 || matrix.ncols() != n2 {
            return Err(PoeError::DimensionMismatch {
                expected: n2,
                actual: matrix.nrows(),
            });
        }
        require_finite(&matrix)?;
        Ok(Self {
            dim,
            matrix,
            cptp: false,
        })
    }

    /// Hilbert-space dimension `N` (the matrix is `N^2 x N^2`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Whether the map was built as a completely positive trace-preserving channel.
    pub fn is_cptp(&self) -> bool {
        self.cptp
    }

    /// Raw matrix-vector product, no validation.
    pub fn act(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.matrix * v
    }

    pub fn max_abs_diff(&self, other: &Superoperator) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }
}

/// Liouville representation of `rho -> U rho U^dagger`.
pub fn unitary_superop(u: &ComplexMatrix) -> Result<Superoperator> {
    let dim = require_square(u)?;
    require_finite(u)?;
    let err = unitarity_error(u);
    if err > VALIDATION_TOL {
        return Err(PoeError::NotUnitary(err));
    }
    Ok(Superoperator {
        dim,
        matrix: kron(u, &u.map(|z| z.conj())),
        cptp: true,
    })
}

/// Liouville representation of `rho -> sum_i K_i rho K_i^dagger`.
pub fn kraus_superop(kraus: &[ComplexMatrix]) -> Result<Superoperator> {
    let first = kraus
        .first()
        .ok_or_else(|| PoeError::InvalidArgument("empty Kraus set".into()))?;
    let dim = require_square(first)?;
    let mut completeness = ComplexMatrix::zeros(dim, dim);
    let mut matrix = ComplexMatrix::zeros(dim * dim, dim * dim);
    for k in kraus {
        if require_square(k)? != dim {
            return Err(PoeError::DimensionMismatch {
                expected: dim,
                actual: k.nrows(),
            });
        }
        require_finite(k)?;
        completeness += k.adjoint() * k;
        matrix += kron(k, &k.map(|z| z.conj()));
    }
    let err = max_abs_diff(&completeness, &ComplexMatrix::identity(dim, dim));
    if err > VALIDATION_TOL {
        return Err(PoeError::IncompleteKraus(err));
    }
    Ok(Superoperator {
        dim,
        matrix,
        cptp: true,
    })
}

/// `Re sum_i conj(a_i) b_i = Tr(A^dagger B)`, rejecting a non-negligible imaginary part.
pub fn inner(a: &DensityVector, b: &DensityVector) -> Result<f64> {
    if a.dim != b.dim {
        return Err(PoeError::DimensionMismatch {
            expected: a.dim,
            actual: b.dim,
        });
    }
    let z = a.amps.dotc(&b.amps);
    if z.im.abs() > VALIDATION_TOL {
        return Err(PoeError::ComplexOverlap(z.im));
    }
    Ok(z.re)
}

/// Applies `s` to `v`. Outputs of CPTP channels are re-validated as density matrices.
pub fn apply(s: &Superoperator, v: &DensityVector) -> Result<DensityVector> {
    if s.dim != v.dim {
        return Err(PoeError::DimensionMismatch {
            expected: s.dim,
            actual: v.dim,
        });
    }
    let out = DensityVector::from_raw(v.dim, s.act(&v.amps));
    if s.cptp {
        out.validate()?;
    }
    Ok(out)
}

/// The map that applies `first`, then `second`; its matrix is `second * first`.
pub fn compose(first: &Superoperator, second: &Superoperator) -> Result<Superoperator> {
    if first.dim != second.dim {
        return Err(PoeError::DimensionMismatch {
            expected: first.dim,
            actual: second.dim,
        });
    }
    Ok(Superoperator {
        dim: first.dim,
        matrix: &second.matrix * &first.matrix,
        cptp: first.cptp && second.cptp,
    })
}
