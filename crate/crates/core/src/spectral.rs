//! The positive operator `F = 1/2 - (U + U^dagger)/4` in Liouville space.
//!
//! `<rho0|F^n|rho0> = sum_j lambda_j^n |<rho0|j>|^2`, so the largest eigenvalue
//! visible to `rho0` fixes the asymptotic slope of `ln S_n`. This module builds
//! `F`, diagonalizes it, and also evaluates `F^n` matrix elements by repeated
//! application, which serves as the exact reference for the measured series.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{PoeError, Result};
use crate::liouville::{
    c, hermiticity_error, unitarity_error, ComplexMatrix, DensityVector, Superoperator, C64,
    VALIDATION_TOL,
};

/// Eigenvalues whose overlap with the initial state is below this are ignored
/// when picking the dominant mode.
pub const OVERLAP_CUTOFF: f64 = 1e-12;
/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Eigenvalues at or below this contribute nothing for `n >= 1`.
const ZERO_EIGENVALUE: f64 = 1e-12;

/// Builds `F` from the Liouville representation of a unitary.
pub fn build_f(u_super: &Superoperator) -> Result<Superoperator> {
    let u = u_super.matrix();
    let err = unitarity_error(u);
    if err > VALIDATION_TOL {
        return Err(PoeError::NotUnitary(err));
    }
    let n2 = u.nrows();
    let f = ComplexMatrix::identity(n2, n2) * c(0.5, 0.0) - (u + u.adjoint()) * c(0.25, 0.0);
    Superoperator::from_matrix(u_super.dim(), f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralStatus {
    /// A positive eigenvalue with non-negligible overlap sets the decay rate.
    Decaying,
    /// Every visible eigenvalue is zero: `S_n = 0` for all `n >= 1`.
    NoDecayMode,
    /// No eigenvalue has overlap above the cutoff.
    Invisible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenCluster {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    /// Summed `|<rho0|j>|^2` over the cluster.
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Eigenvalues of `F`, descending.
    pub eigenvalues: Vec<f64>,
    /// `|<rho0|j>|^2`, aligned with `eigenvalues`.
    pub overlaps: Vec<f64>,
    pub clusters: Vec<EigenCluster>,
    pub status: SpectralStatus,
    pub lambda_max: Option<f64>,
    pub overlap_max: Option<f64>,
    pub lambda_max2: Option<f64>,
    pub overlap_max2: Option<f64>,
    /// `ln(lambda_max)`: slope of `ln S_n` against `n`.
    pub predicted_slope: Option<f64>,
    /// `ln` of the dominant cluster's overlap mass.
    pub predicted_offset: Option<f64>,
    /// Cycle count beyond which the dominant mode outweighs the next one.
    pub n_star: Option<f64>,
}

impl SpectralReport {
    /// `sum_j lambda_j^n |<rho0|j>|^2`.
    pub fn eigen_expansion(&self, n: u32) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.overlaps)
            .map(|(l, o)| l.powi(n as i32) * o)
            .sum()
    }

    /// `n_star` rounded up, or 0 when undefined.
    pub fn n_star_cycles(&self) -> usize {
        self.n_star.map(|n| n.ceil().max(0.0) as usize).unwrap_or(0)
    }
}

/// Diagonalizes `F` and locates the dominant and sub-dominant modes visible from `rho0`.
pub fn spectral_report(
    u_super: &Superoperator,
    rho0: &DensityVector,
    overlap_cutoff: f64,
) -> Result<SpectralReport> {
    if rho0.dim() != u_super.dim() {
        return Err(PoeError::DimensionMismatch {
            expected: u_super.dim(),
            actual: rho0.dim(),
        });
    }
    let f = build_f(u_super)?;
    let eig = f.matrix().clone().symmetric_eigen();
    let projections = eig.eigenvectors.adjoint() * rho0.amps();
    let mut pairs: Vec<(f64, f64)> = eig
        .eigenvalues
        .iter()
        .zip(projections.iter())
        .map(|(&l, p)| (l, p.norm_sqr()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut clusters: Vec<EigenCluster> = Vec::new();
    let mut prev = f64::INFINITY;
    for &(l, o) in &pairs {
        match clusters.last_mut() {
            Some(cl) if prev - l <= DEGENERACY_TOL => {
                cl.multiplicity += 1;
                cl.overlap += o;
            }
            _ => clusters.push(EigenCluster {
                eigenvalue: l,
                multiplicity: 1,
                overlap: o,
            }),
        }
        prev = l;
    }

    let mut visible = clusters.iter().filter(|cl| cl.overlap > overlap_cutoff);
    let first = visible.next();
    let second = visible.next();
    let mut report = SpectralReport {
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        overlaps: pairs.iter().map(|p| p.1).collect(),
        clusters: clusters.clone(),
        status: SpectralStatus::Invisible,
        lambda_max: None,
        overlap_max: None,
        lambda_max2: None,
        overlap_max2: None,
        predicted_slope: None,
        predicted_offset: None,
        n_star: None,
    };
    let Some(top) = first else {
        return Ok(report);
    };
    report.lambda_max = Some(top.eigenvalue);
    report.overlap_max = Some(top.overlap);
    if let Some(next) = second {
        report.lambda_max2 = Some(next.eigenvalue);
        report.overlap_max2 = Some(next.overlap);
    }
    if top.eigenvalue <= ZERO_EIGENVALUE {
        report.status = SpectralStatus::NoDecayMode;
        return Ok(report);
    }
    report.status = SpectralStatus::Decaying;
    report.predicted_slope = Some(top.eigenvalue.ln());
    report.predicted_offset = Some(top.overlap.ln());
    report.n_star = Some(match second {
        Some(next) if next.eigenvalue > ZERO_EIGENVALUE => {
            let amp_ratio = (next.overlap / top.overlap).sqrt();
            (amp_ratio.ln() / (top.eigenvalue / next.eigenvalue).ln()).max(0.0)
        }
        _ => 0.0,
    });
    Ok(report)
}

fn overlap(a: &DVector<C64>, b: &DVector<C64>) -> Result<f64> {
    let z = a.dotc(b);
    if z.im.abs() > VALIDATION_TOL {
        return Err(PoeError::ComplexOverlap(z.im));
    }
    Ok(z.re)
}

/// `<b|F^n|a>` for `n = 0..=n_max`, by repeated application of `F`.
fn matrix_elements(f: &Superoperator, a: &DensityVector, b: &DensityVector, n_max: usize) -> Result<Vec<f64>> {
    for s in [a, b] {
        if s.dim() != f.dim() {
            return Err(PoeError::DimensionMismatch {
                expected: f.dim(),
                actual: s.dim(),
            });
        }
    }
    let mut v = a.amps().clone();
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(overlap(b.amps(), &v)?);
    for _ in 0..n_max {
        v = f.act(&v);
        out.push(overlap(b.amps(), &v)?);
    }
    Ok(out)
}

/// `<rho0|F^n|rho0>` for `n = 0..=n_max`.
pub fn direct_sn_series(u_super: &Superoperator, rho0: &DensityVector, n_max: usize) -> Result<Vec<f64>> {
    matrix_elements(&build_f(u_super)?, rho0, rho0, n_max)
}

/// `<rho0|F^n|rho0>`.
pub fn direct_sn(u_super: &Superoperator, rho0: &DensityVector, n: usize) -> Result<f64> {
    Ok(direct_sn_series(u_super, rho0, n)?[n])
}

fn require_pure(s: &DensityVector, which: &str) -> Result<()> {
    if s.is_pure() {
        Ok(())
    } else {
        Err(PoeError::InvalidState(format!("{which} must be a pure state")))
    }
}

/// `<b|F^n|a>` for `n = 0..=n_max`; both states must be pure.
pub fn direct_tn_series(
    u_super: &Superoperator,
    a: &DensityVector,
    b: &DensityVector,
    n_max: usize,
) -> Result<Vec<f64>> {
    require_pure(a, "a")?;
    require_pure(b, "b")?;
    matrix_elements(&build_f(u_super)?, a, b, n_max)
}

/// `<b|F^n|a>`.
pub fn direct_tn(u_super: &Superoperator, a: &DensityVector, b: &DensityVector, n: usize) -> Result<f64> {
    Ok(direct_tn_series(u_super, a, b, n)?[n])
}

/// `max |F - F^dagger|`.
pub fn f_hermiticity_error(f: &Superoperator) -> f64 {
    hermiticity_error(f.matrix())
}
