//! Exponential fits of S_n, shape checks and the POE verdict.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{PoeError, Result};
use crate::poe::{InequalityViolation, SnSeries};

/// Exact-mode shape tolerance.
pub const EXACT_SHAPE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualUnits {
    /// `(S_n - fit) * 1000`.
    #[default]
    Absolute,
    /// `(S_n - fit) / fit * 1000`.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Inclusive `[n_lo, n_hi]`; `None` fits every point.
    pub window: Option<[usize; 2]>,
    pub alpha: f64,
    pub residual_units: ResidualUnits,
    /// Exact series carry no shot noise, so the chi-square test is replaced by
    /// a bound on the largest residual (in `residual_units`).
    pub exact_residual_tol_ppt: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            window: None,
            alpha: 0.01,
            residual_units: ResidualUnits::Absolute,
            exact_residual_tol_ppt: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "consistent_with_POE")]
    ConsistentWithPoe,
    #[serde(rename = "POE_sensitive_error_detected")]
    PoeSensitiveErrorDetected,
    #[serde(rename = "insufficient_data")]
    InsufficientData,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::ConsistentWithPoe => "consistent_with_POE",
            Verdict::PoeSensitiveErrorDetected => "POE_sensitive_error_detected",
            Verdict::InsufficientData => "insufficient_data",
        }
    }
}

/// Straight-line fit of `ln S_n` against `n`.
///
/// `residuals_ppt[i]` belongs to cycle count `points[i]`; points outside the
/// window are not listed, points inside it that were cut are in `excluded`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub fit_window: [usize; 2],
    pub points: Vec<usize>,
    pub excluded: Vec<usize>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub intercept_stderr: Option<f64>,
    pub residual_units: ResidualUnits,
    pub residuals_ppt: Vec<f64>,
    pub max_abs_residual_ppt: Option<f64>,
    pub exact: bool,
    pub chi2: Option<f64>,
    pub dof: usize,
    pub p_value: Option<f64>,
    pub alpha: f64,
    pub verdict: Verdict,
}

impl FitReport {
    /// `exp(intercept + slope n)`, if a fit exists.
    pub fn predict(&self, n: usize) -> Option<f64> {
        Some((self.intercept? + self.slope? * n as f64).exp())
    }

    /// Residual for cycle count `n`, if it took part in the fit.
    pub fn residual_at(&self, n: usize) -> Option<f64> {
        self.points
            .iter()
            .position(|&p| p == n)
            .map(|i| self.residuals_ppt[i])
    }
}

struct Line {
    slope: f64,
    intercept: f64,
    slope_var: f64,
    intercept_var: f64,
}

/// Least squares on centered abscissae. With `weights` the variances are the
/// known-error formulas; without them they come from the residual scatter.
fn fit_line(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Line {
    let m = x.len();
    let w: Vec<f64> = match weights {
        Some(w) => w.to_vec(),
        None => vec![1.0; m],
    };
    let sw: f64 = w.iter().sum();
    let xb = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let yb = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - xb).powi(2)).sum();
    let sxy: f64 = (0..m).map(|i| w[i] * (x[i] - xb) * (y[i] - yb)).sum();
    let slope = sxy / sxx;
    let intercept = yb - slope * xb;
    let (slope_var, intercept_var) = if weights.is_some() {
        (1.0 / sxx, 1.0 / sw + xb * xb / sxx)
    } else {
        let rss: f64 = (0..m)
            .map(|i| (y[i] - intercept - slope * x[i]).powi(2))
            .sum();
        let s2 = rss / (m - 2) as f64;
        (s2 / sxx, s2 * (1.0 / m as f64 + xb * xb / sxx))
    };
    Line {
        slope,
        intercept,
        slope_var,
        intercept_var,
    }
}

/// Fits `ln S_n = intercept + slope n` over the window.
///
/// Points with `S_n <= 0` or `S_n < 3 sigma` are dropped. Sampled series use
/// weights `S_n^2 / Var(S_n)` and get a chi-square test; exact series are fit
/// unweighted and judged by their largest residual.
pub fn fit_exponential(s: &SnSeries, opts: &FitOptions) -> Result<FitReport> {
    if s.is_empty() {
        return Err(PoeError::InsufficientData("empty series".into()));
    }
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(PoeError::InvalidArgument(format!("alpha must lie in (0, 1), got {}", opts.alpha)));
    }
    let [lo, hi] = opts.window.unwrap_or([1, s.len()]);
    if lo < 1 || lo > hi || hi > s.len() {
        return Err(PoeError::InvalidArgument(format!(
            "fit window [{lo}, {hi}] is outside 1..={}",
            s.len()
        )));
    }
    let exact = s.is_exact();
    let (mut points, mut excluded) = (Vec::new(), Vec::new());
    for n in lo..=hi {
        let (v, var) = (s.at(n), s.variance_at(n));
        let usable = v > 0.0 && v.is_finite() && (exact || (var > 0.0 && v >= 3.0 * var.sqrt()));
        if usable {
            points.push(n);
        } else {
            excluded.push(n);
        }
    }
    let mut report = FitReport {
        fit_window: [lo, hi],
        points: Vec::new(),
        excluded,
        slope: None,
        intercept: None,
        slope_stderr: None,
        intercept_stderr: None,
        residual_units: opts.residual_units,
        residuals_ppt: Vec::new(),
        max_abs_residual_ppt: None,
        exact,
        chi2: None,
        dof: 0,
        p_value: None,
        alpha: opts.alpha,
        verdict: Verdict::InsufficientData,
    };
    if points.len() < 3 {
        report.excluded.extend(points);
        report.excluded.sort_unstable();
        return Ok(report);
    }
    let x: Vec<f64> = points.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = points.iter().map(|&n| s.at(n).ln()).collect();
    let weights: Option<Vec<f64>> =
        (!exact).then(|| points.iter().map(|&n| s.at(n).powi(2) / s.variance_at(n)).collect());
    let line = fit_line(&x, &y, weights.as_deref());

    let fitted: Vec<f64> = x.iter().map(|&n| (line.intercept + line.slope * n).exp()).collect();
    let residuals_ppt: Vec<f64> = points
        .iter()
        .zip(&fitted)
        .map(|(&n, &f)| match opts.residual_units {
            ResidualUnits::Absolute => (s.at(n) - f) * 1e3,
            ResidualUnits::Relative => (s.at(n) - f) / f * 1e3,
        })
        .collect();
    let max_abs = residuals_ppt.iter().fold(0.0_f64, |a, r| a.max(r.abs()));
    let dof = points.len() - 2;

    report.verdict = if exact {
        if max_abs > opts.exact_residual_tol_ppt {
            Verdict::PoeSensitiveErrorDetected
        } else {
            Verdict::ConsistentWithPoe
        }
    } else {
        let chi2: f64 = points
            .iter()
            .zip(&fitted)
            .map(|(&n, &f)| (s.at(n) - f).powi(2) / s.variance_at(n))
            .sum();
        let dist = ChiSquared::new(dof as f64)
            .map_err(|e| PoeError::InvalidArgument(format!("chi-square distribution: {e}")))?;
        let p = dist.sf(chi2);
        report.chi2 = Some(chi2);
        report.p_value = Some(p);
        if p < opts.alpha {
            Verdict::PoeSensitiveErrorDetected
        } else {
            Verdict::ConsistentWithPoe
        }
    };
    report.points = points;
    report.slope = Some(line.slope);
    report.intercept = Some(line.intercept);
    report.slope_stderr = Some(line.slope_var.sqrt());
    report.intercept_stderr = Some(line.intercept_var.sqrt());
    report.residuals_ppt = residuals_ppt;
    report.max_abs_residual_ppt = Some(max_abs);
    report.dof = dof;
    Ok(report)
}

/// Per-n differences `(measured - reference) * 1000` and their standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub diff_ppt: Vec<f64>,
    pub sigma_ppt: Vec<f64>,
}

impl Comparison {
    pub fn max_abs_diff_ppt(&self) -> f64 {
        self.diff_ppt.iter().fold(0.0, |a, d| a.max(d.abs()))
    }
}

pub fn compare_to_reference(measured: &SnSeries, reference: &SnSeries) -> Result<Comparison> {
    if measured.len() != reference.len() {
        return Err(PoeError::DimensionMismatch {
            expected: reference.len(),
            actual: measured.len(),
        });
    }
    let diff_ppt = measured
        .values
        .iter()
        .zip(&reference.values)
        .map(|(m, r)| (m - r) * 1e3)
        .collect();
    let sigma_ppt = measured
        .variances
        .iter()
        .zip(&reference.variances)
        .map(|(a, b)| (a + b).sqrt() * 1e3)
        .collect();
    Ok(Comparison { diff_ppt, sigma_ppt })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    /// Fixed tolerance, or `None` when each difference uses 3 of its own sigmas.
    pub tol: Option<f64>,
    /// `n` with `S_{n+1} - S_n > tol`.
    pub monotonicity: Vec<usize>,
    /// `n` with `S_{n+1} - 2 S_n + S_{n-1} < -tol`.
    pub second_difference: Vec<usize>,
}

impl ShapeReport {
    pub fn is_clean(&self) -> bool {
        self.monotonicity.is_empty() && self.second_difference.is_empty()
    }
}

/// First- and second-difference checks. With `tol = None` exact series use
/// 1e-10 and sampled series 3 combined standard deviations per difference.
pub fn shape_check(s: &SnSeries, tol: Option<f64>) -> Result<ShapeReport> {
    if s.len() < 3 {
        return Err(PoeError::InsufficientData(format!(
            "shape check needs at least 3 points, got {}",
            s.len()
        )));
    }
    let tol = tol.or(s.is_exact().then_some(EXACT_SHAPE_TOL));
    let v = &s.values;
    let var = &s.variances;
    let bound = |combined: f64| tol.unwrap_or(3.0 * combined.sqrt());
    let monotonicity = (0..v.len() - 1)
        .filter(|&i| v[i + 1] - v[i] > bound(var[i] + var[i + 1]))
        .map(|i| i + 1)
        .collect();
    let second_difference = (1..v.len() - 1)
        .filter(|&i| {
            v[i + 1] - 2.0 * v[i] + v[i - 1] < -bound(var[i + 1] + 4.0 * var[i] + var[i - 1])
        })
        .map(|i| i + 1)
        .collect();
    Ok(ShapeReport {
        tol,
        monotonicity,
        second_difference,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub signature: String,
    pub n: Vec<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoeVerdict {
    pub verdict: Verdict,
    pub evidence: Vec<Evidence>,
}

/// Detected if the fit rejects a single exponential, the shape is wrong, or
/// S_n goes negative. A fit without enough points and no other finding leaves
/// the decay law unassessed.
pub fn verdict(
    fit: Option<&FitReport>,
    shape: Option<&ShapeReport>,
    ineq: Option<&[InequalityViolation]>,
    alpha: f64,
) -> Result<PoeVerdict> {
    if fit.is_none() && shape.is_none() && ineq.is_none() {
        return Err(PoeError::InvalidArgument("verdict needs at least one diagnostic".into()));
    }
    let mut evidence = Vec::new();
    if let Some(fit) = fit {
        let fired = match fit.p_value {
            Some(p) => p < alpha,
            None => fit.verdict == Verdict::PoeSensitiveErrorDetected,
        };
        if fired {
            let detail = match (fit.p_value, fit.chi2) {
                (Some(p), Some(chi2)) => {
                    format!("chi2 = {chi2:.4} on {} dof, p = {p:.3e} < {alpha}", fit.dof)
                }
                _ => format!(
                    "max |residual| = {:.4e} ppt in an exact series",
                    fit.max_abs_residual_ppt.unwrap_or(0.0)
                ),
            };
            let worst = fit
                .points
                .iter()
                .zip(&fit.residuals_ppt)
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map(|(&n, _)| vec![n])
                .unwrap_or_default();
            evidence.push(Evidence {
                signature: "exponential fit".into(),
                n: worst,
                detail,
            });
        }
    }
    if let Some(shape) = shape {
        if !shape.monotonicity.is_empty() {
            evidence.push(Evidence {
                signature: "monotonic decay".into(),
                n: shape.monotonicity.clone(),
                detail: "S_{n+1} > S_n".into(),
            });
        }
        if !shape.second_difference.is_empty() {
            evidence.push(Evidence {
                signature: "second difference".into(),
                n: shape.second_difference.clone(),
                detail: "S_{n+1} - 2 S_n + S_{n-1} < 0".into(),
            });
        }
    }
    if let Some(ineq) = ineq {
        if !ineq.is_empty() {
            let worst = ineq.iter().map(|v| v.value).fold(f64::INFINITY, f64::min);
            evidence.push(Evidence {
                signature: "positivity".into(),
                n: ineq.iter().map(|v| v.n).collect(),
                detail: format!("S_n < 0, most negative {worst:.4e}"),
            });
        }
    }
    let verdict = if !evidence.is_empty() {
        Verdict::PoeSensitiveErrorDetected
    } else if fit.is_some_and(|f| f.verdict == Verdict::InsufficientData) {
        Verdict::InsufficientData
    } else {
        Verdict::ConsistentWithPoe
    };
    Ok(PoeVerdict { verdict, evidence })
}
