//! wasm-bindgen entry points for the browser demo in `www/`.
//!
//! Each export returns a JSON string; the page draws it on a canvas.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use poe_core::circuits::{circuit_with_angles, cycle_unitary};
use poe_core::diagnostics::{fit_exponential, shape_check, verdict, FitOptions};
use poe_core::liouville::unitary_superop;
use poe_core::noise::NoiseSpec;
use poe_core::poe::{inequality_check, run_cross_state, run_recurrence, sn_series, ProbeState, Sampling, INEQUALITY_TOL};
use poe_core::spectral::{spectral_report, OVERLAP_CUTOFF};

const MAX_CYCLES: usize = 200;

#[derive(Serialize)]
struct Curve {
    n: Vec<usize>,
    s: Vec<f64>,
    slope: Option<f64>,
    intercept: Option<f64>,
    residuals_ppt: Vec<f64>,
    fit_points: Vec<usize>,
    max_abs_residual_ppt: Option<f64>,
    verdict: &'static str,
    evidence: Vec<String>,
}

#[derive(Serialize)]
struct CrossCurve {
    n: Vec<usize>,
    t: Vec<f64>,
    forward: Vec<f64>,
    reverse: Vec<f64>,
}

fn noise_from(kind: &str, strength: f64) -> Result<NoiseSpec, String> {
    Ok(match kind {
        "none" => NoiseSpec::none(),
        "damping" => NoiseSpec::amplitude_damping(strength),
        "miscalibration" => NoiseSpec::miscalibration(strength),
        "drift" => NoiseSpec::drift(strength),
        other => return Err(format!("unknown noise kind '{other}'")),
    })
}

fn check_cycles(n_max: usize) -> Result<(), String> {
    if (3..=MAX_CYCLES).contains(&n_max) {
        Ok(())
    } else {
        Err(format!("n_max must lie in 3..={MAX_CYCLES}"))
    }
}

/// Exact `S_n` of the two-qubit drive with its exponential fit and verdict.
pub fn decay_curve_json(theta: f64, phi: f64, state: &str, noise: &str, strength: f64, n_max: usize) -> Result<String, String> {
    check_cycles(n_max)?;
    let circuit = circuit_with_angles(theta, phi, 0);
    let noise = noise_from(noise, strength)?;
    let probe = ProbeState::from_label(state).map_err(|e| e.to_string())?;
    let rec = run_recurrence(&circuit, &noise, &probe, &Sampling::exact(n_max)).map_err(|e| e.to_string())?;
    let s = sn_series(&rec).map_err(|e| e.to_string())?;
    let fit = fit_exponential(&s, &FitOptions::default()).map_err(|e| e.to_string())?;
    let shape = shape_check(&s, None).map_err(|e| e.to_string())?;
    let ineq = inequality_check(&s, INEQUALITY_TOL).map_err(|e| e.to_string())?;
    let v = verdict(Some(&fit), Some(&shape), Some(&ineq), fit.alpha).map_err(|e| e.to_string())?;
    let curve = Curve {
        n: s.ns().collect(),
        s: s.values.clone(),
        slope: fit.slope,
        intercept: fit.intercept,
        residuals_ppt: fit.residuals_ppt.clone(),
        fit_points: fit.points.clone(),
        max_abs_residual_ppt: fit.max_abs_residual_ppt,
        verdict: v.verdict.as_str(),
        evidence: v
            .evidence
            .iter()
            .map(|e| format!("{}: {}", e.signature, e.detail))
            .collect(),
    };
    serde_json::to_string(&curve).map_err(|e| e.to_string())
}

/// Eigenvalues of `F` and their overlaps with the chosen state.
pub fn spectrum_json(theta: f64, phi: f64, state: &str) -> Result<String, String> {
    let circuit = circuit_with_angles(theta, phi, 0);
    let u = cycle_unitary(&circuit).and_then(|u| unitary_superop(&u)).map_err(|e| e.to_string())?;
    let probe = ProbeState::from_label(state).map_err(|e| e.to_string())?;
    let rep = spectral_report(&u, &probe.state, OVERLAP_CUTOFF).map_err(|e| e.to_string())?;
    serde_json::to_string(&rep).map_err(|e| e.to_string())
}

/// Symmetrized cross-state series between two labels, with both raw families.
pub fn cross_state_json(theta: f64, phi: f64, a: &str, b: &str, n_max: usize) -> Result<String, String> {
    check_cycles(n_max)?;
    let circuit = circuit_with_angles(theta, phi, 0);
    let pa = ProbeState::from_label(a).map_err(|e| e.to_string())?;
    let pb = ProbeState::from_label(b).map_err(|e| e.to_string())?;
    let rec = run_cross_state(&circuit, &NoiseSpec::none(), &pa, &pb, &Sampling::exact(n_max)).map_err(|e| e.to_string())?;
    let t = sn_series(&rec).map_err(|e| e.to_string())?;
    let curve = CrossCurve {
        n: t.ns().collect(),
        t: t.values.clone(),
        forward: rec.families[0].values.clone(),
        reverse: rec.families[1].values.clone(),
    };
    serde_json::to_string(&curve).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn decay_curve(theta: f64, phi: f64, state: &str, noise: &str, strength: f64, n_max: usize) -> Result<String, JsError> {
    decay_curve_json(theta, phi, state, noise, strength, n_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn spectrum(theta: f64, phi: f64, state: &str) -> Result<String, JsError> {
    spectrum_json(theta, phi, state).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cross_state(theta: f64, phi: f64, a: &str, b: &str, n_max: usize) -> Result<String, JsError> {
    cross_state_json(theta, phi, a, b, n_max).map_err(|e| JsError::new(&e))
}
