use poe_web::{cross_state_json, decay_curve_json, spectrum_json};
use serde_json::Value;

#[test]
fn noiseless_curve_is_consistent() {
    let v: Value = serde_json::from_str(&decay_curve_json(1.0, 2.4, "00", "none", 0.0, 35).unwrap()).unwrap();
    assert_eq!(v["verdict"], "consistent_with_POE");
    assert_eq!(v["s"].as_array().unwrap().len(), 35);
    assert!((v["slope"].as_f64().unwrap() - 0.8988767336281794f64.ln()).abs() < 1e-9);
}

#[test]
fn damping_is_detected() {
    let v: Value = serde_json::from_str(&decay_curve_json(1.0, 2.4, "00", "damping", 5.0, 35).unwrap()).unwrap();
    assert_eq!(v["verdict"], "POE_sensitive_error_detected");
    assert!(!v["evidence"].as_array().unwrap().is_empty());
}

#[test]
fn spectrum_reports_lambda_max() {
    let v: Value = serde_json::from_str(&spectrum_json(1.0, 2.4, "00").unwrap()).unwrap();
    assert!((v["lambda_max"].as_f64().unwrap() - 0.8988767336281794).abs() < 1e-12);
}

#[test]
fn cross_state_has_both_families() {
    let v: Value = serde_json::from_str(&cross_state_json(1.0, 2.4, "00", "+0", 20).unwrap()).unwrap();
    assert_eq!(v["t"].as_array().unwrap().len(), 20);
    assert_eq!(v["forward"].as_array().unwrap().len(), 21);
}

#[test]
fn bad_inputs_are_errors() {
    assert!(decay_curve_json(1.0, 2.4, "00", "gremlins", 0.0, 35).is_err());
    assert!(decay_curve_json(1.0, 2.4, "0x", "none", 0.0, 35).is_err());
    assert!(cross_state_json(1.0, 2.4, "00", "+0", 1000).is_err());
}
