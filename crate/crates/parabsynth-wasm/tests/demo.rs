use parabsynth_wasm::{model_portrait, model_time1, synthesize_summary};
use serde_json::Value;

#[test]
fn portrait_is_svg_with_fixed_viewport() {
    let svg = model_portrait(0.5, 0.5, 0.0, 4).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("<polyline"));
    assert_eq!(svg, model_portrait(0.5, 0.5, 0.0, 4).unwrap());
}

#[test]
fn summary_at_half_bound() {
    let v: Value = serde_json::from_str(&synthesize_summary(0.05, 0.0, 0.0, false).unwrap()).unwrap();
    assert_eq!(v["lambda"].as_f64().unwrap(), v["lambda_max"].as_f64().unwrap() / 2.0);
    assert!(v["horn_residual"].as_f64().unwrap() < 1e-5);
    assert_eq!(v["above_bound"], false);
}

#[test]
fn forced_summary_above_bound() {
    let v: Value = serde_json::from_str(&synthesize_summary(0.05, 0.0, 4.0, true).unwrap()).unwrap();
    assert_eq!(v["above_bound"], true);
    assert!(v["f_norm"].as_f64().unwrap() > 0.0);
}

#[test]
fn time1_satisfies_mu_zero_relation() {
    let v: Value = serde_json::from_str(&model_time1(0.01, 0.0, 0.0, 0.3, 0.2).unwrap()).unwrap();
    assert!(v["mu_zero_residual"].as_f64().unwrap() < 1e-9);
    let v: Value = serde_json::from_str(&model_time1(0.01, 0.5, 0.0, 0.3, 0.2).unwrap()).unwrap();
    assert!(v["mu_zero_residual"].is_null());
}
