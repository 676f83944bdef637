//! Browser bindings: model portraits, synthesis summaries and time-1 map evaluation.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use parabsynth::flow::{self, FlowOptions, ModelField};
use parabsynth::germs::{Center, Germ, ModulusData};
use parabsynth::model::{self, ModelParams};
use parabsynth::portrait::{self, PortraitOptions};
use parabsynth::synthesis::{synthesize, SynthOptions};
use parabsynth::C;

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// SVG phase portrait of the model field on `[−2, 2]²`.
#[wasm_bindgen]
pub fn model_portrait(lambda: f64, mu_re: f64, mu_im: f64, grid: usize) -> Result<String, JsError> {
    let p = ModelParams::new(lambda, C::new(mu_re, mu_im)).map_err(err)?;
    let opts = PortraitOptions {
        time: 60.0,
        spinal: false,
        ..Default::default()
    };
    let pt = portrait::portrait(&ModelField::new(p), &portrait::grid_seeds(grid.clamp(2, 16)), &opts).map_err(err)?;
    Ok(portrait::to_svg(&pt))
}

#[derive(Serialize)]
struct SynthSummary {
    lambda: f64,
    lambda_max: f64,
    above_bound: bool,
    iterations: usize,
    kappa: f64,
    ratios: Vec<f64>,
    f_norm: f64,
    horn_residual: f64,
}

/// Synthesizes from `ψ⁰(h) = h·exp(c0·h)` and returns a JSON summary.
/// `lambda ≤ 0` selects half the admissible bound.
#[wasm_bindgen]
pub fn synthesize_summary(c0: f64, mu: f64, lambda: f64, force: bool) -> Result<String, JsError> {
    let m = ModulusData::new(
        C::new(mu, 0.0),
        Germ::linear(Center::Zero, C::new(c0, 0.0)),
        Germ::zero(Center::Infinity),
    )
    .map_err(err)?;
    let lambda_max = model::synthesis_bounds(&m).map_err(err)?.lambda_max;
    let lambda = if lambda > 0.0 { lambda } else { lambda_max / 2.0 };
    let opts = SynthOptions {
        force,
        ..Default::default()
    };
    let r = synthesize(&m, lambda, &opts).map_err(err)?;
    let horn = r.measure_horn_maps(10).map_err(err)?;
    let d = &r.diagnostics;
    let s = SynthSummary {
        lambda,
        lambda_max,
        above_bound: d.above_bound,
        iterations: d.iterations,
        kappa: d.kappa_lambda,
        ratios: d.ratios.clone(),
        f_norm: d.sampled_f_norm,
        horn_residual: horn.max_relative_error,
    };
    serde_json::to_string(&s).map_err(err)
}

#[derive(Serialize)]
struct Time1 {
    re: f64,
    im: f64,
    status: String,
    /// Residual of the algebraic relation satisfied when `μ = 0`.
    mu_zero_residual: Option<f64>,
}

/// Time-1 map of the model field at `z`.
#[wasm_bindgen]
pub fn model_time1(lambda: f64, mu_re: f64, mu_im: f64, re: f64, im: f64) -> Result<String, JsError> {
    let mu = C::new(mu_re, mu_im);
    let p = ModelParams::new(lambda, mu).map_err(err)?;
    let z = C::new(re, im);
    let r = flow::time1_map(&ModelField::new(p), z, &FlowOptions::with_tol(1e-12)).map_err(err)?;
    let out = Time1 {
        re: r.endpoint.re,
        im: r.endpoint.im,
        status: format!("{:?}", r.status),
        mu_zero_residual: (mu == C::new(0.0, 0.0) && r.is_ok())
            .then(|| model::mu_zero_relation(z, r.endpoint, lambda).norm()),
    };
    serde_json::to_string(&out).map_err(err)
}
