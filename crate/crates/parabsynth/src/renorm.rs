//! Parabolic renormalization: iterate `δ_{n+1} = Synth_λ(φ⁰, δ_n)` with `Δ_n = id·exp δ_n`.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::germs::{self, Center, Germ, GermError, ModulusData, SampleFit};
use crate::model::{self, ModelError, ModelParams};
use crate::synthesis::{self, HornReport, SynthOptions, SynthesisError, SynthesisResult};
use crate::{par, InputError, C};

/// Radius of the disc carrying `δ`.
pub const DISC_RADIUS: f64 = 3.0 / 16.0;
/// Radius of the disc that must contain `Δ(DISC_RADIUS·D)`.
pub const IMAGE_RADIUS: f64 = 0.25;
pub const SAMPLE_FACTOR: f64 = 0.9;
pub const SAMPLES: usize = 128;
pub const COEFFS: usize = 48;
pub const DERIV_BOUND: f64 = 45.0;
pub const DELTA_BOUND: f64 = 11.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenormError {
    #[error("lambda {lambda} exceeds the renormalization bound {lambda_hat}")]
    AboveBound { lambda: f64, lambda_hat: f64 },
    #[error("germ is not holomorphic on the sampling circle: {0}")]
    RadiusViolation(String),
    #[error("no convergence in {iterations} iterations, last difference {last:e}")]
    MaxIter { iterations: usize, last: f64 },
    #[error("iteration not contracting: ratio {ratio} at iteration {iteration}")]
    NotContracting { ratio: f64, iteration: usize },
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Germ(#[from] GermError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl InputError for RenormError {
    fn is_input_error(&self) -> bool {
        match self {
            RenormError::AboveBound { .. } => true,
            RenormError::Synthesis(e) => e.is_input_error(),
            RenormError::Germ(e) => e.is_input_error(),
            RenormError::Model(e) => e.is_input_error(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormBounds {
    pub ell_hat: f64,
    pub lambda_hat: f64,
    pub m_mu: f64,
    pub t_mu: f64,
    /// `‖φ⁰‖` at `ℓ̂`.
    pub phi0_norm: f64,
}

/// `ℓ̂` and `λ̂` for the data `φ⁰` with `ρ = 3/16`.
pub fn renorm_bounds(mu: C, phi0: &Germ) -> Result<RenormBounds, RenormError> {
    if phi0.center != Center::Zero {
        return Err(GermError::WrongCenter { expected: Center::Zero }.into());
    }
    let c = model::default_constants(mu);
    let mut ell = 1.0f64.min(c.t_mu).min(1e-2 / c.m_mu.powf(0.25));
    if let Some(v) = model::radius_term(c.m_mu, phi0.radius.min(DISC_RADIUS / 2.0)) {
        ell = ell.min(v);
    }
    let eval_radius = c.m_mu * (2.0 * PI - 1.0 / ell).exp();
    let phi0_norm = model::derivative_norm(phi0, eval_radius);
    let lambda_hat = ell.min(1.0 / (8.0 * E * c.m_mu.sqrt() * (phi0_norm + 9.0).sqrt()));
    Ok(RenormBounds {
        ell_hat: ell,
        lambda_hat,
        m_mu: c.m_mu,
        t_mu: c.t_mu,
        phi0_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenormOptions {
    pub synth: SynthOptions,
    pub tol: f64,
    pub max_iter: usize,
    /// Proceed above `λ̂`.
    pub force: bool,
}

impl Default for RenormOptions {
    fn default() -> Self {
        RenormOptions {
            synth: SynthOptions::default(),
            tol: 1e-10,
            max_iter: 20,
            force: false,
        }
    }
}

/// Per-iterate checks of the disc bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateBounds {
    /// `sup |Δ′|` on the `3/16` circle.
    pub deriv_sup: f64,
    /// `sup |δ|` on the `3/16` circle.
    pub delta_sup: f64,
    /// `sup |Δ|` on the sampling circle and on the `3/16` circle.
    pub image_sup: f64,
}

impl IterateBounds {
    pub fn holds(&self) -> bool {
        self.deriv_sup <= DERIV_BOUND && self.delta_sup < DELTA_BOUND && self.image_sup < IMAGE_RADIUS
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormState {
    /// `δ = log(Δ/id)` at `0` on the `3/16` disc.
    pub delta: Germ,
    pub iteration: usize,
    /// `‖δ_n − δ_{n−1}‖` on the `3/16` circle, one entry per step.
    pub differences: Vec<f64>,
    pub bounds: Vec<IterateBounds>,
    pub fits: Vec<SampleFit>,
}

impl RenormState {
    pub fn initial() -> Self {
        RenormState {
            delta: Germ::new(Center::Zero, vec![C::new(0.0, 0.0)], DISC_RADIUS).expect("valid"),
            iteration: 0,
            differences: Vec::new(),
            bounds: Vec::new(),
            fits: Vec::new(),
        }
    }

    /// `δ` read as `φ∞` in the coordinate `u = 1/h`.
    pub fn phi_inf(&self) -> Germ {
        Germ {
            center: Center::Infinity,
            coeffs: self.delta.coeffs.clone(),
            radius: self.delta.radius,
        }
    }

    pub fn eval_delta_map(&self, z: C) -> C {
        z * self.delta.eval_local_unchecked(z).exp()
    }
}

pub fn modulus_for(mu: C, phi0: &Germ, state: &RenormState) -> Result<ModulusData, RenormError> {
    Ok(ModulusData::new(mu, phi0.clone(), state.phi_inf())?)
}

fn check_lambda(mu: C, phi0: &Germ, lambda: f64, force: bool) -> Result<RenormBounds, RenormError> {
    ModelParams::new(lambda, mu)?;
    let b = renorm_bounds(mu, phi0)?;
    if lambda > b.lambda_hat && !force {
        return Err(RenormError::AboveBound {
            lambda,
            lambda_hat: b.lambda_hat,
        });
    }
    Ok(b)
}

fn circle_sup(g: &Germ, r: f64, f: impl Fn(&Germ, C) -> C) -> f64 {
    germs::circle_points(r, 4 * SAMPLES)
        .into_iter()
        .map(|u| f(g, u).norm())
        .fold(0.0, f64::max)
}

/// Disc bounds for `Δ = id·exp δ` read off the germ and the sampled values.
pub fn iterate_bounds(delta: &Germ, sampled: &[C]) -> IterateBounds {
    let deriv = |g: &Germ, z: C| {
        let d = g.eval_local_unchecked(z);
        d.exp() * (1.0 + z * g.deriv_local_unchecked(z))
    };
    let image = circle_sup(delta, DISC_RADIUS, |g, z| z * g.eval_local_unchecked(z).exp());
    IterateBounds {
        deriv_sup: circle_sup(delta, DISC_RADIUS, deriv),
        delta_sup: circle_sup(delta, DISC_RADIUS, |g, z| g.eval_local_unchecked(z)),
        image_sup: sampled.iter().map(|v| v.norm()).fold(image, f64::max),
    }
}

/// `δ` of the germ synthesized from `(φ⁰, δ_n)`.
pub fn delta_of(result: &SynthesisResult) -> Result<(Germ, Vec<C>, SampleFit), RenormError> {
    let r = SAMPLE_FACTOR * DISC_RADIUS;
    let pts = germs::circle_points(r, SAMPLES);
    let images: Result<Vec<C>, SynthesisError> = par::map(&pts, |&z| result.delta_map(z)).into_iter().collect();
    let images = images.map_err(|e| RenormError::RadiusViolation(e.to_string()))?;
    let logs: Vec<C> = pts.iter().zip(&images).map(|(z, d)| (d / z).ln()).collect();
    let (mut germ, fit) = germs::germ_from_samples(&logs, r, COEFFS, Center::Zero, DISC_RADIUS)
        .map_err(|e| RenormError::RadiusViolation(e.to_string()))?;
    germ.coeffs[0] = C::new(0.0, 0.0);
    Ok((germ, images, fit))
}

pub fn renorm_step(
    phi0: &Germ,
    mu: C,
    state: &RenormState,
    lambda: f64,
    opts: &RenormOptions,
) -> Result<RenormState, RenormError> {
    check_lambda(mu, phi0, lambda, opts.force)?;
    let m = modulus_for(mu, phi0, state)?;
    let result = synthesis::synthesize(&m, lambda, &SynthOptions { force: true, ..opts.synth })?;
    let (delta, images, fit) = delta_of(&result)?;
    let diff = circle_sup(&delta, DISC_RADIUS, |g, z| g.eval_local_unchecked(z) - state.delta.eval_local_unchecked(z));
    let mut next = state.clone();
    next.bounds.push(iterate_bounds(&delta, &images));
    next.delta = delta;
    next.iteration += 1;
    next.differences.push(diff);
    next.fits.push(fit);
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormHistory {
    pub bounds: RenormBounds,
    pub lambda: f64,
    pub differences: Vec<f64>,
    /// Ratios of successive differences above the round-off floor.
    pub ratios: Vec<f64>,
    pub max_ratio: Option<f64>,
    pub iterate_bounds: Vec<IterateBounds>,
    pub converged: bool,
    pub coefficients: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormOutcome {
    pub state: RenormState,
    pub history: RenormHistory,
}

impl RenormOutcome {
    pub fn fixed_point(&self) -> &Germ {
        &self.state.delta
    }
}

fn floor_for(g: &Germ) -> f64 {
    let scale = g.sup_on_circle(DISC_RADIUS, 4 * SAMPLES).max(f64::MIN_POSITIVE);
    1e3 * f64::EPSILON * scale.max(1e-3)
}

/// Iterates from `δ₀ = 0` until `‖δ_{n+1} − δ_n‖ < tol`; `converged` is false after `max_iter`
/// steps. Use [`renorm_fixed_point`] for the strict variant.
pub fn renorm_iterate(phi0: &Germ, mu: C, lambda: f64, opts: &RenormOptions) -> Result<RenormOutcome, RenormError> {
    let bounds = check_lambda(mu, phi0, lambda, opts.force)?;
    let mut state = RenormState::initial();
    let mut coefficients = Vec::new();
    let mut ratios = Vec::new();
    let mut growing = 0;
    let mut converged = false;
    for it in 1..=opts.max_iter.max(1) {
        state = renorm_step(phi0, mu, &state, lambda, opts)?;
        coefficients.push(state.delta.coeffs.iter().map(|c| [c.re, c.im]).collect());
        let n = state.differences.len();
        let floor = floor_for(&state.delta);
        if n >= 2 {
            let (prev, d) = (state.differences[n - 2], state.differences[n - 1]);
            if prev > floor {
                let r = d / prev;
                ratios.push(r);
                growing = if r >= 1.0 { growing + 1 } else { 0 };
                if growing >= 3 {
                    return Err(RenormError::NotContracting { ratio: r, iteration: it });
                }
            }
        }
        let d = state.differences[n - 1];
        if it >= 2 && (d < opts.tol || d <= floor) {
            converged = true;
            break;
        }
    }
    let history = RenormHistory {
        bounds,
        lambda,
        differences: state.differences.clone(),
        max_ratio: ratios.iter().cloned().reduce(f64::max),
        ratios,
        iterate_bounds: state.bounds.clone(),
        converged,
        coefficients,
    };
    Ok(RenormOutcome { state, history })
}

pub fn renorm_fixed_point(phi0: &Germ, mu: C, lambda: f64, opts: &RenormOptions) -> Result<RenormOutcome, RenormError> {
    let out = renorm_iterate(phi0, mu, lambda, opts)?;
    if !out.history.converged {
        return Err(RenormError::MaxIter {
            iterations: out.state.iteration,
            last: out.history.differences.last().copied().unwrap_or(f64::NAN),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointCheck {
    pub horn: HornReport,
    /// `‖δ(Synth(φ⁰, δ*)) − δ*‖` on the `3/16` circle.
    pub self_consistency: f64,
    /// Largest `|ψ∞_measured(h)/(h·exp δ*(1/h)) − 1|` over the `V∞` samples.
    pub psi_inf_residual: f64,
}

/// Synthesizes once more from `(φ⁰, δ*)` and compares the measured horn map at `∞` with `Δ*`.
pub fn check_fixed_point(
    phi0: &Germ,
    mu: C,
    lambda: f64,
    state: &RenormState,
    opts: &RenormOptions,
    horn_samples: usize,
) -> Result<FixedPointCheck, RenormError> {
    let m = modulus_for(mu, phi0, state)?;
    let result = synthesis::synthesize(&m, lambda, &SynthOptions { force: true, ..opts.synth })?;
    let horn = result.measure_horn_maps(horn_samples)?;
    let psi_inf_residual = horn
        .samples
        .iter()
        .filter(|s| s.wedge == model::Wedge::Infinity)
        .map(|s| {
            let u = (-s.log_h).exp();
            let expected = s.log_h + state.delta.eval_local_unchecked(u);
            ((s.log_psi_measured - expected).exp() - 1.0).norm()
        })
        .fold(0.0, f64::max);
    let (delta, _, _) = delta_of(&result)?;
    let self_consistency = circle_sup(&delta, DISC_RADIUS, |g, z| {
        g.eval_local_unchecked(z) - state.delta.eval_local_unchecked(z)
    });
    Ok(FixedPointCheck {
        horn,
        self_consistency,
        psi_inf_residual,
    })
}

/// Smallest ratios `|X₀(z)|/(λ|z|²)` and largest, over `0 < |z| ≤ 1/2`; expected in `[2/5, 10/3]`.
pub fn x0_magnitude_range(p: &ModelParams, rings: usize, per_ring: usize) -> Result<(f64, f64), ModelError> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for k in 1..=rings {
        let r = 0.5 * k as f64 / rings as f64;
        for z in germs::circle_points(r, per_ring) {
            let q = model::eval_x0(z, p)?.norm() / (p.lambda * r * r);
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    Ok((lo, hi))
}

/// Bounded holomorphic function on `V⁺` given by simple poles outside the closed sector.
#[derive(Debug, Clone)]
pub struct PoleSum {
    pub residues: Vec<C>,
    pub poles: Vec<C>,
}

impl PoleSum {
    pub fn eval(&self, z: C) -> C {
        self.residues.iter().zip(&self.poles).map(|(a, w)| a / (z - w)).sum()
    }

    pub fn deriv(&self, z: C) -> C {
        self.residues.iter().zip(&self.poles).map(|(a, w)| -a / ((z - w) * (z - w))).sum()
    }

    /// Sup over the boundary of `V⁺`, which bounds the sector sup since the function vanishes at `∞`.
    pub fn sector_sup(&self, samples: usize) -> f64 {
        let mut s = 0.0f64;
        for k in 0..samples {
            let r = (20.0 * k as f64 / samples as f64 - 10.0).exp();
            for a in model::boundary_rays(model::Side::Plus) {
                s = s.max(self.eval(C::from_polar(r, a)).norm());
            }
        }
        s.max(self.eval(C::new(0.0, 0.0)).norm())
    }
}

/// Largest `|X₀·f|/(λ‖f‖)` over `|z| ≤ 1/4`, `Re z ≥ 0`; expected `≤ 4`.
pub fn lie_derivative_ratio(p: &ModelParams, f: &PoleSum, samples: usize) -> Result<f64, ModelError> {
    let norm = f.sector_sup(4 * samples);
    let mut worst = 0.0f64;
    for k in 1..=samples {
        let r = 0.25 * k as f64 / samples as f64;
        for j in 0..=samples {
            let a = -PI / 2.0 + PI * j as f64 / samples as f64;
            let z = C::from_polar(r, a);
            worst = worst.max((model::eval_x0(z, p)? * f.deriv(z)).norm() / (p.lambda * norm));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::re;

    #[test]
    fn lambda_hat_for_small_data() {
        let phi0 = Germ::linear(Center::Zero, re(1.0 / 50.0));
        let b = renorm_bounds(re(0.0), &phi0).unwrap();
        assert!((b.ell_hat - 0.01).abs() < 1e-15);
        let second = 1.0 / (8.0 * E * (1.0f64 / 50.0 + 9.0).sqrt());
        assert!(second > 0.01);
        assert_eq!(b.lambda_hat, 0.01);
    }

    #[test]
    fn initial_state_is_identity() {
        let s = RenormState::initial();
        let z = C::new(0.1, 0.05);
        assert_eq!(s.eval_delta_map(z), z);
        assert!(s.phi_inf().is_zero());
    }

    #[test]
    fn trivial_step_gives_model_germ() {
        let lambda = 0.2;
        let phi0 = Germ::zero(Center::Zero);
        let opts = RenormOptions {
            force: true,
            ..Default::default()
        };
        let s = renorm_step(&phi0, re(0.0), &RenormState::initial(), lambda, &opts).unwrap();
        for z in germs::circle_points(0.15, 16) {
            let oracle = model::mu_zero_time1(z, lambda);
            assert!((s.eval_delta_map(z) - oracle).norm() < 1e-10);
        }
        assert!(s.bounds[0].holds());
    }

    #[test]
    fn forced_iteration_contracts() {
        let phi0 = Germ::linear(Center::Zero, re(1.0 / 50.0));
        let opts = RenormOptions {
            force: true,
            ..Default::default()
        };
        let out = renorm_fixed_point(&phi0, re(0.0), 2.0, &opts).unwrap();
        let first = out.history.differences[1];
        assert!(first > 1e-7, "nontrivial correction expected, got {first:e}");
        assert!(out.history.max_ratio.unwrap() < 0.1);
        let chk = check_fixed_point(&phi0, re(0.0), 2.0, &out.state, &opts, 6).unwrap();
        assert!(chk.psi_inf_residual < 1e-10);
        assert!(chk.self_consistency < 1e-10);
    }

    #[test]
    fn lie_derivative_bound_for_pole_sums() {
        let f = PoleSum {
            residues: vec![C::new(0.3, 0.1), C::new(-0.2, 0.4)],
            poles: vec![C::new(-1.0, 0.2), C::new(-0.5, -0.1)],
        };
        let p = ModelParams::new(0.05, re(0.5)).unwrap();
        assert!(lie_derivative_ratio(&p, &f, 24).unwrap() <= 4.0);
    }

    #[test]
    fn x0_magnitude_bounds_hold() {
        for mu in [re(0.0), re(0.5), C::new(1.0, 1.0)] {
            let p = ModelParams::new(0.05, mu).unwrap();
            let (lo, hi) = x0_magnitude_range(&p, 20, 64).unwrap();
            assert!(lo >= 0.4 && hi <= 10.0 / 3.0, "{mu}: {lo} {hi}");
        }
    }
}
