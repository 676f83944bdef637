//! The rational model field `X₀`, its first integral `H₀`, the coordinates
//! `Π` and `τ`, sector geometry, the involution `σ` and the size constants.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::germs::{Germ, ModulusData};
use crate::{i, re, series, InputError, C};

/// Half-opening of the sectors `V±`.
pub const OPENING: f64 = 5.0 * PI / 8.0;
/// Inner boundary angle of the wedges `V⁰`, `V∞`.
pub const WEDGE_INNER: f64 = 3.0 * PI / 8.0;

const POLE_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("lambda must be positive and finite, got {0}")]
    NonPositiveLambda(f64),
    #[error("pole of the model field at {0}")]
    PoleAt(C),
    #[error("zero of the model field at {0}")]
    ZeroAt(C),
    #[error("Π is singular at {0}")]
    SingularPi(C),
    #[error("τ is undefined at 0")]
    ZeroTau,
    #[error("{z} lies on the branch cut of the {side:?} determination")]
    BranchCut { z: C, side: Side },
    #[error("lambda {lambda} violates the globalization bound {bound}")]
    Globalization { lambda: f64, bound: f64 },
    #[error("germ radius must be positive, got {0}")]
    NonpositiveRadius(f64),
}

impl InputError for ModelError {
    fn is_input_error(&self) -> bool {
        matches!(
            self,
            ModelError::NonPositiveLambda(_)
                | ModelError::Globalization { .. }
                | ModelError::NonpositiveRadius(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }

    /// Midline angle of the sector.
    pub fn midline(self) -> f64 {
        match self {
            Side::Plus => 0.0,
            Side::Minus => PI,
        }
    }
}

/// The two components of `V⁺ ∩ V⁻`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wedge {
    Zero,
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub mu: C,
}

impl ModelParams {
    pub fn new(lambda: f64, mu: C) -> Result<Self, ModelError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(ModelError::NonPositiveLambda(lambda));
        }
        Ok(ModelParams { lambda, mu })
    }

    /// `min{1/(2|μ|), 1/12800}`.
    pub fn globalization_bound(&self) -> f64 {
        let m = self.mu.norm();
        let b = if m > 0.0 { 0.5 / m } else { f64::INFINITY };
        b.min(1.0 / 12800.0)
    }

    pub fn check_globalization(&self) -> Result<(), ModelError> {
        let bound = self.globalization_bound();
        if self.lambda < bound {
            Ok(())
        } else {
            Err(ModelError::Globalization {
                lambda: self.lambda,
                bound,
            })
        }
    }

    pub fn is_mu_zero(&self) -> bool {
        self.mu == C::new(0.0, 0.0)
    }

    /// Roots `z±` of `z² − λμz − 1`.
    pub fn z_pm(&self) -> (C, C) {
        let lm = self.mu * self.lambda;
        let s = (lm * lm + 4.0).sqrt();
        ((lm + s) / 2.0, (lm - s) / 2.0)
    }

    /// Finite poles of `X₀` in the order `i, −i, z₊, z₋`.
    pub fn poles(&self) -> Vec<C> {
        let mut p = vec![i(), -i()];
        if !self.is_mu_zero() {
            let (zp, zm) = self.z_pm();
            p.push(zp);
            p.push(zm);
        }
        p
    }

    /// Finite zeros of `X₀` with multiplicity. `∞` is a double zero as well.
    pub fn zeros(&self) -> Vec<(C, u32)> {
        let mut z = vec![(re(0.0), 2)];
        if !self.is_mu_zero() {
            z.push((re(1.0), 1));
            z.push((re(-1.0), 1));
        }
        z
    }

    /// Numerator and denominator of `X₀` as polynomials.
    pub fn x0_polys(&self) -> (Vec<C>, Vec<C>) {
        let l = re(self.lambda);
        let zero = re(0.0);
        if self.is_mu_zero() {
            (vec![zero, zero, l], vec![re(1.0), zero, re(1.0)])
        } else {
            let lm = self.mu * self.lambda;
            (
                vec![zero, zero, l, zero, -l],
                vec![re(1.0), lm, zero, lm, re(-1.0)],
            )
        }
    }
}

fn arg_in(z: C, lo: f64, hi: f64) -> bool {
    let a = z.arg();
    z != C::new(0.0, 0.0) && a > lo && a < hi
}

pub fn in_sector(z: C, side: Side) -> bool {
    match side {
        Side::Plus => arg_in(z, -OPENING, OPENING),
        Side::Minus => arg_in(-z, -OPENING, OPENING),
    }
}

pub fn wedge_of(z: C) -> Option<Wedge> {
    if arg_in(z, WEDGE_INNER, OPENING) {
        Some(Wedge::Zero)
    } else if arg_in(z, -OPENING, -WEDGE_INNER) {
        Some(Wedge::Infinity)
    } else {
        None
    }
}

/// Angles of the two boundary rays of `V^side`.
pub fn boundary_rays(side: Side) -> [f64; 2] {
    match side {
        Side::Plus => [OPENING, -OPENING],
        Side::Minus => [WEDGE_INNER, -WEDGE_INNER],
    }
}

/// Membership in the cut sector where `H₀` has the `side` determination.
pub fn in_cut_sector(z: C, side: Side, lambda: f64) -> bool {
    in_sector(z, side) && log_tau(z, side, lambda).is_ok()
}

/// Points of the desk domain: outside the discs of radius `2√λ` about `±i`
/// and `4√λ` about `z±`.
pub fn in_desk_domain(z: C, p: &ModelParams) -> bool {
    let s = p.lambda.sqrt();
    if (z - i()).norm() <= 2.0 * s || (z + i()).norm() <= 2.0 * s {
        return false;
    }
    if !p.is_mu_zero() {
        let (zp, zm) = p.z_pm();
        if (z - zp).norm() <= 4.0 * s || (z - zm).norm() <= 4.0 * s {
            return false;
        }
    }
    true
}

fn denominators(z: C, p: &ModelParams) -> (C, C) {
    let d1 = 1.0 + z * z;
    let d2 = if p.is_mu_zero() {
        re(1.0)
    } else {
        1.0 + p.mu * p.lambda * z - z * z
    };
    (d1, d2)
}

/// Coefficient of `X₀ = R ∂/∂z`.
pub fn eval_x0(z: C, p: &ModelParams) -> Result<C, ModelError> {
    let (d1, d2) = denominators(z, p);
    let scale = POLE_TOL * (1.0 + z.norm_sqr());
    if d1.norm() < scale || d2.norm() < scale {
        return Err(ModelError::PoleAt(z));
    }
    let z2 = z * z;
    if p.is_mu_zero() {
        Ok(p.lambda * z2 / d1)
    } else {
        Ok(p.lambda * z2 * (1.0 - z2) / (d1 * d2))
    }
}

/// Coefficient of `X₀` in the chart `w = 1/z`.
pub fn eval_x0_at_infinity(w: C, p: &ModelParams) -> Result<C, ModelError> {
    let w2 = w * w;
    let d1 = w2 + 1.0;
    let scale = POLE_TOL * (1.0 + w.norm_sqr());
    if p.is_mu_zero() {
        if d1.norm() < scale {
            return Err(ModelError::PoleAt(1.0 / w));
        }
        return Ok(-p.lambda * w2 / d1);
    }
    let d2 = w2 + p.mu * p.lambda * w - 1.0;
    if d1.norm() < scale || d2.norm() < scale {
        return Err(ModelError::PoleAt(1.0 / w));
    }
    Ok(-w2 * p.lambda * (w2 - 1.0) / (d1 * d2))
}

/// `1/R` for `X₀ = R ∂/∂z`: the density of the time form.
pub fn inv_x0(z: C, p: &ModelParams) -> Result<C, ModelError> {
    let z2 = z * z;
    let num = if p.is_mu_zero() {
        p.lambda * z2
    } else {
        p.lambda * z2 * (1.0 - z2)
    };
    if num.norm() < POLE_TOL * p.lambda * (1.0 + z2.norm_sqr()) {
        return Err(ModelError::ZeroAt(z));
    }
    let (d1, d2) = denominators(z, p);
    Ok(d1 * d2 / num)
}

pub fn x0_derivative(z: C, p: &ModelParams) -> Result<C, ModelError> {
    let (d1, d2) = denominators(z, p);
    let scale = POLE_TOL * (1.0 + z.norm_sqr());
    if d1.norm() < scale || d2.norm() < scale {
        return Err(ModelError::PoleAt(z));
    }
    let (num, den) = p.x0_polys();
    let n = series::eval(&num, z);
    let dn = series::eval_deriv(&num, z);
    let d = series::eval(&den, z);
    let dd = series::eval_deriv(&den, z);
    Ok((dn * d - n * dd) / (d * d))
}

/// Taylor coefficients of `R` at `z0` up to order `n − 1`.
pub fn x0_taylor(z0: C, n: usize, p: &ModelParams) -> Result<Vec<C>, ModelError> {
    let (num, den) = p.x0_polys();
    let den_s = series::shift(&den, z0);
    if den_s[0].norm() < POLE_TOL * (1.0 + z0.norm_sqr()) {
        return Err(ModelError::PoleAt(z0));
    }
    Ok(series::div(&series::shift(&num, z0), &den_s, n))
}

/// Time-1 map of `X₀` for `μ = 0`: the root of `zΔ² − (z² + λz − 1)Δ − z` closest to `z + λz²`.
pub fn mu_zero_time1(z: C, lambda: f64) -> C {
    if z.norm() == 0.0 {
        return z;
    }
    let b = z * z + lambda * z - 1.0;
    let disc = (b * b + 4.0 * z * z).sqrt();
    let guess = z + lambda * z * z;
    let (r1, r2) = ((b + disc) / (2.0 * z), (b - disc) / (2.0 * z));
    if (r1 - guess).norm() <= (r2 - guess).norm() {
        r1
    } else {
        r2
    }
}

/// Residual of the quadratic relation satisfied by the `μ = 0` time-1 map.
pub fn mu_zero_relation(z: C, d: C, lambda: f64) -> C {
    z * d * d - (z * z + lambda * z - 1.0) * d - z
}

/// `Π(z) = λz/(1 − z²)`.
pub fn pullback_pi(z: C, lambda: f64) -> Result<C, ModelError> {
    let d = 1.0 - z * z;
    if d.norm() < POLE_TOL * (1.0 + z.norm_sqr()) {
        return Err(ModelError::SingularPi(z));
    }
    Ok(lambda * z / d)
}

/// `τ(z) = (1 − z²)/(λz) = 1/Π(z)`.
pub fn eval_tau(z: C, lambda: f64) -> Result<C, ModelError> {
    if z == C::new(0.0, 0.0) {
        return Err(ModelError::ZeroTau);
    }
    Ok((1.0 - z * z) / (lambda * z))
}

/// Determination of `log τ` attached to `side`: principal on `V̂⁺`,
/// argument in `(0, 2π)` on `V̂⁻`.
pub fn log_tau(z: C, side: Side, lambda: f64) -> Result<C, ModelError> {
    let tau = eval_tau(z, lambda)?;
    let cut = tau.im.abs() <= 1e-14 * tau.norm();
    let arg = match side {
        Side::Plus => {
            if cut && tau.re < 0.0 {
                return Err(ModelError::BranchCut { z, side });
            }
            tau.arg()
        }
        Side::Minus => {
            if cut && tau.re > 0.0 {
                return Err(ModelError::BranchCut { z, side });
            }
            let a = tau.arg();
            if a <= 0.0 {
                a + 2.0 * PI
            } else {
                a
            }
        }
    };
    Ok(C::new(tau.norm().ln(), arg))
}

/// `log H₀ = −2iπτ − 2iπμ log τ`.
pub fn log_h0(z: C, side: Side, p: &ModelParams) -> Result<C, ModelError> {
    let tau = eval_tau(z, p.lambda)?;
    let lt = log_tau(z, side, p.lambda)?;
    Ok(-2.0 * PI * i() * (tau + p.mu * lt))
}

pub fn eval_h0(z: C, side: Side, p: &ModelParams) -> Result<C, ModelError> {
    Ok(log_h0(z, side, p)?.exp())
}

/// `d/dz log H₀ = 2iπ/R`.
pub fn dlog_h0(z: C, p: &ModelParams) -> Result<C, ModelError> {
    Ok(2.0 * PI * i() * inv_x0(z, p)?)
}

/// `σ(z) = −1/z`.
pub fn sigma(z: C) -> C {
    -1.0 / z
}

/// Coefficient of the pushed field `σ*X` at `z`, given the coefficient of `X`.
pub fn sigma_push<F>(x: F, z: C) -> Result<C, ModelError>
where
    F: Fn(C) -> Result<C, ModelError>,
{
    Ok(z * z * x(sigma(z))?)
}

/// Exchange of sector labels composed with `σ`: `(O⁺, O⁻) ↦ (O⁻∘σ, O⁺∘σ)`
/// for functions.
pub fn act_on_pair<F>(o: F) -> impl Fn(C, Side) -> C
where
    F: Fn(C, Side) -> C,
{
    move |z, side| o(sigma(z), side.other())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    pub delta: f64,
    /// Sup bound for the model first integral on the wedge of opening `δ`.
    pub m: f64,
    pub t: f64,
    /// Constants used by the synthesis bounds.
    pub m_mu: f64,
    pub t_mu: f64,
}

fn x_log_term(im_mu: f64, scale: f64) -> f64 {
    if im_mu == 0.0 {
        0.0
    } else {
        2.0 * PI * im_mu * (im_mu.abs() / scale).ln()
    }
}

pub fn model_constants(mu: C, delta: f64) -> ModelConstants {
    let base = 2.0 * PI * PI * mu.re.abs();
    let ln_m = base + x_log_term(mu.im, std::f64::consts::E * delta.cos());
    let t = (ln_m / (2.0 * PI * delta.cos())).max(1.0);
    let root = (2.0 - 2f64.sqrt()).sqrt();
    let ln_m_mu = base + x_log_term(mu.im, std::f64::consts::E * root / 4.0);
    let t_mu = (ln_m_mu / (PI * root)).max(1.0);
    ModelConstants {
        delta,
        m: ln_m.exp(),
        t,
        m_mu: ln_m_mu.exp(),
        t_mu,
    }
}

pub fn default_constants(mu: C) -> ModelConstants {
    model_constants(mu, WEDGE_INNER)
}

/// `exp(−2iπ(τ + μ Log τ))` in the `τ` coordinate.
pub fn frak_h(tau: C, mu: C) -> C {
    (-2.0 * PI * i() * (tau + mu * tau.ln())).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisBounds {
    pub ell: f64,
    pub lambda_max: f64,
    /// Radius `𝔪 exp(2π − 1/ℓ)` of the disc where the data derivative is bounded.
    pub eval_radius: f64,
    pub phi0_norm: f64,
    pub phi_inf_norm: f64,
    pub m_mu: f64,
    pub t_mu: f64,
}

impl SynthesisBounds {
    pub fn phi_norm(&self) -> f64 {
        self.phi0_norm.max(self.phi_inf_norm)
    }

    pub fn kappa(&self, lambda: f64) -> f64 {
        8.0 * self.m_mu * lambda * lambda * self.phi_norm()
    }

    pub fn ball_radius(&self, lambda: f64) -> f64 {
        536.0 * self.kappa(lambda)
    }

    pub fn fixed_point_bound(&self, lambda: f64) -> f64 {
        let k = self.kappa(lambda);
        k * (3365.0 * k).exp()
    }
}

/// `1/(2π + ln(𝔪/ρ))`, or `None` when the term imposes no constraint.
pub(crate) fn radius_term(m_mu: f64, rho: f64) -> Option<f64> {
    if rho.is_infinite() {
        return None;
    }
    let d = 2.0 * PI + (m_mu / rho).ln();
    if d > 0.0 {
        Some(1.0 / d)
    } else {
        None
    }
}

/// Sup of `|φ′|` over the disc of radius `r` in the germ's own coordinate.
pub(crate) fn derivative_norm(g: &Germ, r: f64) -> f64 {
    const N: usize = 512;
    (0..N)
        .map(|k| {
            let u = C::from_polar(r, 2.0 * PI * k as f64 / N as f64);
            g.deriv_local_unchecked(u).norm()
        })
        .fold(0.0, f64::max)
}

pub fn synthesis_bounds(m: &ModulusData) -> Result<SynthesisBounds, ModelError> {
    for r in [m.phi0.radius, m.phi_inf.radius] {
        if !(r > 0.0) {
            return Err(ModelError::NonpositiveRadius(r));
        }
    }
    let c = default_constants(m.mu);
    let rho = m.phi0.radius.min(m.phi_inf.radius);
    let mut ell = 1.0f64.min(1.0 / c.t_mu);
    if let Some(v) = radius_term(c.m_mu, rho) {
        ell = ell.min(v);
    }
    let eval_radius = c.m_mu * (2.0 * PI - 1.0 / ell).exp();
    let phi0_norm = derivative_norm(&m.phi0, eval_radius);
    let phi_inf_norm = derivative_norm(&m.phi_inf, eval_radius);
    let norm = phi0_norm.max(phi_inf_norm);
    let lambda_max = if norm > 0.0 {
        ell.min(1.0 / (4.0 * (c.m_mu * norm).sqrt()))
    } else {
        ell
    };
    Ok(SynthesisBounds {
        ell,
        lambda_max,
        eval_radius,
        phi0_norm,
        phi_inf_norm,
        m_mu: c.m_mu,
        t_mu: c.t_mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64, mu: C) -> ModelParams {
        ModelParams::new(lambda, mu).unwrap()
    }

    #[test]
    fn mu_zero_time1_is_a_root() {
        for z in [C::new(0.2, 0.1), C::new(-0.7, 0.3), C::new(0.1, -0.4)] {
            let d = mu_zero_time1(z, 0.01);
            assert!(mu_zero_relation(z, d, 0.01).norm() < 1e-14);
            assert!((d - z - 0.01 * z * z / (1.0 + z * z)).norm() < 1e-3 * z.norm().powi(3));
        }
    }

    #[test]
    fn zero_and_pole_signals() {
        let p = params(0.1, re(0.5));
        assert_eq!(eval_x0(re(1.0), &p).unwrap(), re(0.0));
        assert_eq!(eval_x0(i(), &p), Err(ModelError::PoleAt(i())));
    }

    #[test]
    fn pullback_of_the_formal_field() {
        let p = params(0.1, re(0.5));
        let z = re(0.5);
        let x = pullback_pi(z, p.lambda).unwrap();
        let dpi = p.lambda * (1.0 + z * z) / ((1.0 - z * z) * (1.0 - z * z));
        let oracle = (x * x / (1.0 + p.mu * x)) / dpi;
        assert!((eval_x0(z, &p).unwrap() - oracle).norm() < 1e-15);
    }

    #[test]
    fn pi_and_tau_values() {
        assert_eq!(pullback_pi(re(0.0), 0.3).unwrap(), re(0.0));
        assert!((pullback_pi(re(2.0), 0.5).unwrap() - re(-1.0 / 3.0)).norm() < 1e-15);
        assert!((eval_tau(i(), 1.0).unwrap() - C::new(0.0, -2.0)).norm() < 1e-15);
        let z = C::new(0.3, 0.2);
        assert!((pullback_pi(sigma(z), 0.7).unwrap() - pullback_pi(z, 0.7).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn sigma_basics() {
        assert_eq!(sigma(i()), i());
        assert_eq!(sigma(re(2.0)), re(-0.5));
    }

    #[test]
    fn constants_trivial_cases() {
        let c = default_constants(re(0.0));
        assert_eq!((c.m, c.t, c.m_mu, c.t_mu), (1.0, 1.0, 1.0, 1.0));
        let c = default_constants(re(0.3));
        assert!((c.m - (2.0 * PI * PI * 0.3).exp()).abs() < 1e-12);
        assert!((c.m_mu - c.m).abs() < 1e-12);
    }

    #[test]
    fn chart_at_infinity_is_consistent() {
        let p = params(0.2, C::new(0.4, -0.1));
        let w = C::new(0.2, 0.1);
        let direct = -w * w * eval_x0(1.0 / w, &p).unwrap();
        assert!((eval_x0_at_infinity(w, &p).unwrap() - direct).norm() < 1e-14);
        let p0 = params(0.2, re(0.0));
        let direct = -w * w * eval_x0(1.0 / w, &p0).unwrap();
        assert!((eval_x0_at_infinity(w, &p0).unwrap() - direct).norm() < 1e-14);
    }

    #[test]
    fn derivative_and_taylor_agree() {
        let p = params(0.3, C::new(0.5, 0.2));
        let z = C::new(0.4, -0.3);
        let t = x0_taylor(z, 4, &p).unwrap();
        assert!((t[0] - eval_x0(z, &p).unwrap()).norm() < 1e-14);
        assert!((t[1] - x0_derivative(z, &p).unwrap()).norm() < 1e-13);
        let h = 1e-5;
        let fd = (eval_x0(z + h, &p).unwrap() - eval_x0(z - h, &p).unwrap()) / (2.0 * h);
        assert!((t[1] - fd).norm() < 1e-8);
    }

    #[test]
    fn multiplier_exponent_at_plus_minus_one() {
        let p = params(0.05, re(0.5));
        for z in [re(1.0), re(-1.0)] {
            let d = x0_derivative(z, &p).unwrap();
            assert!((d - re(-2.0)).norm() < 1e-12, "{d}");
        }
    }
}
