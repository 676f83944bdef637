//! Analytic germs at `0` and `∞`, the modulus data and the real condition.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{series, InputError, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GermError {
    #[error("point {point} outside the disc of radius {radius}")]
    OutsideRadius { point: C, radius: f64 },
    #[error("germ radius must be positive, got {0}")]
    NonpositiveRadius(f64),
    #[error("non-finite coefficient at index {0}")]
    NonFinite(usize),
    #[error("germ must vanish at its center, constant term is {0}")]
    NonVanishing(C),
    #[error("expected a germ centered at {expected:?}")]
    WrongCenter { expected: Center },
    #[error("map has zero multiplier")]
    ZeroMultiplier,
    #[error("truncated series lost all significant digits")]
    OrderLoss,
    #[error("the real condition needs real μ, got {0}")]
    NotReal(C),
    #[error("no common domain for the two germs")]
    DomainMismatch,
    #[error("Fourier tail {tail:e} above noise floor {floor:e}")]
    TailTooLarge { tail: f64, floor: f64 },
    #[error("Newton inversion did not converge at {0}")]
    InversionFailed(C),
}

impl InputError for GermError {
    fn is_input_error(&self) -> bool {
        matches!(
            self,
            GermError::NonpositiveRadius(_)
                | GermError::NonFinite(_)
                | GermError::NonVanishing(_)
                | GermError::WrongCenter { .. }
                | GermError::NotReal(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Center {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "inf")]
    Infinity,
}

/// Convergent germ `Σ c_k u^k` in the local coordinate `u = h` (center 0)
/// or `u = 1/h` (center ∞), trusted on `|u| < radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GermJson", into = "GermJson")]
pub struct Germ {
    pub center: Center,
    pub coeffs: Vec<C>,
    pub radius: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RadiusJson {
    Number(f64),
    Text(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GermJson {
    center: Center,
    coeffs: Vec<[f64; 2]>,
    radius: RadiusJson,
}

impl TryFrom<GermJson> for Germ {
    type Error = String;

    fn try_from(g: GermJson) -> Result<Self, String> {
        let radius = match g.radius {
            RadiusJson::Number(r) => r,
            RadiusJson::Text(s) if s == "inf" || s == "infinity" => f64::INFINITY,
            RadiusJson::Text(s) => return Err(format!("invalid radius {s:?}")),
        };
        let coeffs = g.coeffs.iter().map(|c| C::new(c[0], c[1])).collect();
        Germ::new(g.center, coeffs, radius).map_err(|e| e.to_string())
    }
}

impl From<Germ> for GermJson {
    fn from(g: Germ) -> Self {
        GermJson {
            center: g.center,
            coeffs: g.coeffs.iter().map(|c| [c.re, c.im]).collect(),
            radius: if g.radius.is_finite() {
                RadiusJson::Number(g.radius)
            } else {
                RadiusJson::Text("inf".into())
            },
        }
    }
}

impl Germ {
    pub fn new(center: Center, coeffs: Vec<C>, radius: f64) -> Result<Self, GermError> {
        if !(radius > 0.0) {
            return Err(GermError::NonpositiveRadius(radius));
        }
        if let Some(k) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(GermError::NonFinite(k));
        }
        Ok(Germ {
            center,
            coeffs,
            radius,
        })
    }

    pub fn zero(center: Center) -> Self {
        Germ {
            center,
            coeffs: Vec::new(),
            radius: f64::INFINITY,
        }
    }

    /// The germ `c·u`.
    pub fn linear(center: Center, c: C) -> Self {
        Germ {
            center,
            coeffs: vec![C::new(0.0, 0.0), c],
            radius: f64::INFINITY,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == C::new(0.0, 0.0))
    }

    pub fn scaled(&self, s: C) -> Germ {
        Germ {
            center: self.center,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            radius: self.radius,
        }
    }

    pub fn value_at_center(&self) -> C {
        self.coeffs.first().copied().unwrap_or_default()
    }

    pub fn local(&self, h: C) -> C {
        match self.center {
            Center::Zero => h,
            Center::Infinity => 1.0 / h,
        }
    }

    fn check(&self, u: C) -> Result<(), GermError> {
        if u.norm() < self.radius {
            Ok(())
        } else {
            Err(GermError::OutsideRadius {
                point: u,
                radius: self.radius,
            })
        }
    }

    pub fn eval_local_unchecked(&self, u: C) -> C {
        series::eval(&self.coeffs, u)
    }

    pub fn deriv_local_unchecked(&self, u: C) -> C {
        series::eval_deriv(&self.coeffs, u)
    }

    pub fn eval_local(&self, u: C) -> Result<C, GermError> {
        self.check(u)?;
        Ok(self.eval_local_unchecked(u))
    }

    pub fn eval(&self, h: C) -> Result<C, GermError> {
        self.eval_local(self.local(h))
    }

    /// `dφ/dh`.
    pub fn deriv(&self, h: C) -> Result<C, GermError> {
        let u = self.local(h);
        self.check(u)?;
        let d = self.deriv_local_unchecked(u);
        Ok(match self.center {
            Center::Zero => d,
            Center::Infinity => -d * u * u,
        })
    }

    fn local_from_log(&self, log_h: C) -> Result<C, GermError> {
        let log_u = match self.center {
            Center::Zero => log_h,
            Center::Infinity => -log_h,
        };
        if self.is_zero() {
            return Ok(C::new(0.0, 0.0));
        }
        if log_u.re >= self.radius.ln() {
            return Err(GermError::OutsideRadius {
                point: log_u.exp(),
                radius: self.radius,
            });
        }
        Ok(log_u.exp())
    }

    /// `φ(h)` for `h = exp(log_h)`; safe when `h` under- or overflows.
    pub fn eval_from_log(&self, log_h: C) -> Result<C, GermError> {
        let u = self.local_from_log(log_h)?;
        Ok(self.eval_local_unchecked(u))
    }

    /// `h·φ′(h)` for `h = exp(log_h)`.
    pub fn log_deriv_from_log(&self, log_h: C) -> Result<C, GermError> {
        let u = self.local_from_log(log_h)?;
        let d = self.deriv_local_unchecked(u) * u;
        Ok(match self.center {
            Center::Zero => d,
            Center::Infinity => -d,
        })
    }

    /// Root-test estimate of the radius of convergence; diagnostic only.
    pub fn root_test_radius(&self) -> f64 {
        let n = self.coeffs.len();
        let tail: Vec<f64> = self.coeffs[n / 2..]
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(k, c)| c.norm().powf(-1.0 / (k + n / 2).max(1) as f64))
            .collect();
        if tail.is_empty() {
            f64::INFINITY
        } else {
            tail.iter().cloned().fold(f64::INFINITY, f64::min)
        }
    }

    pub fn sup_on_circle(&self, r: f64, samples: usize) -> f64 {
        (0..samples)
            .map(|k| {
                let u = C::from_polar(r, 2.0 * PI * k as f64 / samples as f64);
                self.eval_local_unchecked(u).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// `(μ, φ⁰, φ∞)` with `ψ⁰ = h·exp(4π²μ + φ⁰(h))` and `ψ∞ = h·exp(φ∞(h))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusData {
    pub mu: C,
    pub phi0: Germ,
    pub phi_inf: Germ,
}

impl ModulusData {
    pub fn new(mu: C, phi0: Germ, phi_inf: Germ) -> Result<Self, GermError> {
        let m = ModulusData { mu, phi0, phi_inf };
        m.validate()?;
        Ok(m)
    }

    pub fn trivial(mu: C) -> Self {
        ModulusData {
            mu,
            phi0: Germ::zero(Center::Zero),
            phi_inf: Germ::zero(Center::Infinity),
        }
    }

    pub fn validate(&self) -> Result<(), GermError> {
        if self.phi0.center != Center::Zero {
            return Err(GermError::WrongCenter {
                expected: Center::Zero,
            });
        }
        if self.phi_inf.center != Center::Infinity {
            return Err(GermError::WrongCenter {
                expected: Center::Infinity,
            });
        }
        for g in [&self.phi0, &self.phi_inf] {
            let c = g.value_at_center();
            if c.norm() > 1e-14 {
                return Err(GermError::NonVanishing(c));
            }
        }
        Ok(())
    }

    pub fn is_trivial(&self) -> bool {
        self.phi0.is_zero() && self.phi_inf.is_zero()
    }

    pub fn germ(&self, which: Center) -> &Germ {
        match which {
            Center::Zero => &self.phi0,
            Center::Infinity => &self.phi_inf,
        }
    }

    /// Constant part of `log(ψ/id)`.
    pub fn linear_exponent(&self, which: Center) -> C {
        match which {
            Center::Zero => 4.0 * PI * PI * self.mu,
            Center::Infinity => C::new(0.0, 0.0),
        }
    }
}

pub fn eval_psi(m: &ModulusData, which: Center, h: C) -> Result<C, GermError> {
    Ok(h * (m.linear_exponent(which) + m.germ(which).eval(h)?).exp())
}

/// `log ψ(h)` from `log h`.
pub fn log_psi(m: &ModulusData, which: Center, log_h: C) -> Result<C, GermError> {
    Ok(log_h + m.linear_exponent(which) + m.germ(which).eval_from_log(log_h)?)
}

/// Germ of a holomorphic map fixing the origin, `Σ_{k≥1} a_k h^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GermMap {
    pub coeffs: Vec<C>,
}

impl GermMap {
    pub fn new(coeffs: Vec<C>) -> Self {
        GermMap { coeffs }
    }

    pub fn identity(order: usize) -> Self {
        let mut c = vec![C::new(0.0, 0.0); order.max(2)];
        c[1] = C::new(1.0, 0.0);
        GermMap { coeffs: c }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, h: C) -> C {
        series::eval(&self.coeffs, h)
    }

    /// Solves `self(x) = y` by Newton from the series inverse guess.
    pub fn invert_point(&self, y: C) -> Result<C, GermError> {
        let mut x = germ_invert(self)?.eval(y);
        for _ in 0..50 {
            let f = self.eval(x) - y;
            let d = series::eval_deriv(&self.coeffs, x);
            let step = f / d;
            x -= step;
            if step.norm() <= 1e-15 * (1.0 + x.norm()) {
                return Ok(x);
            }
        }
        Err(GermError::InversionFailed(y))
    }
}

fn check_finite(c: &[C]) -> Result<(), GermError> {
    if c.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(())
    } else {
        Err(GermError::OrderLoss)
    }
}

/// `g1 ∘ g2` truncated to the smaller order.
pub fn germ_compose(g1: &GermMap, g2: &GermMap) -> Result<GermMap, GermError> {
    let n = g1.order().min(g2.order());
    let mut inner = g2.coeffs.clone();
    inner[0] = C::new(0.0, 0.0);
    let c = series::compose(&g1.coeffs, &inner, n);
    check_finite(&c)?;
    Ok(GermMap { coeffs: c })
}

pub fn germ_invert(g: &GermMap) -> Result<GermMap, GermError> {
    if g.order() < 2 || g.coeffs[1] == C::new(0.0, 0.0) {
        return Err(GermError::ZeroMultiplier);
    }
    let c = series::reversion(&g.coeffs, g.order());
    check_finite(&c)?;
    Ok(GermMap { coeffs: c })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealConditionReport {
    pub max_residual: f64,
    pub sample_radius: f64,
    pub samples: usize,
}

/// Checks `conj φ⁰(conj h) = −φ∞(1/h)` on a circle inside the common disc.
pub fn check_real_condition(m: &ModulusData, samples: usize) -> Result<RealConditionReport, GermError> {
    if m.mu.im != 0.0 {
        return Err(GermError::NotReal(m.mu));
    }
    let rho = m.phi0.radius.min(m.phi_inf.radius);
    if !(rho > 0.0) {
        return Err(GermError::DomainMismatch);
    }
    let r = if rho.is_finite() { 0.5 * rho } else { 0.5 };
    let samples = samples.max(1);
    let mut worst = 0.0f64;
    for k in 0..samples {
        let h = C::from_polar(r, 2.0 * PI * (k as f64 + 0.5) / samples as f64);
        let lhs = m.phi0.eval(h.conj())?.conj();
        let rhs = -m.phi_inf.eval(1.0 / h)?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(RealConditionReport {
        max_residual: worst,
        sample_radius: r,
        samples,
    })
}

pub fn circle_points(r: f64, m: usize) -> Vec<C> {
    (0..m)
        .map(|k| C::from_polar(r, 2.0 * PI * k as f64 / m as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleFit {
    /// Largest `|c_k| r^k` over the last quarter of the returned coefficients.
    pub tail: f64,
    pub floor: f64,
}

/// Taylor coefficients from equispaced samples `values[k] = g(r e^{2iπk/M})`.
pub fn taylor_from_samples(values: &[C], r: f64, n_coeffs: usize) -> (Vec<C>, SampleFit) {
    let m = values.len();
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let n = n_coeffs.min(m);
    let coeffs: Vec<C> = (0..n).map(|k| buf[k] / (m as f64 * r.powi(k as i32))).collect();
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let floor = 1e-10 * scale.max(1e-300);
    let tail = (n - n / 4..n)
        .map(|k| coeffs[k].norm() * r.powi(k as i32))
        .fold(0.0, f64::max);
    (coeffs, SampleFit { tail, floor })
}

pub fn germ_from_samples(
    values: &[C],
    r: f64,
    n_coeffs: usize,
    center: Center,
    radius: f64,
) -> Result<(Germ, SampleFit), GermError> {
    let (coeffs, fit) = taylor_from_samples(values, r, n_coeffs);
    if fit.tail > fit.floor {
        return Err(GermError::TailTooLarge {
            tail: fit.tail,
            floor: fit.floor,
        });
    }
    Ok((Germ::new(center, coeffs, radius)?, fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::re;

    #[test]
    fn trivial_modulus_is_linear() {
        let mu = C::new(0.1, -0.05);
        let m = ModulusData::trivial(mu);
        let h = C::new(0.3, 0.1);
        let expected = h * (4.0 * PI * PI * mu).exp();
        assert!((eval_psi(&m, Center::Zero, h).unwrap() - expected).norm() < 1e-12);
        assert_eq!(eval_psi(&m, Center::Infinity, h).unwrap(), h);
    }

    #[test]
    fn evaluation_refused_outside_radius() {
        let g = Germ::new(Center::Zero, vec![re(0.0), re(1.0)], 0.5).unwrap();
        assert!(g.eval(re(0.4)).is_ok());
        assert!(matches!(g.eval(re(0.6)), Err(GermError::OutsideRadius { .. })));
        let g = Germ::new(Center::Infinity, vec![re(0.0), re(1.0)], 0.5).unwrap();
        assert!(g.eval(re(3.0)).is_ok());
        assert!(g.eval(re(1.0)).is_err());
    }

    #[test]
    fn log_evaluation_matches_direct() {
        let g = Germ::new(Center::Infinity, vec![re(0.0), C::new(0.5, 1.0), re(-2.0)], 1.0).unwrap();
        let h = C::new(2.0, -1.5);
        let direct = g.eval(h).unwrap();
        assert!((g.eval_from_log(h.ln()).unwrap() - direct).norm() < 1e-14);
        let dh = g.deriv(h).unwrap() * h;
        assert!((g.log_deriv_from_log(h.ln()).unwrap() - dh).norm() < 1e-14);
    }

    #[test]
    fn json_schema_round_trip() {
        let txt = r#"{"center":"inf","coeffs":[[0,0],[0.5,-1]],"radius":"inf"}"#;
        let g: Germ = serde_json::from_str(txt).unwrap();
        assert_eq!(g.center, Center::Infinity);
        assert!(g.radius.is_infinite());
        let back = serde_json::to_string(&g).unwrap();
        let again: Germ = serde_json::from_str(&back).unwrap();
        assert_eq!(g, again);
        assert!(serde_json::from_str::<Germ>(r#"{"center":"0","coeffs":[],"radius":-1}"#).is_err());
    }

    #[test]
    fn linear_inverse() {
        let c = C::new(0.3, 0.2);
        let g = GermMap::new(vec![re(0.0), c.exp()]);
        let inv = germ_invert(&g).unwrap();
        assert!((inv.coeffs[1] - (-c).exp()).norm() < 1e-15);
    }

    #[test]
    fn samples_of_square() {
        let pts = circle_points(0.1, 32);
        let vals: Vec<C> = pts.iter().map(|h| h * h).collect();
        let (c, _) = taylor_from_samples(&vals, 0.1, 16);
        for (k, ck) in c.iter().enumerate() {
            let e = if k == 2 { 1.0 } else { 0.0 };
            assert!((ck - re(e)).norm() * 0.1f64.powi(k as i32) < 1e-15);
        }
    }

    #[test]
    fn real_condition_examples() {
        let m = ModulusData::trivial(re(0.2));
        assert_eq!(check_real_condition(&m, 32).unwrap().max_residual, 0.0);
        let c = 0.7;
        let m = ModulusData::new(
            re(0.2),
            Germ::linear(Center::Zero, re(c)),
            Germ::linear(Center::Infinity, re(-c)),
        )
        .unwrap();
        assert!(check_real_condition(&m, 32).unwrap().max_residual < 1e-15);
        let m = ModulusData::new(re(0.2), Germ::linear(Center::Zero, crate::i()), Germ::zero(Center::Infinity)).unwrap();
        assert!(check_real_condition(&m, 32).unwrap().max_residual > 0.1);
    }
}
