//! Complex-time flows of meromorphic vector fields on the sphere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{self, ModelError, ModelParams};
use crate::quadrature::{integrate_segment, AdaptiveError};
use crate::{series, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("pole at {0}")]
    Pole(C),
    #[error("field undefined at {0}: {1}")]
    Undefined(C, String),
}

impl From<ModelError> for FieldError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::PoleAt(z) => FieldError::Pole(z),
            other => FieldError::Undefined(C::new(f64::NAN, f64::NAN), other.to_string()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("start point {0} is a pole")]
    StartAtPole(C),
    #[error("time form is singular at {0}")]
    SingularOnPath(C),
    #[error("adaptive quadrature did not converge")]
    QuadratureNotConverged,
    #[error("leading coefficient must be nonzero")]
    ZeroLeadingCoefficient,
    #[error("{0} lies on the slit")]
    OnSlit(C),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "order")]
pub enum SingularityKind {
    Zero(u32),
    Pole(u32),
}

/// A singular point; `at = None` stands for `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Singularity {
    pub at: Option<C>,
    pub kind: SingularityKind,
}

pub trait VectorField: Sync {
    /// Coefficient `R(z)` of `X = R ∂/∂z`.
    fn eval(&self, z: C) -> Result<C, FieldError>;

    /// Coefficient in the chart `w = 1/z`.
    fn eval_at_infinity(&self, w: C) -> Result<C, FieldError> {
        let z = 1.0 / w;
        Ok(-w * w * self.eval(z)?)
    }

    fn singularities(&self) -> Vec<Singularity>;

    fn finite_poles(&self) -> Vec<C> {
        self.singularities()
            .iter()
            .filter_map(|s| match (s.at, s.kind) {
                (Some(p), SingularityKind::Pole(_)) => Some(p),
                _ => None,
            })
            .collect()
    }

    fn finite_zeros(&self) -> Vec<(C, u32)> {
        self.singularities()
            .iter()
            .filter_map(|s| match (s.at, s.kind) {
                (Some(p), SingularityKind::Zero(m)) => Some((p, m)),
                _ => None,
            })
            .collect()
    }

    fn pole_at_infinity(&self) -> bool {
        self.singularities()
            .iter()
            .any(|s| s.at.is_none() && matches!(s.kind, SingularityKind::Pole(_)))
    }

    fn zero_at_infinity(&self) -> bool {
        self.singularities()
            .iter()
            .any(|s| s.at.is_none() && matches!(s.kind, SingularityKind::Zero(_)))
    }
}

/// Closure-backed field with declared singularities.
pub struct FieldSpec<F> {
    pub eval: F,
    pub singularities: Vec<Singularity>,
}

impl<F> VectorField for FieldSpec<F>
where
    F: Fn(C) -> Result<C, FieldError> + Sync,
{
    fn eval(&self, z: C) -> Result<C, FieldError> {
        (self.eval)(z)
    }

    fn singularities(&self) -> Vec<Singularity> {
        self.singularities.clone()
    }
}

/// The model field `X₀`.
#[derive(Debug, Clone, Copy)]
pub struct ModelField {
    pub params: ModelParams,
}

impl ModelField {
    pub fn new(params: ModelParams) -> Self {
        ModelField { params }
    }
}

impl VectorField for ModelField {
    fn eval(&self, z: C) -> Result<C, FieldError> {
        Ok(model::eval_x0(z, &self.params)?)
    }

    fn eval_at_infinity(&self, w: C) -> Result<C, FieldError> {
        Ok(model::eval_x0_at_infinity(w, &self.params)?)
    }

    fn singularities(&self) -> Vec<Singularity> {
        let mut s: Vec<Singularity> = self
            .params
            .zeros()
            .into_iter()
            .map(|(z, m)| Singularity {
                at: Some(z),
                kind: SingularityKind::Zero(m),
            })
            .collect();
        s.push(Singularity {
            at: None,
            kind: SingularityKind::Zero(2),
        });
        s.extend(self.params.poles().into_iter().map(|p| Singularity {
            at: Some(p),
            kind: SingularityKind::Pole(1),
        }));
        s
    }
}

/// `W = (1/w) ∂/∂w`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PolarField;

impl VectorField for PolarField {
    fn eval(&self, w: C) -> Result<C, FieldError> {
        if w.norm() < 1e-300 {
            return Err(FieldError::Pole(w));
        }
        Ok(1.0 / w)
    }

    fn eval_at_infinity(&self, u: C) -> Result<C, FieldError> {
        Ok(-u * u * u)
    }

    fn singularities(&self) -> Vec<Singularity> {
        vec![
            Singularity {
                at: Some(C::new(0.0, 0.0)),
                kind: SingularityKind::Pole(1),
            },
            Singularity {
                at: None,
                kind: SingularityKind::Zero(3),
            },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub tol: f64,
    /// Relative radius `g` of the excluded disc `|z − p| < g(1 + |p|)`.
    pub pole_guard: f64,
    pub max_steps: usize,
    /// Leaving `|z| < R` stops the flow with `Escaped`.
    pub escape_radius: Option<f64>,
    pub record: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            tol: 1e-10,
            pole_guard: 1e-4,
            max_steps: 200_000,
            escape_radius: None,
            record: false,
        }
    }
}

impl FlowOptions {
    pub fn with_tol(tol: f64) -> Self {
        FlowOptions {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum FlowStatus {
    Ok,
    /// The trajectory reached the pole after the given elapsed time.
    Separated { pole: C, time: C },
    Escaped { at: C },
    StepFailure { at: C },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub endpoint: C,
    pub status: FlowStatus,
    pub error_estimate: f64,
    pub steps: usize,
    /// `(elapsed time, point)` after every accepted step when recording.
    pub trajectory: Vec<(C, C)>,
}

impl FlowResult {
    pub fn is_ok(&self) -> bool {
        self.status == FlowStatus::Ok
    }

    /// Endpoint when the flow completed.
    pub fn ok(&self) -> Option<C> {
        self.is_ok().then_some(self.endpoint)
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Chart {
    Plane,
    Infinity,
}

impl Chart {
    fn to_plane(self, y: C) -> C {
        match self {
            Chart::Plane => y,
            Chart::Infinity => 1.0 / y,
        }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn rhs<X: VectorField + ?Sized>(x: &X, chart: Chart, y: C, dt: C) -> Result<C, FieldError> {
    let v = match chart {
        Chart::Plane => x.eval(y)?,
        Chart::Infinity => x.eval_at_infinity(y)?,
    };
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(FieldError::Pole(chart.to_plane(y)));
    }
    Ok(dt * v)
}

/// One Dormand–Prince step; returns the 5th order value and the error vector.
fn dp_step<X: VectorField + ?Sized>(x: &X, chart: Chart, y: C, h: f64, dt: C) -> Result<(C, C), FieldError> {
    let mut k = [C::new(0.0, 0.0); 7];
    k[0] = rhs(x, chart, y, dt)?;
    for s in 1..7 {
        let mut acc = y;
        for j in 0..s {
            acc += k[j] * (h * A[s][j]);
        }
        k[s] = rhs(x, chart, acc, dt)?;
    }
    let mut y5 = y;
    let mut err = C::new(0.0, 0.0);
    for s in 0..7 {
        y5 += k[s] * (h * B5[s]);
        err += k[s] * (h * (B5[s] - B4[s]));
    }
    Ok((y5, err))
}

struct Tracker<'a> {
    opts: &'a FlowOptions,
    poles: Vec<C>,
    pole_inf: bool,
}

impl Tracker<'_> {
    fn near_pole(&self, chart: Chart, y: C, factor: f64) -> Option<C> {
        match chart {
            Chart::Plane => self
                .poles
                .iter()
                .find(|p| (y - **p).norm() < factor * self.opts.pole_guard * (1.0 + p.norm()))
                .copied(),
            Chart::Infinity => (self.pole_inf && y.norm() < factor * self.opts.pole_guard)
                .then_some(C::new(f64::INFINITY, 0.0)),
        }
    }

    fn nearest_pole_distance(&self, z: C) -> Option<(C, f64)> {
        self.poles
            .iter()
            .map(|p| (*p, (z - p).norm() / (1.0 + p.norm())))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Integrates along the piecewise-linear time path `0 = times[0] → … → times[n]`.
pub fn flow_path<X: VectorField + ?Sized>(
    field: &X,
    z0: C,
    times: &[C],
    opts: &FlowOptions,
) -> Result<FlowResult, FlowError> {
    let tr = Tracker {
        opts,
        poles: field.finite_poles(),
        pole_inf: field.pole_at_infinity(),
    };
    let (mut chart, mut y) = if z0.norm() > 2.0 {
        (Chart::Infinity, 1.0 / z0)
    } else {
        (Chart::Plane, z0)
    };
    if tr.near_pole(chart, y, 1e-6).is_some() {
        return Err(FlowError::StartAtPole(z0));
    }
    let mut result = FlowResult {
        endpoint: z0,
        status: FlowStatus::Ok,
        error_estimate: 0.0,
        steps: 0,
        trajectory: Vec::new(),
    };
    if opts.record {
        result.trajectory.push((times.first().copied().unwrap_or_default(), z0));
    }
    for seg in times.windows(2) {
        let (t0, dt) = (seg[0], seg[1] - seg[0]);
        if dt == C::new(0.0, 0.0) {
            continue;
        }
        let mut s = 0.0f64;
        let mut h = 1e-2f64;
        while s < 1.0 {
            if result.steps >= opts.max_steps {
                result.status = FlowStatus::StepFailure { at: chart.to_plane(y) };
                result.endpoint = chart.to_plane(y);
                return Ok(result);
            }
            h = h.min(1.0 - s);
            match dp_step(field, chart, y, h, dt) {
                Ok((ynew, errv)) => {
                    let scale = opts.tol * y.norm().max(ynew.norm()).max(1e-300);
                    let e = errv.norm();
                    let err = if e == 0.0 { 0.0 } else { e / scale };
                    if err <= 1.0 && ynew.re.is_finite() && ynew.im.is_finite() {
                        s += h;
                        y = ynew;
                        result.steps += 1;
                        result.error_estimate += e;
                        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                        h *= factor;
                        if chart == Chart::Plane && y.norm() > 2.0 {
                            chart = Chart::Infinity;
                            y = 1.0 / y;
                        } else if chart == Chart::Infinity && y.norm() > 2.0 {
                            chart = Chart::Plane;
                            y = 1.0 / y;
                        }
                        let z = chart.to_plane(y);
                        if opts.record {
                            result.trajectory.push((t0 + dt * s, z));
                        }
                        if let Some(p) = tr.near_pole(chart, y, 1.0) {
                            result.status = FlowStatus::Separated { pole: p, time: t0 + dt * s };
                            result.endpoint = z;
                            return Ok(result);
                        }
                        if let Some(r) = opts.escape_radius {
                            if z.norm() > r {
                                result.status = FlowStatus::Escaped { at: z };
                                result.endpoint = z;
                                return Ok(result);
                            }
                        }
                    } else {
                        h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.5);
                    }
                }
                Err(_) => {
                    h *= 0.25;
                }
            }
            if h < 1e-15 {
                let z = chart.to_plane(y);
                result.endpoint = z;
                result.status = match tr.nearest_pole_distance(z) {
                    Some((p, d)) if d < 1e-2 => FlowStatus::Separated { pole: p, time: t0 + dt * s },
                    _ => FlowStatus::StepFailure { at: z },
                };
                return Ok(result);
            }
        }
    }
    result.endpoint = chart.to_plane(y);
    Ok(result)
}

/// Integrates `ż = t·X(z)` over the unit parameter interval.
pub fn flow<X: VectorField + ?Sized>(field: &X, z0: C, t: C, opts: &FlowOptions) -> Result<FlowResult, FlowError> {
    flow_path(field, z0, &[C::new(0.0, 0.0), t], opts)
}

pub fn time1_map<X: VectorField + ?Sized>(field: &X, z0: C, opts: &FlowOptions) -> Result<FlowResult, FlowError> {
    flow(field, z0, C::new(1.0, 0.0), opts)
}

/// `∫ dz/R` along the polyline.
pub fn time_form_length<X: VectorField + ?Sized>(field: &X, path: &[C], tol: f64) -> Result<C, FlowError> {
    let integrand = |z: C| -> Result<C, FlowError> {
        match field.eval(z) {
            Ok(v) if v.norm() == 0.0 => Err(FlowError::SingularOnPath(z)),
            Ok(v) => Ok(1.0 / v),
            Err(FieldError::Pole(_)) => Ok(C::new(0.0, 0.0)),
            Err(e) => Err(e.into()),
        }
    };
    let mut total = C::new(0.0, 0.0);
    for seg in path.windows(2) {
        total += integrate_segment(&integrand, seg[0], seg[1], tol).map_err(|e| match e {
            AdaptiveError::Integrand(e) => e,
            AdaptiveError::NotConverged => FlowError::QuadratureNotConverged,
        })?;
    }
    Ok(total)
}

/// Coefficients of `z²`, `z³` in the time-1 map of `(az² + bz³ + …) ∂/∂z`
/// and the formal invariant `−b/a²`.
pub fn jet3_time1(a: C, b: C) -> Result<(C, C, C), FlowError> {
    if a == C::new(0.0, 0.0) {
        return Err(FlowError::ZeroLeadingCoefficient);
    }
    Ok((a, a * a + b, -b / (a * a)))
}

/// Truncated Lie series `Σ_{n≤N} tⁿ/n! (X·ⁿ id)(z)` from Taylor data of `R`.
pub fn lie_series<E, T>(taylor: T, z: C, t: C, order: usize) -> Result<C, E>
where
    T: Fn(C, usize) -> Result<Vec<C>, E>,
{
    let n = order + 2;
    let r = taylor(z, n)?;
    let mut g = vec![C::new(0.0, 0.0); n];
    g[0] = z;
    g[1] = C::new(1.0, 0.0);
    let mut total = z;
    let mut coef = C::new(1.0, 0.0);
    for k in 1..=order {
        let d = series::deriv(&g);
        g = series::mul(&r, &d, n);
        coef = coef * t / k as f64;
        total += coef * g[0];
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

/// Time-1 map `±√(2 + w²)` of `W`, continuous off the slit `i√2·[−1, 1]`.
pub fn polar_time1_oracle(w: C, branch: Branch) -> Result<C, FlowError> {
    if w.re == 0.0 && w.im.abs() <= 2f64.sqrt() {
        return Err(FlowError::OnSlit(w));
    }
    let v = w * (1.0 + 2.0 / (w * w)).sqrt();
    Ok(match branch {
        Branch::Plus => v,
        Branch::Minus => -v,
    })
}

/// Continues a square root along sampled radicand values.
pub fn continue_sqrt(radicands: &[C], start: C) -> C {
    let mut cur = start;
    for r in radicands {
        let s = r.sqrt();
        cur = if (s - cur).norm() <= (s + cur).norm() { s } else { -s };
    }
    cur
}

/// Continuation of `√(2 + w²)` from `w = center + radius` along `turns` loops.
pub fn polar_monodromy(center: C, radius: f64, turns: usize, samples_per_turn: usize) -> (C, C) {
    let w0 = center + radius;
    let start = polar_time1_oracle(w0, Branch::Plus).unwrap_or_else(|_| (2.0 + w0 * w0).sqrt());
    let n = turns * samples_per_turn;
    let rads: Vec<C> = (1..=n)
        .map(|k| {
            let w = center + C::from_polar(radius, 2.0 * PI * k as f64 / samples_per_turn as f64);
            2.0 + w * w
        })
        .collect();
    (start, continue_sqrt(&rads, start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::re;

    #[test]
    fn polar_flow_at_one() {
        let r = flow(&PolarField, re(1.0), re(1.0), &FlowOptions::default()).unwrap();
        assert!(r.is_ok());
        assert!((r.endpoint - re(3f64.sqrt())).norm() < 1e-8);
    }

    #[test]
    fn zero_time_is_identity() {
        let f = ModelField::new(ModelParams::new(0.1, re(0.5)).unwrap());
        let z = C::new(0.3, 0.4);
        let r = flow(&f, z, re(0.0), &FlowOptions::default()).unwrap();
        assert_eq!(r.endpoint, z);
    }

    #[test]
    fn separation_time_for_polar_field() {
        let w0 = C::new(0.0, 0.5);
        let r = flow(&PolarField, w0, re(1.0), &FlowOptions::default()).unwrap();
        match r.status {
            FlowStatus::Separated { time, .. } => assert!((time + w0 * w0 / 2.0).norm() < 1e-7),
            s => panic!("unexpected {s:?}"),
        }
    }

    #[test]
    fn oracle_limit_and_slit() {
        let v = polar_time1_oracle(C::new(1e-12, 0.0), Branch::Plus).unwrap();
        assert!((v - re(2f64.sqrt())).norm() < 1e-10);
        assert!(polar_time1_oracle(C::new(0.0, 1.0), Branch::Plus).is_err());
    }

    #[test]
    fn monodromy_is_involutive() {
        let c = C::new(0.0, 2f64.sqrt());
        let (s, once) = polar_monodromy(c, 0.1, 1, 400);
        let (_, twice) = polar_monodromy(c, 0.1, 2, 400);
        assert!((once + s).norm() < 1e-12);
        assert!((twice - s).norm() < 1e-12);
    }

    #[test]
    fn jet_of_the_model() {
        let l = re(0.2);
        let mu = C::new(0.3, 0.1);
        let (c2, c3, inv) = jet3_time1(l, -l * l * mu).unwrap();
        assert_eq!(c2, l);
        assert!((c3 - l * l * (1.0 - mu)).norm() < 1e-15);
        assert!((inv - mu).norm() < 1e-15);
        assert!(jet3_time1(re(0.0), re(1.0)).is_err());
    }

    #[test]
    fn time_form_of_polar_field() {
        let v = time_form_length(&PolarField, &[re(1.0), re(2.0)], 1e-13).unwrap();
        assert!((v - re(1.5)).norm() < 1e-12);
    }
}
