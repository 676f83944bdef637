//! Global dynamics of the synthesized fields: poles, ramification points of `Δ`,
//! separatrices and spinal graphs, multipliers at `±1`, modulus at `∞`, symmetry laws.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{self, FieldError, FlowError, FlowOptions, FlowStatus, VectorField};
use crate::germs::{self, Center};
use crate::model::{self, ModelError, Side, Wedge};
use crate::quadrature::{integrate_segment, AdaptiveError};
use crate::synthesis::{side_for, SynthesisError, SynthesisResult, BAND_ANGLE};
use crate::{i, par, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlobalizeError {
    #[error("Newton iteration diverged from {0}")]
    NewtonDiverged(C),
    #[error("two seeds converged to the same root {0}")]
    DuplicateRoot(C),
    #[error("no stable direction found at {0}")]
    StableDirectionNotFound(C),
    #[error("time-form length 1 not reached from {0}")]
    LengthNotReached(C),
    #[error("classification failed: {0}")]
    ClassificationFailed(String),
    #[error("no fixed point near {0}")]
    FixedPointNotFound(C),
    #[error("formal invariant is zero")]
    MuZero,
    #[error("function too small on the circle |z - {center}| = {radius}")]
    WindingUndefined { center: C, radius: f64 },
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Germ(#[from] germs::GermError),
}

impl From<FieldError> for GlobalizeError {
    fn from(e: FieldError) -> Self {
        GlobalizeError::Flow(FlowError::Field(e))
    }
}

impl From<crate::cauchyheine::TransformError> for GlobalizeError {
    fn from(e: crate::cauchyheine::TransformError) -> Self {
        GlobalizeError::Synthesis(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleSeed {
    PlusI,
    MinusI,
    ZPlus,
    ZMinus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleReport {
    pub seed: PoleSeed,
    pub seed_point: C,
    pub side: Side,
    pub location: C,
    /// `|1/X₀ + f′|` at the computed pole.
    pub residual: f64,
    pub distance: f64,
    pub radius_bound: f64,
    /// Same pole computed with the other side's field, for the seeds `±i`.
    pub other_side: Option<C>,
    pub side_agreement: Option<f64>,
    /// Zeros of `1/X₀ + f′` inside the bound disc by the argument principle.
    pub zero_count: Option<i64>,
    pub winding: Option<i64>,
    /// Residue `c` of `X^side ≈ c/(z − p)`.
    pub residue: C,
}

impl PoleReport {
    pub fn within_bound(&self) -> bool {
        self.distance < self.radius_bound
    }
}

fn g_of(r: &SynthesisResult, z: C, side: Side) -> Result<C, GlobalizeError> {
    Ok(r.inv_xf(z, side)?)
}

/// `d/dz (1/X₀ + f′)` by central differences.
fn g_prime(r: &SynthesisResult, z: C, side: Side) -> Result<C, GlobalizeError> {
    let h = 1e-5 * (1.0 + z.norm());
    let hc = C::new(h, 0.0);
    let hi = C::new(0.0, h);
    let dx = (g_of(r, z + hc, side)? - g_of(r, z - hc, side)?) / (2.0 * h);
    let dy = (g_of(r, z + hi, side)? - g_of(r, z - hi, side)?) / (2.0 * h);
    Ok(0.5 * (dx - i() * dy))
}

/// Poles of `X±` near `±i` and `z±`.
pub fn find_poles(r: &SynthesisResult) -> Result<Vec<PoleReport>, GlobalizeError> {
    let p = &r.params;
    let sl = p.lambda.sqrt();
    let mut seeds = vec![(PoleSeed::PlusI, i(), 3.0 * sl), (PoleSeed::MinusI, -i(), 3.0 * sl)];
    if !p.is_mu_zero() {
        let (zp, zm) = p.z_pm();
        seeds.push((PoleSeed::ZPlus, zp, 5.0 * sl));
        seeds.push((PoleSeed::ZMinus, zm, 5.0 * sl));
    }
    let mut out: Vec<PoleReport> = Vec::new();
    for (seed, at, bound) in seeds {
        let side = match seed {
            PoleSeed::ZMinus => Side::Minus,
            _ => Side::Plus,
        };
        let (loc, res) = r.pole_near(at, side)?;
        let other = match seed {
            PoleSeed::PlusI | PoleSeed::MinusI => Some(r.pole_near(at, Side::Minus)?.0),
            _ => None,
        };
        if let Some(prev) = out.iter().find(|q| (q.location - loc).norm() < 1e-10) {
            return Err(GlobalizeError::DuplicateRoot(prev.location));
        }
        let pole_gap = p
            .poles()
            .into_iter()
            .map(|q| (q - at).norm())
            .filter(|d| *d > 1e-12)
            .fold(f64::INFINITY, f64::min);
        let radius = bound.min(0.5 * pole_gap);
        let (zero_count, winding) = match zero_count(r, at, radius, side, 256) {
            Ok((z, w)) => (Some(z), Some(w)),
            Err(GlobalizeError::WindingUndefined { .. }) => (None, None),
            Err(e) => return Err(e),
        };
        out.push(PoleReport {
            seed,
            seed_point: at,
            side,
            location: loc,
            residual: res,
            distance: (loc - at).norm(),
            radius_bound: bound,
            other_side: other,
            side_agreement: other.map(|o| (o - loc).norm()),
            zero_count,
            winding,
            residue: 1.0 / g_prime(r, loc, side)?,
        });
    }
    Ok(out)
}

/// Distance from `z` to the nearest other singular point of `X₀`.
fn min_gap(z: C, p: &model::ModelParams) -> f64 {
    p.poles()
        .into_iter()
        .chain(p.zeros().into_iter().map(|(q, _)| q))
        .map(|q| (q - z).norm())
        .filter(|d| *d > 1e-12)
        .fold(f64::INFINITY, f64::min)
}

/// Winding number of `g` around `|z − center| = radius`.
pub fn winding<F>(g: F, center: C, radius: f64, samples: usize) -> Result<i64, GlobalizeError>
where
    F: Fn(C) -> Result<C, GlobalizeError>,
{
    let n = samples.max(8);
    let vals: Result<Vec<C>, GlobalizeError> = (0..=n)
        .map(|k| g(center + C::from_polar(radius, 2.0 * PI * k as f64 / n as f64)))
        .collect();
    let vals = vals?;
    let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if vals.iter().any(|v| v.norm() < 1e-8 * scale.max(1e-300)) {
        return Err(GlobalizeError::WindingUndefined { center, radius });
    }
    let total: f64 = vals.windows(2).map(|w| (w[1] / w[0]).arg()).sum();
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Zeros of `1/X₀ + f′` in the disc: winding plus the known poles of `1/X₀` inside.
pub fn zero_count(
    r: &SynthesisResult,
    center: C,
    radius: f64,
    side: Side,
    samples: usize,
) -> Result<(i64, i64), GlobalizeError> {
    let w = winding(|z| g_of(r, z, side), center, radius, samples)?;
    let inside: i64 = r
        .params
        .zeros()
        .iter()
        .filter(|(q, _)| (q - center).norm() < radius)
        .map(|(_, m)| *m as i64)
        .sum();
    Ok((w + inside, w))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// Labeled residuals `|σ(p_i) − p_{−i}|` and `|σ(p₊) − p₋|`.
    pub labeled: Vec<(String, f64)>,
    /// Hausdorff distance between the pole set and its image by `σ`.
    pub set_distance: f64,
}

pub fn sigma_pole_symmetry(poles: &[PoleReport]) -> SymmetryReport {
    let find = |s: PoleSeed| poles.iter().find(|p| p.seed == s).map(|p| p.location);
    let mut labeled = Vec::new();
    if let (Some(a), Some(b)) = (find(PoleSeed::PlusI), find(PoleSeed::MinusI)) {
        labeled.push(("i".to_string(), (model::sigma(a) - b).norm()));
    }
    if let (Some(a), Some(b)) = (find(PoleSeed::ZPlus), find(PoleSeed::ZMinus)) {
        labeled.push(("z".to_string(), (model::sigma(a) - b).norm()));
    }
    let set: Vec<C> = poles.iter().map(|p| p.location).collect();
    let img: Vec<C> = set.iter().map(|z| model::sigma(*z)).collect();
    SymmetryReport {
        labeled,
        set_distance: hausdorff(&set, &img),
    }
}

pub fn hausdorff(a: &[C], b: &[C]) -> f64 {
    let d = |x: &[C], y: &[C]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    d(a, b).max(d(b, a))
}

/// `∫_a^b 1/X₀ + f(b) − f(a)`: the time-form length of `X^side` along a segment.
fn time_length(r: &SynthesisResult, a: C, b: C, side: Side) -> Result<C, GlobalizeError> {
    let p = r.params;
    let g = |z: C| model::inv_x0(z, &p);
    let base = match integrate_segment(&g, a, b, 1e-14) {
        Ok(v) => v,
        Err(AdaptiveError::Integrand(e)) => return Err(e.into()),
        Err(AdaptiveError::NotConverged) => return Err(GlobalizeError::Flow(FlowError::QuadratureNotConverged)),
    };
    if r.is_trivial() {
        return Ok(base);
    }
    Ok(base + r.eval_f(b, side)? - r.eval_f(a, side)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamificationReport {
    pub pole: C,
    pub side: Side,
    pub residue: C,
    /// The two points sent onto the pole by `Δ`.
    pub points: [C; 2],
    /// `|∫_p^z dz/X + 1|` at each point.
    pub residuals: [f64; 2],
    /// Separation time of the forward flow from each point.
    pub separation_times: [Option<C>; 2],
    pub spacing: f64,
}

/// Points at time-form distance `1` upstream of `pole`.
pub fn ramification_points(r: &SynthesisResult, pole: C, side: Side) -> Result<RamificationReport, GlobalizeError> {
    let c = 1.0 / g_prime(r, pole, side)?;
    let d = (-2.0 * c).sqrt();
    let mut points = [C::new(0.0, 0.0); 2];
    let mut residuals = [0.0; 2];
    for (k, s) in [1.0, -1.0].into_iter().enumerate() {
        let mut z = pole + s * d;
        let mut ok = false;
        for _ in 0..60 {
            let fz = time_length(r, pole, z, side)? + 1.0;
            let step = fz / g_of(r, z, side)?;
            z -= step;
            if !(z.re.is_finite() && z.im.is_finite()) || (z - pole).norm() > 4.0 * d.norm() + 1.0 {
                return Err(GlobalizeError::NewtonDiverged(pole + s * d));
            }
            if step.norm() < 1e-14 * (1.0 + z.norm()) {
                ok = true;
                break;
            }
        }
        let res = (time_length(r, pole, z, side)? + 1.0).norm();
        if !ok && res > 1e-10 {
            return Err(GlobalizeError::LengthNotReached(pole + s * d));
        }
        points[k] = z;
        residuals[k] = res;
    }
    let field = r.sector_field(side);
    let mut opts = r.flow_options();
    opts.pole_guard = 1e-3 * d.norm() / (1.0 + pole.norm());
    let separation_times = points.map(|z| match flow::time1_map(&field, z, &opts) {
        Ok(res) => match res.status {
            FlowStatus::Separated { pole: q, time } if (q - pole).norm() < 1e-6 => Some(time),
            _ => None,
        },
        Err(_) => None,
    });
    Ok(RamificationReport {
        pole,
        side,
        residue: c,
        spacing: (points[0] - points[1]).norm(),
        points,
        residuals,
        separation_times,
    })
}

/// Roots of `(z² + λz − 1)² + 4z²`, ramification points of the model with `μ = 0`.
pub fn mu_zero_ramification_oracle(lambda: f64) -> Vec<C> {
    let mut out = Vec::new();
    for s in [-2.0, 2.0] {
        let b = C::new(lambda, s);
        let disc = (b * b + 4.0).sqrt();
        out.push((-b + disc) / 2.0);
        out.push((-b - disc) / 2.0);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyReport {
    pub center: C,
    pub radius: f64,
    pub start: C,
    /// `Δ(start)` by direct flow, for comparison with the continued value.
    pub start_by_flow: Option<C>,
    pub after_one_loop: C,
    pub after_two_loops: C,
}

impl MonodromyReport {
    pub fn flips(&self) -> bool {
        (self.after_one_loop - self.start).norm() > 1e-6 * (1.0 + self.start.norm())
    }

    pub fn returns(&self) -> bool {
        (self.after_two_loops - self.start).norm() < 1e-8 * (1.0 + self.start.norm())
    }
}

/// Continues `Δ` twice around a loop centred at a ramification point.
pub fn monodromy(r: &SynthesisResult, ram: &RamificationReport, which: usize, steps: usize) -> Result<MonodromyReport, GlobalizeError> {
    let side = ram.side;
    let pole = ram.pole;
    let center = ram.points[which.min(1)];
    let radius = 0.3 * (center - pole).norm();
    let n = steps.max(16);
    let solve = |target: C, guess: C| -> Result<C, GlobalizeError> {
        let mut w = guess;
        for _ in 0..60 {
            let step = (time_length(r, pole, w, side)? - target) / g_of(r, w, side)?;
            w -= step;
            if step.norm() < 1e-15 * (1.0 + w.norm()) {
                return Ok(w);
            }
        }
        if (time_length(r, pole, w, side)? - target).norm() < 1e-10 {
            Ok(w)
        } else {
            Err(GlobalizeError::NewtonDiverged(guess))
        }
    };
    let z0 = center + radius;
    let mut t = time_length(r, pole, z0, side)? + 1.0;
    let mut w = solve(t, pole + (2.0 * ram.residue * t).sqrt())?;
    let start = w;
    let start_by_flow = r.delta_map_side(z0, side).ok();
    let mut after_one = w;
    let mut z = z0;
    for k in 1..=2 * n {
        let znext = center + C::from_polar(radius, 2.0 * PI * k as f64 / n as f64);
        t += time_length(r, z, znext, side)?;
        w = solve(t, w)?;
        z = znext;
        if k == n {
            after_one = w;
        }
    }
    Ok(MonodromyReport {
        center,
        radius,
        start,
        start_by_flow,
        after_one_loop: after_one,
        after_two_loops: w,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "at", rename_all = "snake_case")]
pub enum Endpoint {
    Zero(C),
    Infinity,
    Pole(C),
    Unresolved(C),
}

impl Endpoint {
    pub fn vertex(&self) -> Option<Vertex> {
        match self {
            Endpoint::Zero(q) => Some(Vertex::Finite(*q)),
            Endpoint::Infinity => Some(Vertex::Infinity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "at", rename_all = "snake_case")]
pub enum Vertex {
    Finite(C),
    Infinity,
}

type VertexKey = (i64, i64, bool);

impl Vertex {
    fn key(&self) -> VertexKey {
        match self {
            Vertex::Finite(z) => ((z.re * 1e6).round() as i64, (z.im * 1e6).round() as i64, false),
            Vertex::Infinity => (0, 0, true),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceOptions {
    /// Distance to a zero counted as arrival; `|z| > 1/eq_tol` counts as `∞`.
    pub eq_tol: f64,
    pub max_time: f64,
    pub flow_tol: f64,
    /// Offset from a pole along a separatrix direction, relative to the pole spacing.
    pub offset: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            eq_tol: 1e-3,
            max_time: 1e9,
            flow_tol: 1e-10,
            offset: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixArc {
    pub pole: C,
    pub residue: C,
    pub direction: C,
    pub stable: bool,
    pub end: Endpoint,
    pub polyline: Vec<C>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinalEdge {
    pub from: Vertex,
    pub to: Vertex,
    /// Seeds whose trajectory realizes this edge.
    pub count: usize,
    pub polyline: Vec<C>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinalGraph {
    pub vertices: Vec<Vertex>,
    pub poles: Vec<(C, C)>,
    pub separatrices: Vec<SeparatrixArc>,
    pub edges: Vec<SpinalEdge>,
    /// Seeds whose trajectory did not reach a stationary point in either direction.
    pub unresolved: usize,
}

impl SpinalGraph {
    /// Edge multiset as `(from, to) → count` of distinct edges.
    pub fn edge_set(&self) -> Vec<(Vertex, Vertex)> {
        self.edges.iter().map(|e| (e.from, e.to)).collect()
    }
}

/// Residue of `X` at a simple pole, by the mean of `X(z)(z − p)` on a small circle.
pub fn residue_at<X: VectorField + ?Sized>(x: &X, pole: C, radius: f64) -> Result<C, GlobalizeError> {
    let n = 32;
    let mut s = C::new(0.0, 0.0);
    for k in 0..n {
        let u = C::from_polar(radius, 2.0 * PI * (k as f64 + 0.5) / n as f64);
        s += x.eval(pole + u)? * u;
    }
    Ok(s / n as f64)
}

/// Follows the real-time trajectory from `z0` forward or backward until it settles.
pub fn trace_to_end<X: VectorField + ?Sized>(
    x: &X,
    z0: C,
    forward: bool,
    opts: &TraceOptions,
    flow_opts: &FlowOptions,
) -> (Endpoint, Vec<C>) {
    let zeros = x.finite_zeros();
    let inf_zero = x.zero_at_infinity();
    let mut fo = *flow_opts;
    fo.record = true;
    let sign = if forward { 1.0 } else { -1.0 };
    let mut z = z0;
    let mut line = vec![z0];
    let mut elapsed = 0.0;
    let mut chunk = 1.0;
    let settled = |z: C| -> Option<Endpoint> {
        if let Some((q, _)) = zeros.iter().find(|(q, _)| (z - q).norm() < opts.eq_tol) {
            return Some(Endpoint::Zero(*q));
        }
        (inf_zero && z.norm() > 1.0 / opts.eq_tol).then_some(Endpoint::Infinity)
    };
    while elapsed < opts.max_time {
        let res = match flow::flow(x, z, C::new(sign * chunk, 0.0), &fo) {
            Ok(r) => r,
            Err(_) => return (Endpoint::Unresolved(z), line),
        };
        let stride = (res.trajectory.len() / 64).max(1);
        line.extend(res.trajectory.iter().skip(1).step_by(stride).map(|(_, w)| *w));
        z = res.endpoint;
        line.push(z);
        if let Some(e) = settled(z) {
            return (e, line);
        }
        match res.status {
            FlowStatus::Ok => {}
            FlowStatus::Separated { pole, .. } => return (Endpoint::Pole(pole), line),
            _ => return (Endpoint::Unresolved(z), line),
        }
        elapsed += chunk;
        chunk *= 2.0;
    }
    (Endpoint::Unresolved(z), line)
}

/// Separatrices through every finite pole plus one trajectory per seed, deduplicated into edges.
pub fn trace_separatrices<X: VectorField + ?Sized>(
    x: &X,
    seeds: &[C],
    opts: &TraceOptions,
) -> Result<SpinalGraph, GlobalizeError> {
    let poles = x.finite_poles();
    let mut singular: Vec<C> = poles.clone();
    singular.extend(x.finite_zeros().iter().map(|(q, _)| *q));
    let gap = |p: C| {
        singular
            .iter()
            .map(|q| (q - p).norm())
            .filter(|d| *d > 1e-12)
            .fold(1.0f64, f64::min)
    };
    let mut residues = Vec::new();
    let mut separatrices = Vec::new();
    for &p in &poles {
        let g = gap(p);
        let c = residue_at(x, p, 0.01 * g)?;
        if c.norm() == 0.0 || !c.re.is_finite() {
            return Err(GlobalizeError::ClassificationFailed(format!("no simple pole at {p}")));
        }
        residues.push((p, c));
        let eps = opts.offset * g;
        let mut fo = FlowOptions::with_tol(opts.flow_tol);
        fo.pole_guard = 1e-3 * eps / (1.0 + p.norm());
        let unstable = (2.0 * c).sqrt();
        let stable = (-2.0 * c).sqrt();
        let dirs = [
            (unstable / unstable.norm(), false),
            (-unstable / unstable.norm(), false),
            (stable / stable.norm(), true),
            (-stable / stable.norm(), true),
        ];
        let arcs: Vec<SeparatrixArc> = par::map(&dirs, |&(d, is_stable)| {
            let start = p + eps * d;
            let (end, mut line) = trace_to_end(x, start, !is_stable, opts, &fo);
            line.insert(0, p);
            SeparatrixArc {
                pole: p,
                residue: c,
                direction: d,
                stable: is_stable,
                end,
                polyline: line,
            }
        });
        separatrices.extend(arcs);
    }
    let fo = FlowOptions::with_tol(opts.flow_tol);
    let traced: Vec<(Endpoint, Vec<C>, Endpoint, Vec<C>)> = par::map(seeds, |&s| {
        let (a, back) = trace_to_end(x, s, false, opts, &fo);
        let (b, fwd) = trace_to_end(x, s, true, opts, &fo);
        (a, back, b, fwd)
    });
    let mut edges: BTreeMap<(VertexKey, VertexKey), SpinalEdge> = BTreeMap::new();
    let mut unresolved = 0;
    for (a, back, b, fwd) in traced {
        match (a.vertex(), b.vertex()) {
            (Some(from), Some(to)) => {
                edges
                    .entry((from.key(), to.key()))
                    .and_modify(|e| e.count += 1)
                    .or_insert_with(|| {
                        let mut line: Vec<C> = back.into_iter().rev().collect();
                        line.extend(fwd.into_iter().skip(1));
                        SpinalEdge {
                            from,
                            to,
                            count: 1,
                            polyline: line,
                        }
                    });
            }
            _ if matches!(a, Endpoint::Unresolved(_)) && matches!(b, Endpoint::Unresolved(_)) => unresolved += 1,
            _ => {}
        }
    }
    let mut vertices: Vec<Vertex> = x.finite_zeros().iter().map(|(q, _)| Vertex::Finite(*q)).collect();
    if x.zero_at_infinity() {
        vertices.push(Vertex::Infinity);
    }
    Ok(SpinalGraph {
        vertices,
        poles: residues,
        separatrices,
        edges: edges.into_values().collect(),
        unresolved,
    })
}

/// Deterministic polar grid of seeds avoiding the real and imaginary axes.
pub fn default_seeds(rings: &[f64], per_ring: usize) -> Vec<C> {
    let mut out = Vec::new();
    for (k, r) in rings.iter().enumerate() {
        for j in 0..per_ring {
            let a = 2.0 * PI * (j as f64 + 0.5 + 0.25 * (k % 2) as f64) / per_ring as f64;
            out.push(C::from_polar(*r, a));
        }
    }
    out
}

/// Seeds on a small ring around every finite zero of `x`, so that thin basins are sampled.
pub fn seeds_near_zeros<X: VectorField + ?Sized>(x: &X, per_zero: usize) -> Vec<C> {
    let zeros = x.finite_zeros();
    let mut marks: Vec<C> = x.finite_poles();
    marks.extend(zeros.iter().map(|(q, _)| *q));
    let mut out = Vec::new();
    for (q, _) in &zeros {
        let gap = marks
            .iter()
            .map(|m| (m - q).norm())
            .filter(|d| *d > 1e-12)
            .fold(1.0f64, f64::min);
        for j in 0..per_zero {
            let a = 2.0 * PI * (j as f64 + 0.5) / per_zero as f64;
            out.push(q + C::from_polar(0.3 * gap, a));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPoint {
    PlusOne,
    MinusOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierReport {
    pub point: FixedPoint,
    pub side: Side,
    pub radius: f64,
    /// `Δ′` by a Cauchy integral of the computed `Δ`.
    pub multiplier: C,
    /// `exp(X₀′)` with `X₀′` by central differences.
    pub linear_oracle: C,
    /// `exp(∓1/μ)`, sign following the point.
    pub signed_convention: C,
    /// `exp(−1/μ)` at both points.
    pub uniform_convention: C,
    /// `s` with `|multiplier| = exp(−s·Re(1/μ))`, when `Re μ ≠ 0`.
    pub sign: Option<f64>,
}

pub fn multiplier_at(r: &SynthesisResult, point: FixedPoint, samples: usize) -> Result<MultiplierReport, GlobalizeError> {
    let p = &r.params;
    if p.is_mu_zero() {
        return Err(GlobalizeError::MuZero);
    }
    let (z0, s) = match point {
        FixedPoint::PlusOne => (C::new(1.0, 0.0), 1.0),
        FixedPoint::MinusOne => (C::new(-1.0, 0.0), -1.0),
    };
    let side = side_for(z0);
    let d0 = r.delta_map_side(z0, side)?;
    if (d0 - z0).norm() > 1e-8 {
        return Err(GlobalizeError::FixedPointNotFound(z0));
    }
    let radius = 0.1 * min_gap(z0, p).min(1.0);
    let n = samples.max(16);
    let pts: Vec<C> = (0..n)
        .map(|k| z0 + C::from_polar(radius, 2.0 * PI * (k as f64 + 0.5) / n as f64))
        .collect();
    let vals: Result<Vec<C>, SynthesisError> = par::map(&pts, |&z| r.delta_map_side(z, side)).into_iter().collect();
    let vals = vals?;
    let m = pts.iter().zip(&vals).map(|(z, w)| (w - z0) / (z - z0)).sum::<C>() / n as f64;
    let xd = model::x0_derivative(z0, p)?;
    let inv_mu = 1.0 / p.mu;
    Ok(MultiplierReport {
        point,
        side,
        radius,
        multiplier: m,
        linear_oracle: xd.exp(),
        signed_convention: (-s * inv_mu).exp(),
        uniform_convention: (-inv_mu).exp(),
        sign: (inv_mu.re.abs() > 1e-14).then(|| -m.norm().ln() / inv_mu.re),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfinitySample {
    pub z: C,
    pub wedge: Wedge,
    /// `log H⁺_{act f}(z)`.
    pub log_plus: C,
    /// `log H⁻_{act f}(z)`.
    pub log_minus: C,
    /// `log ψ_f(H⁻_{act f}(z))`.
    pub composed: C,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinityReport {
    pub samples: Vec<InfinitySample>,
    pub max_residual: f64,
    /// `max |act(act f) − f|` on the samples.
    pub involution_residual: f64,
}

/// Checks `ψ_f ∘ ψ_{act f} = id` on the band between the staggered rays.
pub fn modulus_at_infinity(r: &SynthesisResult, n_samples: usize) -> Result<InfinityReport, GlobalizeError> {
    let n = n_samples.max(2);
    let mut pts = Vec::new();
    for k in 0..n {
        let rho = (0.6f64.ln() * (1.0 - 2.0 * k as f64 / (n - 1) as f64)).exp();
        pts.push(C::from_polar(rho, BAND_ANGLE));
        pts.push(C::from_polar(rho, -BAND_ANGLE));
    }
    let two_pi_i = 2.0 * PI * i();
    let p = r.params;
    let one = |z: C| -> Result<(InfinitySample, f64), GlobalizeError> {
        let wedge = model::wedge_of(z).ok_or(ModelError::BranchCut { z, side: Side::Plus })?;
        let w = model::sigma(z);
        let l1 = model::log_h0(z, Side::Plus, &p)? + two_pi_i * r.eval_f(w, Side::Minus)?;
        let l2 = model::log_h0(z, Side::Minus, &p)? + two_pi_i * r.eval_f(w, Side::Plus)?;
        // determination shifts of H₀ under σ
        let d1 = model::log_h0(w, Side::Minus, &p)? - model::log_h0(z, Side::Plus, &p)?;
        let d2 = model::log_h0(w, Side::Plus, &p)? - model::log_h0(z, Side::Minus, &p)?;
        let center = match wedge {
            Wedge::Zero => Center::Zero,
            Wedge::Infinity => Center::Infinity,
        };
        let composed = germs::log_psi(&r.modulus, center, l2 + d2)? - d1;
        let back = r.eval_f(model::sigma(w), Side::Plus)? - r.eval_f(z, Side::Plus)?;
        Ok((
            InfinitySample {
                z,
                wedge,
                log_plus: l1,
                log_minus: l2,
                composed,
                residual: ((composed - l1).exp() - 1.0).norm(),
            },
            back.norm(),
        ))
    };
    let res: Result<Vec<(InfinitySample, f64)>, GlobalizeError> = par::map(&pts, |&z| one(z)).into_iter().collect();
    let res = res?;
    Ok(InfinityReport {
        max_residual: res.iter().map(|s| s.0.residual).fold(0.0, f64::max),
        involution_residual: res.iter().map(|s| s.1).fold(0.0, f64::max),
        samples: res.into_iter().map(|s| s.0).collect(),
    })
}

/// Sample points inside `V^side`, away from the sector boundary.
pub fn sector_samples(side: Side, n: usize) -> Vec<C> {
    let radii = [0.35, 0.7, 1.0, 1.45, 2.8];
    let span = 2.0 * model::OPENING - 0.4;
    (0..n)
        .map(|k| {
            let a = side.midline() - 0.5 * span + span * (k as f64 + 0.5) / n as f64;
            C::from_polar(radii[k % radii.len()], a)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaLawReport {
    /// `max |f^±∘σ + f^∓|`.
    pub f_residual: f64,
    /// Common limit of `f±` at `∞`; zero for the half-power kernel.
    pub f_at_infinity: C,
    /// `max |f^±∘σ + f^∓ − f(∞)|`.
    pub f_residual_shifted: f64,
    /// `max |σ*X^∓ − X_{act f}^±|` with `act f` built literally.
    pub field_identity_residual: f64,
    /// `max |σ*X^∓ − X^±_{−f}|`: the field identity combined with the law on `f`.
    pub field_symmetry_residual: f64,
    pub samples: usize,
}

pub fn sigma_law(r: &SynthesisResult, n: usize) -> Result<SigmaLawReport, GlobalizeError> {
    let p = r.params;
    let mut pts: Vec<(C, Side)> = sector_samples(Side::Plus, n).into_iter().map(|z| (z, Side::Plus)).collect();
    pts.extend(sector_samples(Side::Minus, n).into_iter().map(|z| (z, Side::Minus)));
    let f_inf = -r.f.transform.lambda_at_zero;
    let one = |&(z, side): &(C, Side)| -> Result<(f64, f64, f64, f64), GlobalizeError> {
        let w = model::sigma(z);
        let other = side.other();
        let sum = r.eval_f(w, other)? + r.eval_f(z, side)?;
        // σ*X^other at z, where σ′(z) = 1/z²
        let ds = 1.0 / (z * z);
        let pulled = r.eval_xf(w, other)? / ds;
        let x0 = model::eval_x0(z, &p)?;
        let act_deriv = r.eval_f_deriv(w, other)? * ds;
        let literal = x0 / (1.0 + x0 * act_deriv);
        let minus_f = x0 / (1.0 - x0 * r.eval_f_deriv(z, side)?);
        let scale = 1.0 + pulled.norm();
        Ok((
            sum.norm(),
            (pulled - literal).norm() / scale,
            (pulled - minus_f).norm() / scale,
            (sum - f_inf).norm(),
        ))
    };
    let res: Result<Vec<(f64, f64, f64, f64)>, GlobalizeError> = par::map(&pts, one).into_iter().collect();
    let res = res?;
    Ok(SigmaLawReport {
        f_residual: res.iter().map(|t| t.0).fold(0.0, f64::max),
        f_at_infinity: f_inf,
        f_residual_shifted: res.iter().map(|t| t.3).fold(0.0, f64::max),
        field_identity_residual: res.iter().map(|t| t.1).fold(0.0, f64::max),
        field_symmetry_residual: res.iter().map(|t| t.2).fold(0.0, f64::max),
        samples: res.len(),
    })
}

/// `max |conj f^side(conj z) − f^side(z)|` on sector samples.
pub fn real_symmetry(r: &SynthesisResult, n: usize) -> Result<f64, GlobalizeError> {
    let mut pts: Vec<(C, Side)> = sector_samples(Side::Plus, n).into_iter().map(|z| (z, Side::Plus)).collect();
    pts.extend(sector_samples(Side::Minus, n).into_iter().map(|z| (z, Side::Minus)));
    let res: Result<Vec<f64>, GlobalizeError> = par::map(&pts, |&(z, side)| {
        Ok((r.eval_f(z.conj(), side)?.conj() - r.eval_f(z, side)?).norm())
    })
    .into_iter()
    .collect();
    Ok(res?.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{ModelField, PolarField};
    use crate::germs::{Germ, ModulusData};
    use crate::model::ModelParams;
    use crate::re;
    use crate::synthesis::{synthesize, SynthOptions};

    #[test]
    fn winding_of_identity_and_inverse() {
        let id = |z: C| -> Result<C, GlobalizeError> { Ok(z) };
        assert_eq!(winding(id, C::new(0.0, 0.0), 1.0, 64).unwrap(), 1);
        let inv = |z: C| -> Result<C, GlobalizeError> { Ok(1.0 / (z * z)) };
        assert_eq!(winding(inv, C::new(0.0, 0.0), 1.0, 64).unwrap(), -2);
    }

    #[test]
    fn ramification_oracle_roots() {
        let l = 0.01;
        for z in mu_zero_ramification_oracle(l) {
            let q = z * z + l * z - 1.0;
            assert!((q * q + 4.0 * z * z).norm() < 1e-12);
        }
    }

    #[test]
    fn model_poles_mu_zero() {
        let r = synthesize(&ModulusData::trivial(re(0.0)), 1e-4, &SynthOptions::default()).unwrap();
        let poles = find_poles(&r).unwrap();
        assert_eq!(poles.len(), 2);
        assert!((poles[0].location - i()).norm() < 1e-14);
        assert_eq!(poles[0].zero_count, Some(1));
        // X₀ = λz²/(1+z²) has residue λ/(2i)·(±i)² at ±i
        assert!((poles[0].residue - re(-1e-4) / (2.0 * i())).norm() < 1e-9);
    }

    #[test]
    fn polar_field_separatrices() {
        let g = trace_separatrices(&PolarField, &[], &TraceOptions::default()).unwrap();
        assert_eq!(g.separatrices.len(), 4);
        for s in &g.separatrices {
            if s.stable {
                assert!(s.direction.re.abs() < 1e-12);
            } else {
                assert!(s.direction.im.abs() < 1e-12);
            }
            assert_eq!(s.end, Endpoint::Infinity);
        }
    }

    fn forced(mu: f64, c0: f64, cinf: f64) -> SynthesisResult {
        let m = ModulusData::new(
            re(mu),
            Germ::linear(Center::Zero, re(c0)),
            Germ::linear(Center::Infinity, re(cinf)),
        )
        .unwrap();
        let opts = SynthOptions {
            force: true,
            ..Default::default()
        };
        synthesize(&m, 4.0, &opts).unwrap()
    }

    #[test]
    fn modulus_at_infinity_nontrivial() {
        let r = forced(0.0, 0.3, 0.0);
        assert!(r.diagnostics.sampled_f_norm > 1e-4);
        let rep = modulus_at_infinity(&r, 6).unwrap();
        assert!(rep.max_residual < 1e-10, "{}", rep.max_residual);
        assert!(rep.involution_residual < 1e-12);
    }

    #[test]
    fn sigma_law_shifted_and_field_identity() {
        let r = forced(0.3, 0.05, -0.05);
        let s = sigma_law(&r, 6).unwrap();
        assert!((s.f_residual - s.f_at_infinity.norm()).abs() < 1e-2 * s.f_residual);
        assert!(s.f_residual_shifted < 1e-3 * s.f_residual);
        assert!(s.field_identity_residual < 1e-12);
    }

    #[test]
    fn real_data_gives_real_f() {
        let r = forced(0.3, 0.05, -0.05);
        assert!(r.diagnostics.sampled_f_norm > 1e-6);
        assert!(real_symmetry(&r, 6).unwrap() < 1e-12);
        let r = forced(0.0, 0.3, 0.0);
        assert!(real_symmetry(&r, 6).unwrap() > 1e-8);
    }

    #[test]
    fn multiplier_matches_linear_part() {
        let m = ModulusData::new(
            C::new(0.5, 0.2),
            Germ::linear(Center::Zero, re(0.05)),
            Germ::zero(Center::Infinity),
        )
        .unwrap();
        let opts = SynthOptions {
            force: true,
            ..Default::default()
        };
        let r = synthesize(&m, 1e-4, &opts).unwrap();
        for fp in [FixedPoint::PlusOne, FixedPoint::MinusOne] {
            let rep = multiplier_at(&r, fp, 64).unwrap();
            let rel = (rep.multiplier - rep.linear_oracle).norm() / rep.linear_oracle.norm();
            assert!(rel < 1e-6, "{fp:?}: {rel:e}");
            assert!((rep.linear_oracle - rep.uniform_convention).norm() < 1e-10);
        }
    }

    #[test]
    fn model_spinal_graph_has_sinks_at_fixed_points() {
        let p = ModelParams::new(0.1, re(0.5)).unwrap();
        let x = ModelField::new(p);
        let seeds = [default_seeds(&[0.3, 0.8, 1.5, 3.0], 12), seeds_near_zeros(&x, 8)].concat();
        let g = trace_separatrices(&x, &seeds, &TraceOptions::default()).unwrap();
        let edges = g.edge_set();
        let one = Vertex::Finite(re(1.0));
        let minus_one = Vertex::Finite(re(-1.0));
        assert!(edges.iter().any(|(_, to)| *to == one));
        assert!(edges.iter().any(|(_, to)| *to == minus_one));
        assert!(edges.iter().all(|(from, _)| *from != one && *from != minus_one));
        assert_eq!(g.unresolved, 0);
    }
}
