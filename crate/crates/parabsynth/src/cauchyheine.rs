//! Ray quadrature for the Cauchy–Heine transform `Λ_f` and the operator
//! `CH(f) = Λ_f − Λ_f(0)`, with residue bookkeeping for staggered rays.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::germs::{Center, Germ, GermError, ModulusData};
use crate::model::{self, ModelError, ModelParams, Side, Wedge};
use crate::{i, par, C};

/// Angles of the two rays used in the upper wedge; the lower wedge mirrors them.
pub const UPPER_RAY_ANGLES: [f64; 2] = [17.0 * PI / 32.0, 19.0 * PI / 32.0];
/// Minimal angular gap between an evaluation point and a residue-free ray.
pub const MIN_RAY_GAP: f64 = PI / 64.0;
/// Truncation depth of the ray range, in units of `log|H₀|`.
pub const DEFAULT_DROP: f64 = 40.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("data not adapted on the {wedge:?} wedge: sup {sup:e} against radius {radius:e}")]
    NotAdapted { wedge: Wedge, sup: f64, radius: f64 },
    #[error("ray at angle {angle} under-resolved, endpoint ratio {ratio:e}")]
    QuadratureUnderResolved { angle: f64, ratio: f64 },
    #[error("residue equation did not converge at {0}")]
    ResidueNotConverged(C),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Germ(#[from] GermError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `1/(ξ − z)`.
    Cauchy,
    /// `√z/(√ξ(ξ − z))`, square roots cut opposite to the sector midline.
    HalfPower,
}

/// Trapezoid rule in `s = ln t` on the ray `t e^{iθ}`, `t > 0`, oriented outward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayQuadrature {
    pub angle: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub nodes: Vec<C>,
    /// `dξ` weights, `ξ_k·Δs`.
    pub weights: Vec<C>,
}

impl RayQuadrature {
    pub fn new(angle: f64, s_min: f64, s_max: f64, n: usize) -> Self {
        let n = n.max(2);
        let ds = (s_max - s_min) / (n - 1) as f64;
        let dir = C::from_polar(1.0, angle);
        let nodes: Vec<C> = (0..n).map(|k| dir * (s_min + k as f64 * ds).exp()).collect();
        let weights = nodes
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let end = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                x * ds * end
            })
            .collect();
        RayQuadrature {
            angle,
            s_min,
            s_max,
            nodes,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn wedge(&self) -> Wedge {
        if self.angle > 0.0 {
            Wedge::Zero
        } else {
            Wedge::Infinity
        }
    }
}

fn proxy(angle: f64, s: f64, p: &ModelParams) -> f64 {
    match model::log_h0(C::from_polar(s.exp(), angle), Side::Plus, p) {
        Ok(l) => -l.re.abs(),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Range of `s` outside which `|log|H₀⁺||` exceeds its minimum along the ray by `drop`.
pub fn scan_range(angle: f64, p: &ModelParams, drop: f64) -> (f64, f64) {
    const STEP: f64 = 0.02;
    const LIMIT: f64 = 60.0;
    let n = (2.0 * LIMIT / STEP) as usize;
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 0..=n {
        let s = -LIMIT + k as f64 * STEP;
        let v = proxy(angle, s, p);
        if v > best.1 {
            best = (s, v);
        }
    }
    let (peak_s, peak) = best;
    let mut lo = peak_s;
    while lo > -LIMIT && proxy(angle, lo, p) > peak - drop {
        lo -= STEP;
    }
    let mut hi = peak_s;
    while hi < LIMIT && proxy(angle, hi, p) > peak - drop {
        hi += STEP;
    }
    (lo - 2.0 * STEP, hi + 2.0 * STEP)
}

/// Four staggered rays: `17π/32`, `19π/32` and their mirror images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub rays: Vec<RayQuadrature>,
}

impl ContourSet {
    pub fn new(p: &ModelParams, nodes: usize) -> Self {
        Self::with_drop(p, nodes, DEFAULT_DROP)
    }

    pub fn with_drop(p: &ModelParams, nodes: usize, drop: f64) -> Self {
        let mut up = Vec::new();
        let mut down = Vec::new();
        for theta in UPPER_RAY_ANGLES {
            let (a1, b1) = scan_range(theta, p, drop);
            let (a2, b2) = scan_range(-theta, p, drop);
            let (a, b) = (a1.min(a2), b1.max(b2));
            up.push(RayQuadrature::new(theta, a, b, nodes));
            down.push(RayQuadrature::new(-theta, a, b, nodes));
        }
        up.extend(down);
        ContourSet { rays: up }
    }

    pub fn total_nodes(&self) -> usize {
        self.rays.iter().map(|r| r.len()).sum()
    }

    /// `(ray, node)` index pairs in table order.
    pub fn indices(&self) -> Vec<(usize, usize)> {
        self.rays
            .iter()
            .enumerate()
            .flat_map(|(r, q)| (0..q.len()).map(move |k| (r, k)))
            .collect()
    }
}

fn ray_indices(w: Wedge) -> [usize; 2] {
    match w {
        Wedge::Zero => [0, 1],
        Wedge::Infinity => [2, 3],
    }
}

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d > PI {
        2.0 * PI - d
    } else {
        d
    }
}

/// Residue coefficient picked up when the contour of `side` in the wedge
/// half-plane is moved to the ray at `theta`; continued to the half-plane.
fn residue_coeff(arg: f64, side: Side, theta: f64) -> f64 {
    let hit = match (side, theta > 0.0) {
        (Side::Plus, true) => arg > theta,
        (Side::Plus, false) => arg < theta,
        (Side::Minus, true) => arg > 0.0 && arg < theta,
        (Side::Minus, false) => arg < 0.0 && arg > theta,
    };
    match (hit, side) {
        (false, _) => 0.0,
        (true, Side::Plus) => -1.0,
        (true, Side::Minus) => 1.0,
    }
}

/// Ray used for `z` in the wedge half-plane `w`, and the residue coefficient.
pub fn choose_ray(contours: &ContourSet, z: C, side: Side, w: Wedge) -> (usize, f64) {
    let arg = if z == C::new(0.0, 0.0) { 0.0 } else { z.arg() };
    let cands: Vec<(usize, f64, f64)> = ray_indices(w)
        .iter()
        .map(|&r| {
            let theta = contours.rays[r].angle;
            let same_half = arg != 0.0 && (arg > 0.0) == (theta > 0.0);
            let coeff = if same_half {
                residue_coeff(arg, side, theta)
            } else {
                0.0
            };
            (r, coeff, angular_gap(arg, theta))
        })
        .collect();
    let free = cands
        .iter()
        .filter(|c| c.1 == 0.0 && c.2 >= MIN_RAY_GAP)
        .max_by(|a, b| a.2.total_cmp(&b.2));
    let pick = free.unwrap_or_else(|| cands.iter().max_by(|a, b| a.2.total_cmp(&b.2)).unwrap());
    (pick.0, pick.1)
}

/// Jump data `scale·φ` for the two wedges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpData {
    pub phi0: Germ,
    pub phi_inf: Germ,
    pub scale: C,
}

impl JumpData {
    /// `φ/(2iπ)`, the jump of `f⁻ − f⁺` realizing the modulus.
    pub fn normalized(m: &ModulusData) -> Self {
        JumpData {
            phi0: m.phi0.clone(),
            phi_inf: m.phi_inf.clone(),
            scale: 1.0 / (2.0 * PI * i()),
        }
    }

    pub fn raw(phi0: Germ, phi_inf: Germ) -> Self {
        JumpData {
            phi0,
            phi_inf,
            scale: C::new(1.0, 0.0),
        }
    }

    pub fn germ(&self, w: Wedge) -> &Germ {
        match w {
            Wedge::Zero => &self.phi0,
            Wedge::Infinity => &self.phi_inf,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.phi0.is_zero() && self.phi_inf.is_zero()
    }

    pub fn value(&self, w: Wedge, log_h: C) -> Result<C, GermError> {
        Ok(self.scale * self.germ(w).eval_from_log(log_h)?)
    }

    /// `scale·h·φ′(h)`.
    pub fn log_deriv(&self, w: Wedge, log_h: C) -> Result<C, GermError> {
        Ok(self.scale * self.germ(w).log_deriv_from_log(log_h)?)
    }
}

/// `log H_f⁺(z) = log H₀⁺(z) + 2iπ f⁺(z)`.
pub fn log_hf_plus(z: C, f_plus: C, p: &ModelParams) -> Result<C, ModelError> {
    Ok(model::log_h0(z, Side::Plus, p)? + 2.0 * PI * i() * f_plus)
}

/// Values of `f⁺` and `f⁻` on the nodes of a contour set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorialPair {
    pub plus: Vec<Vec<C>>,
    pub minus: Vec<Vec<C>>,
}

impl SectorialPair {
    pub fn zero(contours: &ContourSet) -> Self {
        let t: Vec<Vec<C>> = contours.rays.iter().map(|r| vec![C::new(0.0, 0.0); r.len()]).collect();
        SectorialPair {
            plus: t.clone(),
            minus: t,
        }
    }

    pub fn from_fn<F, G>(contours: &ContourSet, plus: F, minus: G) -> Self
    where
        F: Fn(C) -> C,
        G: Fn(C) -> C,
    {
        SectorialPair {
            plus: contours.rays.iter().map(|r| r.nodes.iter().map(|z| plus(*z)).collect()).collect(),
            minus: contours.rays.iter().map(|r| r.nodes.iter().map(|z| minus(*z)).collect()).collect(),
        }
    }

    /// Sampled sup norm with a safety factor `1.05`.
    pub fn sampled_norm(&self) -> f64 {
        1.05 * self.raw_norm()
    }

    pub fn raw_norm(&self) -> f64 {
        self.plus
            .iter()
            .chain(&self.minus)
            .flatten()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn plus_norm(&self) -> f64 {
        self.plus.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn diff_norm(&self, other: &SectorialPair) -> f64 {
        let d = |a: &Vec<Vec<C>>, b: &Vec<Vec<C>>| {
            a.iter()
                .flatten()
                .zip(b.iter().flatten())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max)
        };
        d(&self.plus, &other.plus).max(d(&self.minus, &other.minus))
    }
}

/// Residue coefficient picked by an evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residue {
    pub wedge: Wedge,
    pub coeff: f64,
}

impl Residue {
    pub fn is_zero(&self) -> bool {
        self.coeff == 0.0
    }
}

fn sqrt_side(z: C, side: Side) -> C {
    let s = z.sqrt();
    match side {
        Side::Plus => s,
        Side::Minus => {
            if z.arg() > 0.0 {
                s
            } else {
                -s
            }
        }
    }
}

/// Quadrature coefficients `±G(ξ_k) w_k/(2iπ)` of `Λ` on a contour set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub contours: ContourSet,
    pub coeffs: Vec<Vec<C>>,
    pub kernel: KernelKind,
    /// `Λ(0)`; zero for the half-power kernel.
    pub lambda_at_zero: C,
}

impl Transform {
    pub fn new(contours: &ContourSet, jumps: &[Vec<C>], kernel: KernelKind) -> Self {
        let two_pi_i = 2.0 * PI * i();
        let coeffs: Vec<Vec<C>> = contours
            .rays
            .iter()
            .zip(jumps)
            .map(|(ray, g)| {
                let sgn = if ray.angle > 0.0 { 1.0 } else { -1.0 };
                ray.weights.iter().zip(g).map(|(w, g)| sgn * g * w / two_pi_i).collect()
            })
            .collect();
        let lambda_at_zero = match kernel {
            KernelKind::Cauchy => [0usize, 2]
                .iter()
                .map(|&r| {
                    contours.rays[r]
                        .nodes
                        .iter()
                        .zip(&coeffs[r])
                        .map(|(x, c)| c / x)
                        .sum::<C>()
                })
                .sum(),
            KernelKind::HalfPower => C::new(0.0, 0.0),
        };
        Transform {
            contours: contours.clone(),
            coeffs,
            kernel,
            lambda_at_zero,
        }
    }

    /// Largest endpoint-to-peak ratio of the quadrature coefficients.
    pub fn resolution_ratio(&self) -> (f64, f64) {
        let mut worst = (0.0, 0.0);
        for (ray, c) in self.contours.rays.iter().zip(&self.coeffs) {
            let peak = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if peak == 0.0 {
                continue;
            }
            let ends = c[0].norm().max(c[c.len() - 1].norm()) / peak;
            if ends > worst.0 {
                worst = (ends, ray.angle);
            }
        }
        worst
    }

    pub fn check_resolution(&self, tol: f64) -> Result<(), TransformError> {
        let (ratio, angle) = self.resolution_ratio();
        if ratio > tol {
            Err(TransformError::QuadratureUnderResolved { angle, ratio })
        } else {
            Ok(())
        }
    }

    fn ray_sum(&self, r: usize, z: C, side: Side, deriv: bool) -> C {
        let ray = &self.contours.rays[r];
        let c = &self.coeffs[r];
        match (self.kernel, deriv) {
            (KernelKind::Cauchy, false) => ray.nodes.iter().zip(c).map(|(x, c)| c / (x - z)).sum(),
            (KernelKind::Cauchy, true) => ray
                .nodes
                .iter()
                .zip(c)
                .map(|(x, c)| {
                    let d = x - z;
                    c / (d * d)
                })
                .sum(),
            (KernelKind::HalfPower, false) => {
                let sz = sqrt_side(z, side);
                ray.nodes
                    .iter()
                    .zip(c)
                    .map(|(x, c)| c * sz / (sqrt_side(*x, side) * (x - z)))
                    .sum()
            }
            (KernelKind::HalfPower, true) => {
                let sz = sqrt_side(z, side);
                ray.nodes
                    .iter()
                    .zip(c)
                    .map(|(x, c)| {
                        let d = x - z;
                        c / sqrt_side(*x, side) * (1.0 / (2.0 * sz * d) + sz / (d * d))
                    })
                    .sum()
            }
        }
    }

    fn parts(&self, z: C, side: Side, deriv: bool) -> (C, Residue) {
        let (ru, cu) = choose_ray(&self.contours, z, side, Wedge::Zero);
        let (rl, cl) = choose_ray(&self.contours, z, side, Wedge::Infinity);
        let v = self.ray_sum(ru, z, side, deriv) + self.ray_sum(rl, z, side, deriv);
        let res = if cu != 0.0 {
            Residue {
                wedge: Wedge::Zero,
                coeff: cu,
            }
        } else {
            Residue {
                wedge: Wedge::Infinity,
                coeff: cl,
            }
        };
        (v, res)
    }

    /// Integral part of `Λ^side(z)` on the chosen rays and the residue still to add.
    pub fn integral(&self, z: C, side: Side) -> (C, Residue) {
        self.parts(z, side, false)
    }

    /// `d/dz` of the integral part.
    pub fn integral_deriv(&self, z: C, side: Side) -> (C, Residue) {
        self.parts(z, side, true)
    }

    /// `Λ^side(z)` given the jump value `G(z)` at `z`.
    pub fn lambda(&self, z: C, side: Side, jump_at_z: C) -> C {
        let (v, r) = self.integral(z, side);
        if r.is_zero() {
            v
        } else {
            v + r.coeff * jump_at_z
        }
    }
}

/// Jump values `scale·φ^♯(H_f⁺)` on the nodes, using the `f⁺` table.
pub fn jump_values(
    contours: &ContourSet,
    f: &SectorialPair,
    jumps: &JumpData,
    p: &ModelParams,
) -> Result<Vec<Vec<C>>, TransformError> {
    if jumps.is_zero() {
        return Ok(contours.rays.iter().map(|r| vec![C::new(0.0, 0.0); r.len()]).collect());
    }
    let idx = contours.indices();
    let flat = par::map(&idx, |&(r, k)| -> Result<C, TransformError> {
        let ray = &contours.rays[r];
        let lh = log_hf_plus(ray.nodes[k], f.plus[r][k], p)?;
        Ok(jumps.value(ray.wedge(), lh)?)
    });
    let mut out: Vec<Vec<C>> = contours.rays.iter().map(|r| Vec::with_capacity(r.len())).collect();
    for ((r, _), v) in idx.iter().zip(flat) {
        out[*r].push(v?);
    }
    Ok(out)
}

/// Sup of `|H₀⁺|` on `V⁰` and of `|1/H₀⁺|` on `V∞`, sampled on the wedge boundaries.
pub fn wedge_h0_sups(p: &ModelParams) -> (f64, f64) {
    let mut sup0 = f64::NEG_INFINITY;
    let mut sup_inf = f64::NEG_INFINITY;
    let n = 4000;
    for k in 0..=n {
        let t = (-20.0 + 40.0 * k as f64 / n as f64).exp();
        for a in [model::WEDGE_INNER, model::OPENING] {
            if let Ok(l) = model::log_h0(C::from_polar(t, a), Side::Plus, p) {
                sup0 = sup0.max(l.re);
            }
            if let Ok(l) = model::log_h0(C::from_polar(t, -a), Side::Plus, p) {
                sup_inf = sup_inf.max(-l.re);
            }
        }
    }
    (sup0.exp(), sup_inf.exp())
}

/// Adaptedness check via `sup|H₀|·e^{2π‖f‖}` against the germ radii.
pub fn check_adapted(p: &ModelParams, jumps: &JumpData, f_norm: f64) -> Result<(), TransformError> {
    let (s0, si) = wedge_h0_sups(p);
    let grow = (2.0 * PI * f_norm).exp();
    for (w, sup) in [(Wedge::Zero, s0 * grow), (Wedge::Infinity, si * grow)] {
        let g = jumps.germ(w);
        if g.is_zero() {
            continue;
        }
        if !(sup < g.radius) {
            return Err(TransformError::NotAdapted {
                wedge: w,
                sup,
                radius: g.radius,
            });
        }
    }
    Ok(())
}

/// One application of `CH`: new node values of `(f⁺, f⁻)` and the transform built from `f`.
pub fn ch_transform(
    f: &SectorialPair,
    contours: &ContourSet,
    jumps: &JumpData,
    p: &ModelParams,
    kernel: KernelKind,
) -> Result<(SectorialPair, Transform), TransformError> {
    let g = jump_values(contours, f, jumps, p)?;
    let t = Transform::new(contours, &g, kernel);
    if !jumps.is_zero() {
        t.check_resolution(1e-12)?;
    }
    let idx = contours.indices();
    let vals = par::map(&idx, |&(r, k)| {
        let z = contours.rays[r].nodes[k];
        (
            t.lambda(z, Side::Plus, g[r][k]) - t.lambda_at_zero,
            t.lambda(z, Side::Minus, g[r][k]) - t.lambda_at_zero,
        )
    });
    let mut out = SectorialPair {
        plus: contours.rays.iter().map(|r| Vec::with_capacity(r.len())).collect(),
        minus: contours.rays.iter().map(|r| Vec::with_capacity(r.len())).collect(),
    };
    for ((r, _), (a, b)) in idx.iter().zip(vals) {
        out.plus[*r].push(a);
        out.minus[*r].push(b);
    }
    Ok((out, t))
}

/// `CH(f)` for a pair known at arbitrary points: evaluates the transform at `z`.
pub fn ch_value_at<F>(t: &Transform, jumps: &JumpData, p: &ModelParams, z: C, side: Side, f_plus: F) -> Result<C, TransformError>
where
    F: Fn(C) -> C,
{
    let (v, r) = t.integral(z, side);
    if r.is_zero() {
        return Ok(v - t.lambda_at_zero);
    }
    let g = jumps.value(r.wedge, log_hf_plus(z, f_plus(z), p)?)?;
    Ok(v + r.coeff * g - t.lambda_at_zero)
}

/// `(Λ⁻ − Λ⁺)(z) − G(z)` for `z` in a wedge, with `f⁺(z)` supplied.
pub fn jump_residual(t: &Transform, jumps: &JumpData, p: &ModelParams, z: C, f_plus_at_z: C) -> Result<C, TransformError> {
    let w = model::wedge_of(z).ok_or(ModelError::BranchCut { z, side: Side::Plus })?;
    let g = jumps.value(w, log_hf_plus(z, f_plus_at_z, p)?)?;
    Ok(t.lambda(z, Side::Minus, g) - t.lambda(z, Side::Plus, g) - g)
}

/// Evaluator of the sectorial pair represented by a transform: `f = Λ − Λ(0)`
/// with the residue equation solved at points needing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorialFunction {
    pub params: ModelParams,
    pub jumps: JumpData,
    pub transform: Transform,
}

impl SectorialFunction {
    pub fn new(params: ModelParams, jumps: JumpData, transform: Transform) -> Self {
        SectorialFunction {
            params,
            jumps,
            transform,
        }
    }

    fn jump(&self, w: Wedge, z: C, f_plus: C) -> Result<(C, C), TransformError> {
        let lh = log_hf_plus(z, f_plus, &self.params)?;
        Ok((self.jumps.value(w, lh)?, self.jumps.log_deriv(w, lh)?))
    }

    fn plus(&self, z: C) -> Result<C, TransformError> {
        let (v, r) = self.transform.integral(z, Side::Plus);
        let base = v - self.transform.lambda_at_zero;
        if r.is_zero() || self.jumps.is_zero() {
            return Ok(base);
        }
        let mut f = base;
        for _ in 0..200 {
            let next = base + r.coeff * self.jump(r.wedge, z, f)?.0;
            let step = (next - f).norm();
            f = next;
            if step <= 1e-16 * (1.0 + f.norm()) {
                return Ok(f);
            }
        }
        Err(TransformError::ResidueNotConverged(z))
    }

    pub fn eval(&self, z: C, side: Side) -> Result<C, TransformError> {
        match side {
            Side::Plus => self.plus(z),
            Side::Minus => {
                let (v, r) = self.transform.integral(z, Side::Minus);
                let base = v - self.transform.lambda_at_zero;
                if r.is_zero() || self.jumps.is_zero() {
                    return Ok(base);
                }
                let fp = self.plus(z)?;
                Ok(base + r.coeff * self.jump(r.wedge, z, fp)?.0)
            }
        }
    }

    /// `f^side′(z)`.
    pub fn deriv(&self, z: C, side: Side) -> Result<C, TransformError> {
        let (b, r) = self.transform.integral_deriv(z, side);
        if r.is_zero() || self.jumps.is_zero() {
            return Ok(b);
        }
        let inv = model::inv_x0(z, &self.params)?;
        let fp = self.plus(z)?;
        let two_pi_i = 2.0 * PI * i();
        let c = two_pi_i * self.jump(r.wedge, z, fp)?.1;
        match side {
            Side::Plus => Ok((b + r.coeff * c * inv) / (1.0 - r.coeff * c)),
            Side::Minus => {
                let fpd = self.deriv(z, Side::Plus)?;
                Ok(b + r.coeff * c * (inv + fpd))
            }
        }
    }

    /// `G(z) = scale·φ^♯(H_f⁺(z))` for `z` in a wedge.
    pub fn jump_at(&self, z: C) -> Result<C, TransformError> {
        let w = model::wedge_of(z).ok_or(ModelError::BranchCut { z, side: Side::Plus })?;
        let fp = self.plus(z)?;
        Ok(self.jump(w, z, fp)?.0)
    }
}

/// `ln ∫_{a⁺} |√z H₀(ξ)/(√ξ(ξ − z))| |dξ|` on the ray `arg ξ = 5π/8`.
pub fn kernel_bound_log(p: &ModelParams, z: C, nodes: usize) -> Result<f64, ModelError> {
    if z == C::new(0.0, 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let angle = model::OPENING;
    let (a, b) = scan_range(angle, p, 80.0);
    let n = nodes.max(16);
    let ds = (b - a) / (n - 1) as f64;
    let mut logs = Vec::with_capacity(n);
    for k in 0..n {
        let s = a + k as f64 * ds;
        let xi = C::from_polar(s.exp(), angle);
        let lh = model::log_h0(xi, Side::Plus, p)?;
        let end = if k == 0 || k == n - 1 { 0.5f64 } else { 1.0 };
        logs.push(0.5 * z.norm().ln() + lh.re - 0.5 * s - (xi - z).norm().ln() + s + (ds * end).ln());
    }
    Ok(log_sum_exp(&logs))
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Convenience: jump data and zero germs from a modulus centered correctly.
pub fn jumps_for(m: &ModulusData) -> JumpData {
    debug_assert_eq!(m.phi0.center, Center::Zero);
    JumpData::normalized(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::re;

    fn data(c: f64) -> ModulusData {
        ModulusData::new(re(0.0), Germ::linear(Center::Zero, re(c)), Germ::zero(Center::Infinity)).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_transform() {
        let p = ModelParams::new(0.3, re(0.0)).unwrap();
        let cs = ContourSet::new(&p, 100);
        let m = ModulusData::trivial(re(0.0));
        let (f, t) = ch_transform(&SectorialPair::zero(&cs), &cs, &jumps_for(&m), &p, KernelKind::Cauchy).unwrap();
        assert_eq!(f.raw_norm(), 0.0);
        assert_eq!(t.lambda(C::new(0.1, 0.2), Side::Plus, re(0.0)), re(0.0));
    }

    #[test]
    fn ray_choice_prefers_residue_free() {
        let p = ModelParams::new(0.3, re(0.0)).unwrap();
        let cs = ContourSet::new(&p, 10);
        let z = C::from_polar(1.0, 36.0 * PI / 64.0);
        assert_eq!(choose_ray(&cs, z, Side::Plus, Wedge::Zero), (1, 0.0));
        assert_eq!(choose_ray(&cs, z, Side::Minus, Wedge::Zero), (0, 0.0));
        let z = C::from_polar(1.0, 19.0 * PI / 32.0);
        assert_eq!(choose_ray(&cs, z, Side::Plus, Wedge::Zero), (0, -1.0));
        let z = C::from_polar(1.0, -19.0 * PI / 32.0);
        assert_eq!(choose_ray(&cs, z, Side::Plus, Wedge::Infinity), (2, -1.0));
        assert_eq!(choose_ray(&cs, z, Side::Minus, Wedge::Infinity), (2, 0.0));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = ModelParams::new(0.5, re(0.0)).unwrap();
        let cs = ContourSet::new(&p, 400);
        let m = data(0.1);
        let j = jumps_for(&m);
        let (_, t) = ch_transform(&SectorialPair::zero(&cs), &cs, &j, &p, KernelKind::Cauchy).unwrap();
        let f = SectorialFunction::new(p, j, t);
        for z in [C::new(0.3, 0.9), C::new(-0.2, 1.0), C::new(0.5, -0.2), C::from_polar(0.9, 19.0 * PI / 32.0)] {
            for side in [Side::Plus, Side::Minus] {
                let h = 1e-5;
                let fd = (f.eval(z + h, side).unwrap() - f.eval(z - h, side).unwrap()) / (2.0 * h);
                let d = f.deriv(z, side).unwrap();
                assert!((d - fd).norm() <= 1e-6 * d.norm().max(1e-14), "{z} {side:?} {d} {fd}");
            }
        }
    }

    #[test]
    fn value_at_zero_vanishes() {
        let p = ModelParams::new(0.5, re(0.1)).unwrap();
        let cs = ContourSet::new(&p, 300);
        let m = ModulusData::new(re(0.1), Germ::linear(Center::Zero, re(0.1)), Germ::linear(Center::Infinity, re(0.05))).unwrap();
        let j = jumps_for(&m);
        let (_, t) = ch_transform(&SectorialPair::zero(&cs), &cs, &j, &p, KernelKind::Cauchy).unwrap();
        let f = SectorialFunction::new(p, j, t);
        assert!(f.eval(re(0.0), Side::Plus).unwrap().norm() < 1e-20);
    }

    #[test]
    fn log_sum_exp_basics() {
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
