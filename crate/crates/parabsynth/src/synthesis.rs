//! Fixed-point synthesis of the sectorial pair and the objects built from it:
//! the fields `X±`, first integrals `H±`, the germ `Δ`, normalizations `Ψ±`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cauchyheine::{
    ch_transform, check_adapted, ContourSet, JumpData, KernelKind, SectorialFunction, SectorialPair,
    TransformError,
};
use crate::flow::{self, FieldError, FlowError, FlowOptions, FlowStatus, ModelField, Singularity, SingularityKind, VectorField};
use crate::germs::{self, Center, GermError, ModulusData, SampleFit};
use crate::model::{self, ModelError, ModelParams, Side, SynthesisBounds};
use crate::{i, par, InputError, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("lambda {lambda} exceeds lambda_max {lambda_max}")]
    AboveBound { lambda: f64, lambda_max: f64 },
    #[error("iteration not contracting: ratio {ratio} at iteration {iteration}")]
    NotContracting { ratio: f64, iteration: usize },
    #[error("no convergence in {iterations} iterations, last difference {last:e}")]
    MaxIter { iterations: usize, last: f64 },
    #[error("pole of the sectorial field at {0}")]
    PoleOfXf(C),
    #[error("flow from {from} ended with {status:?}")]
    FlowIncomplete { from: C, status: FlowStatus },
    #[error("Newton iteration diverged from seed {0}")]
    NewtonDiverged(C),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Germ(#[from] GermError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

impl InputError for SynthesisError {
    fn is_input_error(&self) -> bool {
        match self {
            SynthesisError::AboveBound { .. } => true,
            SynthesisError::Model(e) => e.is_input_error(),
            SynthesisError::Germ(e) => e.is_input_error(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthOptions {
    pub nodes: usize,
    pub fp_tol: f64,
    pub max_iter: usize,
    pub kernel: KernelKind,
    /// Proceed above `lambda_max`.
    pub force: bool,
    pub flow_tol: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            nodes: 400,
            fp_tol: 1e-10,
            max_iter: 200,
            kernel: KernelKind::Cauchy,
            force: false,
            flow_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub kappa_lambda: f64,
    pub lambda_max: f64,
    pub ell: f64,
    pub ball_radius: f64,
    pub fixed_point_bound: f64,
    pub iterations: usize,
    pub final_delta_norm: f64,
    pub sampled_f_norm: f64,
    /// Successive differences `‖f_{n+1} − f_n‖` on samples.
    pub deltas: Vec<f64>,
    /// Ratios of successive differences above the round-off floor.
    pub ratios: Vec<f64>,
    pub max_ratio: Option<f64>,
    pub lambda_at_zero: C,
    pub above_bound: bool,
    pub nodes_per_ray: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub params: ModelParams,
    pub modulus: ModulusData,
    pub options: SynthOptions,
    pub bounds: SynthesisBounds,
    pub diagnostics: Diagnostics,
    pub pair: SectorialPair,
    pub f: SectorialFunction,
}

/// Runs `f_{n+1} = CH(f_n)` from `f_0 = 0`.
pub fn synthesize(m: &ModulusData, lambda: f64, opts: &SynthOptions) -> Result<SynthesisResult, SynthesisError> {
    m.validate()?;
    let params = ModelParams::new(lambda, m.mu)?;
    let bounds = model::synthesis_bounds(m)?;
    let above_bound = lambda > bounds.lambda_max;
    if above_bound && !opts.force {
        return Err(SynthesisError::AboveBound {
            lambda,
            lambda_max: bounds.lambda_max,
        });
    }
    let contours = ContourSet::new(&params, opts.nodes);
    let jumps = JumpData::normalized(m);
    let mut f = SectorialPair::zero(&contours);
    let mut deltas = Vec::new();
    let mut ratios = Vec::new();
    let mut growing = 0;
    let min_iter = if jumps.is_zero() { 1 } else { 2 };
    for it in 1..=opts.max_iter {
        check_adapted(&params, &jumps, f.sampled_norm())?;
        let (next, t) = ch_transform(&f, &contours, &jumps, &params, opts.kernel)?;
        let d = next.diff_norm(&f);
        let floor = 64.0 * f64::EPSILON * next.raw_norm();
        if let Some(&prev) = deltas.last() {
            if prev > floor && d > floor {
                let r: f64 = d / prev;
                ratios.push(r);
                growing = if r >= 1.0 { growing + 1 } else { 0 };
                if growing >= 5 {
                    return Err(SynthesisError::NotContracting { ratio: r, iteration: it });
                }
            }
        }
        deltas.push(d);
        f = next;
        if d < opts.fp_tol && it >= min_iter {
            let kappa = bounds.kappa(lambda);
            let diagnostics = Diagnostics {
                kappa_lambda: kappa,
                lambda_max: bounds.lambda_max,
                ell: bounds.ell,
                ball_radius: bounds.ball_radius(lambda),
                fixed_point_bound: bounds.fixed_point_bound(lambda),
                iterations: it,
                final_delta_norm: d,
                sampled_f_norm: f.sampled_norm(),
                max_ratio: ratios.iter().cloned().reduce(f64::max),
                deltas,
                ratios,
                lambda_at_zero: t.lambda_at_zero,
                above_bound,
                nodes_per_ray: opts.nodes,
            };
            return Ok(SynthesisResult {
                params,
                modulus: m.clone(),
                options: *opts,
                bounds,
                diagnostics,
                pair: f,
                f: SectorialFunction::new(params, jumps, t),
            });
        }
    }
    Err(SynthesisError::MaxIter {
        iterations: opts.max_iter,
        last: deltas.last().copied().unwrap_or(f64::NAN),
    })
}

/// Side used for `Δ` at `z`.
pub fn side_for(z: C) -> Side {
    if z.re >= 0.0 {
        Side::Plus
    } else {
        Side::Minus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HornSample {
    pub wedge: model::Wedge,
    pub z: C,
    /// `log h` with `h = H_f⁺(z)`.
    pub log_h: C,
    /// Measured `log H_f⁻(z)`.
    pub log_psi_measured: C,
    pub log_psi_target: C,
    pub relative_error: f64,
    /// `|log ψ_measured − log ψ_target| / |φ(h)|`, when `φ(h) ≠ 0`.
    pub exponent_relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HornReport {
    pub samples: Vec<HornSample>,
    pub max_relative_error: f64,
    pub max_exponent_error: f64,
    pub max_exponent_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorReport {
    pub coeffs: Vec<C>,
    pub sample_radius: f64,
    pub fit: SampleFit,
    pub radius_estimate: Option<f64>,
}

/// Angle of the horn-map sample points: midway between the two staggered rays.
pub const BAND_ANGLE: f64 = 36.0 * PI / 64.0;

impl SynthesisResult {
    pub fn is_trivial(&self) -> bool {
        self.modulus.is_trivial()
    }

    pub fn eval_f(&self, z: C, side: Side) -> Result<C, SynthesisError> {
        Ok(self.f.eval(z, side)?)
    }

    pub fn eval_f_deriv(&self, z: C, side: Side) -> Result<C, SynthesisError> {
        Ok(self.f.deriv(z, side)?)
    }

    /// `X₀/(1 + X₀·f′)`.
    pub fn eval_xf(&self, z: C, side: Side) -> Result<C, SynthesisError> {
        let fd = self.f.deriv(z, side)?;
        match model::eval_x0(z, &self.params) {
            Ok(x) => {
                let den = 1.0 + x * fd;
                if den.norm() < 1e-14 {
                    return Err(SynthesisError::PoleOfXf(z));
                }
                Ok(x / den)
            }
            Err(ModelError::PoleAt(_)) if fd.norm() > 0.0 => Ok(1.0 / fd),
            Err(ModelError::PoleAt(_)) => Err(SynthesisError::PoleOfXf(z)),
            Err(e) => Err(e.into()),
        }
    }

    /// `1/X_f = 1/X₀ + f′`, whose zeros are the poles of `X_f`.
    pub fn inv_xf(&self, z: C, side: Side) -> Result<C, SynthesisError> {
        Ok(model::inv_x0(z, &self.params)? + self.f.deriv(z, side)?)
    }

    pub fn log_hf(&self, z: C, side: Side) -> Result<C, SynthesisError> {
        Ok(model::log_h0(z, side, &self.params)? + 2.0 * PI * i() * self.f.eval(z, side)?)
    }

    /// `H₀·exp(2iπ f^side)`.
    pub fn eval_hf(&self, z: C, side: Side) -> Result<C, SynthesisError> {
        Ok(self.log_hf(z, side)?.exp())
    }

    /// Flow options with the pole guard shrunk below the pole/zero spacing of `X₀`.
    pub fn flow_options(&self) -> FlowOptions {
        let mut o = FlowOptions::with_tol(self.options.flow_tol);
        let zeros = self.params.zeros();
        let gap = self
            .params
            .poles()
            .iter()
            .flat_map(|p| zeros.iter().map(move |(q, _)| (p - q).norm()))
            .fold(f64::INFINITY, f64::min);
        o.pole_guard = o.pole_guard.min(1e-3 * gap);
        o
    }

    pub fn sector_field(&self, side: Side) -> SectorField<'_> {
        let poles = self
            .params
            .poles()
            .into_iter()
            .map(|p| {
                if self.is_trivial() {
                    p
                } else {
                    self.pole_near(p, side).map(|(q, _)| q).unwrap_or(p)
                }
            })
            .collect();
        SectorField {
            result: self,
            side,
            poles,
        }
    }

    /// Newton on `1/X₀ + f′` from `seed`; returns the pole and `|g|` there.
    pub fn pole_near(&self, seed: C, side: Side) -> Result<(C, f64), SynthesisError> {
        let g = |z: C| -> Result<C, SynthesisError> {
            match self.inv_xf(z, side) {
                Err(SynthesisError::Model(ModelError::ZeroAt(_))) => Err(SynthesisError::NewtonDiverged(seed)),
                r => r,
            }
        };
        let mut z = seed;
        if self.is_trivial() {
            return Ok((seed, 0.0));
        }
        for _ in 0..60 {
            let h = 1e-6 * (1.0 + z.norm());
            let gz = g(z)?;
            let d = (g(z + h)? - g(z - h)?) / (2.0 * h);
            let step = gz / d;
            z -= step;
            if !(z.re.is_finite() && z.im.is_finite()) || (z - seed).norm() > 1.0 {
                return Err(SynthesisError::NewtonDiverged(seed));
            }
            if step.norm() < 1e-14 * (1.0 + z.norm()) {
                return Ok((z, g(z)?.norm()));
            }
        }
        let r = g(z)?.norm();
        if r < 1e-8 {
            Ok((z, r))
        } else {
            Err(SynthesisError::NewtonDiverged(seed))
        }
    }

    pub fn delta_map_side(&self, z: C, side: Side) -> Result<C, SynthesisError> {
        let x = self.sector_field(side);
        let r = flow::time1_map(&x, z, &self.flow_options())?;
        match r.status {
            FlowStatus::Ok => Ok(r.endpoint),
            status => Err(SynthesisError::FlowIncomplete { from: z, status }),
        }
    }

    /// `Δ(z)`, with the side picked by `Re z`.
    pub fn delta_map(&self, z: C) -> Result<C, SynthesisError> {
        self.delta_map_side(z, side_for(z))
    }

    /// Horn maps measured at points of `V⁰` and `V∞` on the band between the staggered rays.
    pub fn measure_horn_maps(&self, n_samples: usize) -> Result<HornReport, SynthesisError> {
        let n = n_samples.max(2);
        let mut pts = Vec::new();
        for k in 0..n {
            let rho = (0.6f64.ln() * (1.0 - 2.0 * k as f64 / (n - 1) as f64)).exp();
            pts.push(C::from_polar(rho, BAND_ANGLE));
            pts.push(C::from_polar(rho, -BAND_ANGLE));
        }
        let samples: Result<Vec<HornSample>, SynthesisError> = par::map(&pts, |&z| self.horn_sample(z)).into_iter().collect();
        let samples = samples?;
        let max_rel = samples.iter().map(|s| s.relative_error).fold(0.0, f64::max);
        let max_exp = samples
            .iter()
            .map(|s| (s.log_psi_measured - s.log_psi_target).norm())
            .fold(0.0, f64::max);
        let max_exp_rel = samples.iter().filter_map(|s| s.exponent_relative_error).fold(0.0, f64::max);
        Ok(HornReport {
            samples,
            max_relative_error: max_rel,
            max_exponent_error: max_exp,
            max_exponent_relative_error: max_exp_rel,
        })
    }

    pub fn horn_sample(&self, z: C) -> Result<HornSample, SynthesisError> {
        let wedge = model::wedge_of(z).ok_or(ModelError::BranchCut { z, side: Side::Plus })?;
        let center = match wedge {
            model::Wedge::Zero => Center::Zero,
            model::Wedge::Infinity => Center::Infinity,
        };
        let lh = self.log_hf(z, Side::Plus)?;
        let lm = self.log_hf(z, Side::Minus)?;
        let target = germs::log_psi(&self.modulus, center, lh)?;
        let phi = target - lh - self.modulus.linear_exponent(center);
        let err = lm - target;
        Ok(HornSample {
            wedge,
            z,
            log_h: lh,
            log_psi_measured: lm,
            log_psi_target: target,
            relative_error: (err.exp() - 1.0).norm(),
            exponent_relative_error: (phi.norm() > 0.0).then(|| err.norm() / phi.norm()),
        })
    }

    /// `Ψ^side(z)`: the flow of `X₀` for the complex time `f^side(z)`.
    pub fn normalization_map(&self, z: C, side: Side) -> Result<C, SynthesisError> {
        let t = self.f.eval(z, side)?;
        let x = ModelField::new(self.params);
        let r = flow::flow(&x, z, t, &self.flow_options())?;
        match r.status {
            FlowStatus::Ok => Ok(r.endpoint),
            status => Err(SynthesisError::FlowIncomplete { from: z, status }),
        }
    }

    /// Taylor coefficients of `Δ` at `0` from samples on `|z| = radius`.
    pub fn taylor_delta(&self, n: usize, radius: f64) -> Result<TaylorReport, SynthesisError> {
        let m = (4 * n).max(64);
        let pts = germs::circle_points(radius, m);
        let vals: Result<Vec<C>, SynthesisError> = par::map(&pts, |&z| self.delta_map(z)).into_iter().collect();
        taylor_report(&vals?, radius, n)
    }
}

/// Coefficients, fit diagnostics and a decay-rate radius estimate.
pub fn taylor_report(values: &[C], radius: f64, n: usize) -> Result<TaylorReport, SynthesisError> {
    let (coeffs, fit) = germs::taylor_from_samples(values, radius, n);
    Ok(TaylorReport {
        radius_estimate: decay_radius(&coeffs, radius, fit.floor),
        coeffs,
        sample_radius: radius,
        fit,
    })
}

/// Least-squares slope of `ln|c_k|` over the upper half of the significant coefficients.
pub fn decay_radius(coeffs: &[C], r: f64, floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = coeffs
        .iter()
        .enumerate()
        .skip(coeffs.len() / 4)
        .filter(|(k, c)| c.norm() * r.powi(*k as i32) > 1e3 * floor)
        .map(|(k, c)| (k as f64, c.norm().ln()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx) * (p.0 - mx)));
    let slope = num / den;
    (slope < 0.0).then(|| (-slope).exp())
}

/// `X_f^side` as a vector field on the sphere.
pub struct SectorField<'a> {
    pub result: &'a SynthesisResult,
    pub side: Side,
    pub poles: Vec<C>,
}

impl VectorField for SectorField<'_> {
    fn eval(&self, z: C) -> Result<C, FieldError> {
        self.result.eval_xf(z, self.side).map_err(|e| match e {
            SynthesisError::PoleOfXf(p) => FieldError::Pole(p),
            other => FieldError::Undefined(z, other.to_string()),
        })
    }

    fn singularities(&self) -> Vec<Singularity> {
        let mut s: Vec<Singularity> = self
            .result
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
        s.extend(self.poles.iter().map(|p| Singularity {
            at: Some(*p),
            kind: SingularityKind::Pole(1),
        }));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germs::Germ;
    use crate::re;

    #[test]
    fn trivial_modulus_gives_zero_in_one_iteration() {
        let m = ModulusData::trivial(re(0.2));
        let r = synthesize(&m, 0.1, &SynthOptions::default()).unwrap();
        assert_eq!(r.diagnostics.iterations, 1);
        assert_eq!(r.pair.raw_norm(), 0.0);
        let z = C::new(0.3, 0.1);
        assert_eq!(r.eval_xf(z, Side::Plus).unwrap(), model::eval_x0(z, &r.params).unwrap());
    }

    #[test]
    fn refuses_above_bound() {
        let m = ModulusData::new(re(0.0), Germ::linear(Center::Zero, re(1.0)), Germ::zero(Center::Infinity)).unwrap();
        let e = synthesize(&m, 0.9, &SynthOptions::default()).unwrap_err();
        assert!(matches!(e, SynthesisError::AboveBound { .. }));
        assert!(e.is_input_error());
    }

    #[test]
    fn decay_radius_of_geometric_series() {
        let c: Vec<C> = (0..40).map(|k| re(0.5f64.powi(k))).collect();
        let r = decay_radius(&c, 1.0, 1e-20).unwrap();
        assert!((r - 2.0).abs() < 1e-9);
    }
}
