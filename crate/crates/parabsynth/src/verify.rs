//! Verification suites: per-module invariant checks and the acceptance criteria.

use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cauchyheine::{self, ContourSet, JumpData, KernelKind, SectorialPair};
use crate::flow::{self, Branch, FlowOptions, ModelField, PolarField};
use crate::germs::{self, Center, Germ, GermMap, ModulusData};
use crate::globalize::{self, FixedPoint};
use crate::model::{self, ModelParams};
use crate::renorm::{self, PoleSum, RenormOptions};
use crate::synthesis::{synthesize, HornReport, SynthOptions, SynthesisResult};
use crate::{par, Error, C};

const ROUND_OFF: f64 = 16.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// One of `<`, `<=`, `==`, `>`.
    pub relation: String,
    pub passed: bool,
}

impl Check {
    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Check::new(name, value, threshold, "<", value < threshold)
    }

    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check::new(name, value, threshold, "<=", value <= threshold)
    }

    pub fn above(name: &str, value: f64, threshold: f64) -> Self {
        Check::new(name, value, threshold, ">", value > threshold)
    }

    pub fn equal(name: &str, value: f64, expected: f64) -> Self {
        Check::new(name, value, expected, "==", value == expected)
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Check::new(name, f64::from(u8::from(ok)), 1.0, "==", ok)
    }

    fn new(name: &str, value: f64, threshold: f64, relation: &str, passed: bool) -> Self {
        Check {
            name: name.to_string(),
            value,
            threshold,
            relation: relation.to_string(),
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub elapsed_s: f64,
    pub time_limit_s: Option<f64>,
}

impl Report {
    pub fn line(&self) -> String {
        let worst = self
            .checks
            .iter()
            .find(|c| !c.passed)
            .map(|c| format!("; failed {} = {:.3e} (need {} {:.3e})", c.name, c.value, c.relation, c.threshold))
            .unwrap_or_default();
        format!(
            "{} [{}] {} ({} checks, {:.2} s){}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.checks.len(),
            self.elapsed_s,
            worst
        )
    }
}

#[derive(Default)]
struct Builder {
    checks: Vec<Check>,
    notes: Vec<String>,
}

impl Builder {
    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn run<F>(id: &str, title: &str, limit: Option<f64>, body: F) -> Report
where
    F: FnOnce(&mut Builder) -> Result<(), Error>,
{
    let t = Instant::now();
    let mut b = Builder::default();
    if let Err(e) = body(&mut b) {
        b.push(Check::flag("completed without error", false));
        b.note(format!("error: {e}"));
    }
    let elapsed = t.elapsed().as_secs_f64();
    if let Some(l) = limit {
        b.push(Check::at_most("runtime_s", elapsed, l));
    }
    Report {
        id: id.to_string(),
        title: title.to_string(),
        passed: b.checks.iter().all(|c| c.passed),
        checks: b.checks,
        notes: b.notes,
        elapsed_s: elapsed,
        time_limit_s: limit,
    }
}

/// Sunflower points `|z| ≤ r_max`, deterministic.
pub fn spiral_points(n: usize, r_min: f64, r_max: f64) -> Vec<C> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let s = (k as f64 + 0.5) / n as f64;
            C::from_polar(r_min + (r_max - r_min) * s.sqrt(), golden * k as f64)
        })
        .collect()
}

/// Points inside the wedges `V⁰` and `V∞`, half in each.
pub fn wedge_points(n: usize) -> Vec<C> {
    let margin = 0.03;
    let (lo, hi) = (model::WEDGE_INNER + margin, model::OPENING - margin);
    let half = n.div_ceil(2);
    let mut out = Vec::with_capacity(2 * half);
    for k in 0..half {
        let s = (k as f64 + 0.5) / half as f64;
        let a = lo + (hi - lo) * ((k * 7 % half) as f64 + 0.5) / half as f64;
        let r = (3f64.ln() * (2.0 * s - 1.0)).exp();
        out.push(C::from_polar(r, a));
        out.push(C::from_polar(r, -a));
    }
    out.truncate(n);
    out
}

fn tight_flow() -> FlowOptions {
    FlowOptions::with_tol(1e-12)
}

fn modulus(mu: C, c0: f64, c_inf: f64) -> ModulusData {
    let inf = if c_inf == 0.0 {
        Germ::zero(Center::Infinity)
    } else {
        Germ::linear(Center::Infinity, C::new(c_inf, 0.0))
    };
    ModulusData::new(mu, Germ::linear(Center::Zero, C::new(c0, 0.0)), inf).expect("valid data")
}

fn half_lambda_max(m: &ModulusData) -> Result<f64, Error> {
    Ok(model::synthesis_bounds(m)?.lambda_max / 2.0)
}

// ---------------------------------------------------------------- criteria

pub fn criterion_1() -> Report {
    run("criterion 1", "algebraic oracle for mu = 0", Some(10.0), |b| {
        let lambda = 0.01;
        let p = ModelParams::new(lambda, C::new(0.0, 0.0))?;
        let x = ModelField::new(p);
        let pts: Vec<C> = spiral_points(400, 0.05, 2.5)
            .into_iter()
            .filter(|z| model::in_desk_domain(*z, &p))
            .take(100)
            .collect();
        b.push(Check::equal("points", pts.len() as f64, 100.0));
        let res: Result<Vec<f64>, Error> = par::map(&pts, |&z| {
            let d = flow::time1_map(&x, z, &tight_flow())?;
            Ok(model::mu_zero_relation(z, d.endpoint, lambda).norm())
        })
        .into_iter()
        .collect();
        let worst = res?.into_iter().fold(0.0, f64::max);
        b.push(Check::below("max |z D^2 - (z^2 + lambda z - 1) D - z|", worst, 1e-9));
        Ok(())
    })
}

pub fn criterion_2() -> Report {
    run("criterion 2", "polar oracle and monodromy", Some(5.0), |b| {
        let pts: Vec<C> = spiral_points(200, 0.2, 2.5)
            .into_iter()
            .filter(|w| !(w.re.abs() < 0.05 && w.im.abs() <= SQRT_2 + 0.05))
            .take(50)
            .collect();
        b.push(Check::equal("points", pts.len() as f64, 50.0));
        let res: Result<Vec<f64>, Error> = par::map(&pts, |&w| {
            let r = flow::time1_map(&PolarField, w, &tight_flow())?;
            Ok((r.endpoint - flow::polar_time1_oracle(w, Branch::Plus)?).norm())
        })
        .into_iter()
        .collect();
        b.push(Check::below("max |flow - sqrt(2 + w^2)|", res?.into_iter().fold(0.0, f64::max), 1e-9));
        let c = C::new(0.0, SQRT_2);
        let (start, once) = flow::polar_monodromy(c, 0.1, 1, 400);
        let (_, twice) = flow::polar_monodromy(c, 0.1, 2, 400);
        b.push(Check::below("one loop flips the branch", (once + start).norm(), 1e-12));
        b.push(Check::below("two loops return", (twice - start).norm(), 1e-12));
        let loop_pts: Vec<C> = (0..64).map(|k| c + C::from_polar(0.1, 2.0 * PI * (k as f64 + 0.25) / 64.0)).collect();
        let on_sheets: Result<Vec<f64>, Error> = par::map(&loop_pts, |&w| {
            let r = flow::time1_map(&PolarField, w, &tight_flow())?;
            let v = (2.0 + w * w).sqrt();
            Ok((r.endpoint - v).norm().min((r.endpoint + v).norm()))
        })
        .into_iter()
        .collect();
        b.push(Check::below(
            "flow values on the loop lie on the two sheets",
            on_sheets?.into_iter().fold(0.0, f64::max),
            1e-9,
        ));
        Ok(())
    })
}

/// `(c₂, c₃)` of the time-1 map of `X₀` from samples on `|z| = r`.
pub fn model_jet(p: &ModelParams, r: f64) -> Result<(C, C), Error> {
    let x = ModelField::new(*p);
    let pts = germs::circle_points(r, 64);
    let vals: Result<Vec<C>, Error> = par::map(&pts, |&z| Ok(flow::time1_map(&x, z, &tight_flow())?.endpoint))
        .into_iter()
        .collect();
    let (c, _) = germs::taylor_from_samples(&vals?, r, 4);
    Ok((c[2], c[3]))
}

fn jet_checks(b: &mut Builder, lambdas: &[f64], mus: &[C]) -> Result<(), Error> {
    let mut worst = 0.0f64;
    for &l in lambdas {
        for &mu in mus {
            let p = ModelParams::new(l, mu)?;
            let (c2, c3) = model_jet(&p, 0.25)?;
            let e = (c2 - l).norm().max((c3 - l * l * (1.0 - mu)).norm());
            b.note(format!("lambda {l}, mu {mu}: c2 {c2:.12}, c3 {c3:.12}"));
            worst = worst.max(e);
        }
    }
    b.push(Check::below("max jet error", worst, 1e-6));
    Ok(())
}

pub fn criterion_3() -> Report {
    run("criterion 3", "3-jet of the model time-1 map", Some(30.0), |b| {
        jet_checks(b, &[0.01, 0.05], &[C::new(0.0, 0.0), C::new(0.5, 0.0), C::new(1.0, 1.0)])
    })
}

fn kernel_checks(b: &mut Builder, lambdas: &[f64], mus: &[C]) -> Result<(), Error> {
    let pts: Vec<C> = spiral_points(200, 0.05, 4.0).into_iter().filter(|z| z.re >= 0.0).take(50).collect();
    let mut worst = f64::NEG_INFINITY;
    for &l in lambdas {
        for &mu in mus {
            let p = ModelParams::new(l, mu)?;
            let m_mu = model::default_constants(mu).m_mu;
            let bound = (1.5 * m_mu * l * l).ln();
            let logs: Result<Vec<f64>, Error> =
                par::map(&pts, |&z| Ok(cauchyheine::kernel_bound_log(&p, z, 4000)?)).into_iter().collect();
            let top = logs?.into_iter().fold(f64::NEG_INFINITY, f64::max);
            b.note(format!("lambda {l}, mu {mu}: ln integral {top:.3}, ln bound {bound:.3}"));
            worst = worst.max(top - bound);
        }
    }
    b.push(Check::below("max ln(integral / bound)", worst, 0.0));
    Ok(())
}

pub fn criterion_4() -> Report {
    run("criterion 4", "kernel integral bound", Some(30.0), |b| {
        kernel_checks(b, &[0.01, 0.05], &[C::new(0.0, 0.0), C::new(0.5, 0.0)])
    })
}

/// Random bounded pair with `sup ≤ 1` on each sector.
pub fn random_unit_pair(rng: &mut ChaCha8Rng) -> (PoleSum, PoleSum) {
    let one = |rng: &mut ChaCha8Rng| {
        let n = 3;
        let residues: Vec<C> = (0..n).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let poles: Vec<C> = (0..n)
            .map(|_| -C::from_polar(rng.gen_range(0.3..2.0), rng.gen_range(-0.3..0.3)))
            .collect();
        let g = PoleSum { residues, poles };
        let s = rng.gen_range(0.2..1.0) / g.sector_sup(400);
        PoleSum {
            residues: g.residues.iter().map(|a| a * s).collect(),
            poles: g.poles,
        }
    };
    let a = one(rng);
    let b = one(rng);
    (a, b)
}

/// Max of `|(Λ⁻ − Λ⁺) − G|/(1 + |G|)` at wedge points, and the largest `|G|`.
pub fn jump_identity(m: &ModulusData, lambda: f64, f: Option<&(PoleSum, PoleSum)>, n: usize) -> Result<(f64, f64), Error> {
    let p = ModelParams::new(lambda, m.mu)?;
    let cs = ContourSet::new(&p, 400);
    let jumps = JumpData::normalized(m);
    let plus = |z: C| f.map_or(C::new(0.0, 0.0), |f| f.0.eval(z));
    let minus = |z: C| f.map_or(C::new(0.0, 0.0), |f| f.1.eval(-z));
    let pair = SectorialPair::from_fn(&cs, plus, minus);
    let (_, t) = cauchyheine::ch_transform(&pair, &cs, &jumps, &p, KernelKind::Cauchy)?;
    let pts = wedge_points(n);
    let res: Result<Vec<(f64, f64)>, Error> = par::map(&pts, |&z| {
        let r = cauchyheine::jump_residual(&t, &jumps, &p, z, plus(z))?;
        let w = model::wedge_of(z).expect("wedge point");
        let g = jumps.value(w, cauchyheine::log_hf_plus(z, plus(z), &p)?)?;
        Ok((r.norm() / (1.0 + g.norm()), g.norm()))
    })
    .into_iter()
    .collect();
    Ok(res?.into_iter().fold((0.0, 0.0), |a, v| (a.0.max(v.0), a.1.max(v.1))))
}

fn jump_checks(b: &mut Builder, m: &ModulusData, lambda: f64, seed: u64) -> Result<(), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_unit_pair(&mut rng);
    for (label, pair) in [("f = 0", None), ("random unit-ball f", Some(&f))] {
        let (res, g) = jump_identity(m, lambda, pair, 100)?;
        b.note(format!("{label}: max |G| {g:.3e} at lambda {lambda}"));
        b.push(Check::below(&format!("jump residual, {label}"), res, 1e-7));
    }
    Ok(())
}

pub fn criterion_5(seed: u64) -> Report {
    run("criterion 5", "jump identity of the Cauchy-Heine transform", Some(60.0), |b| {
        let m = modulus(C::new(0.0, 0.0), 0.1, 0.0);
        let lambda = half_lambda_max(&m)?;
        jump_checks(b, &m, lambda, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_unit_pair(&mut rng);
        let (res, g) = jump_identity(&m, 4.0, Some(&f), 100)?;
        b.note(format!("supplementary lambda 4: residual {res:.3e}, max |G| {g:.3e}"));
        Ok(())
    })
}

fn acceptance_modulus() -> ModulusData {
    modulus(C::new(0.0, 0.0), 0.05, 0.0)
}

fn contraction_checks(b: &mut Builder, r: &SynthesisResult) {
    let d = &r.diagnostics;
    let kappa = d.kappa_lambda;
    let ratio = d.max_ratio.unwrap_or(0.0);
    if d.max_ratio.is_none() {
        b.note("no successive difference above the round-off floor");
    }
    b.note(format!(
        "lambda {}, kappa {kappa:.4e}, iterations {}, ratios {:?}",
        r.params.lambda, d.iterations, d.ratios
    ));
    b.push(Check::at_most("max ratio / (1.2 * 2 kappa)", ratio / (2.4 * kappa), 1.0));
    b.push(Check::at_most("||f|| / (1.05 * 536 kappa)", d.sampled_f_norm / (1.05 * 536.0 * kappa), 1.0));
    let exp_bound = kappa * (3365.0 * kappa).exp();
    b.push(Check::at_most("||f|| / (1.05 kappa exp(3365 kappa))", d.sampled_f_norm / (1.05 * exp_bound), 1.0));
}

pub fn criterion_6() -> Report {
    run("criterion 6", "contraction of the synthesis loop", Some(300.0), |b| {
        let m = acceptance_modulus();
        let r = synthesize(&m, half_lambda_max(&m)?, &SynthOptions::default())?;
        contraction_checks(b, &r);
        Ok(())
    })
}

pub const TIGHTENING: [(usize, f64); 3] = [(200, 1e-8), (400, 1e-10), (800, 1e-12)];

/// Horn residuals for the settings in [`TIGHTENING`].
pub fn horn_sequence(m: &ModulusData, lambda: f64, force: bool) -> Result<Vec<f64>, Error> {
    TIGHTENING
        .iter()
        .map(|&(nodes, fp_tol)| {
            let o = SynthOptions {
                nodes,
                fp_tol,
                force,
                ..Default::default()
            };
            Ok(synthesize(m, lambda, &o)?.measure_horn_maps(20)?.max_relative_error)
        })
        .collect()
}

/// Round-off level of the relative error of `ψ = exp(log ψ)`.
pub fn horn_floor(h: &HornReport) -> f64 {
    let scale = h.samples.iter().map(|s| s.log_psi_target.norm()).fold(1.0, f64::max);
    ROUND_OFF * scale
}

/// Every step decreases, or lands at or below `floor`.
pub fn non_increasing(seq: &[f64], floor: f64) -> bool {
    seq.windows(2).all(|w| w[1] < w[0] || w[1] <= floor)
}

fn horn_checks(b: &mut Builder, m: &ModulusData, lambda: f64) -> Result<(), Error> {
    let r = synthesize(m, lambda, &SynthOptions::default())?;
    let h = r.measure_horn_maps(20)?;
    b.push(Check::below("horn residual", h.max_relative_error, 1e-5));
    b.note(format!(
        "exponent error {:.3e}, exponent-relative error {:.3e}",
        h.max_exponent_error, h.max_exponent_relative_error
    ));
    let seq = horn_sequence(m, lambda, false)?;
    let floor = horn_floor(&h);
    b.note(format!("residuals over (nodes, fp_tol) settings: {seq:?}, round-off level {floor:.3e}"));
    b.push(Check::flag("residual decreases or sits at round-off", non_increasing(&seq, floor)));
    Ok(())
}

pub fn criterion_7() -> Report {
    run("criterion 7", "modulus reproduction", Some(600.0), |b| {
        let m = acceptance_modulus();
        horn_checks(b, &m, half_lambda_max(&m)?)?;
        let forced = horn_sequence(&m, 4.0, true)?;
        b.note(format!("supplementary lambda 4 residuals: {forced:?}"));
        Ok(())
    })
}

fn globalize_checks(b: &mut Builder, m: &ModulusData, lambda: f64) -> Result<(), Error> {
    let r = synthesize(m, lambda, &SynthOptions::default())?;
    let poles = globalize::find_poles(&r)?;
    for p in &poles {
        b.push(Check::below(
            &format!("pole {:?} distance / bound", p.seed),
            p.distance / p.radius_bound,
            1.0,
        ));
        b.push(Check::equal(
            &format!("pole {:?} argument-principle count", p.seed),
            p.zero_count.map_or(f64::NAN, |c| c as f64),
            1.0,
        ));
    }
    let sym = globalize::sigma_pole_symmetry(&poles);
    b.note(format!("sigma pole symmetry: set distance {:.3e}, labeled {:?}", sym.set_distance, sym.labeled));
    let inf = globalize::modulus_at_infinity(&r, 20)?;
    b.push(Check::below("modulus at infinity composition", inf.max_residual, 1e-5));
    if !r.params.is_mu_zero() {
        for fp in [FixedPoint::PlusOne, FixedPoint::MinusOne] {
            let mr = globalize::multiplier_at(&r, fp, 64)?;
            b.note(format!(
                "multiplier at {:?}: {:.10}, exp(X0') {:.10}, exp(-1/mu) {:.10}, exp(-+1/mu) {:.10}",
                fp, mr.multiplier, mr.linear_oracle, mr.uniform_convention, mr.signed_convention
            ));
        }
    }
    Ok(())
}

fn ramification_checks(b: &mut Builder, lambda: f64) -> Result<(), Error> {
    let r = synthesize(&ModulusData::trivial(C::new(0.0, 0.0)), lambda, &SynthOptions::default())?;
    let oracle = globalize::mu_zero_ramification_oracle(lambda);
    let mut worst = 0.0f64;
    for p in globalize::find_poles(&r)? {
        let ram = globalize::ramification_points(&r, p.location, p.side)?;
        for z in ram.points {
            worst = worst.max(oracle.iter().map(|o| (z - o).norm()).fold(f64::INFINITY, f64::min));
        }
    }
    b.push(Check::below("ramification points vs roots of (z^2 + lambda z - 1)^2 + 4z^2", worst, 1e-6));
    Ok(())
}

pub fn criterion_8() -> Report {
    run("criterion 8", "globalization", Some(300.0), |b| {
        globalize_checks(b, &modulus(C::new(0.5, 0.0), 0.05, 0.0), 1.0 / 25600.0)?;
        ramification_checks(b, 0.01)
    })
}

fn renorm_checks(b: &mut Builder, phi0: &Germ, mu: C) -> Result<(), Error> {
    let bounds = renorm::renorm_bounds(mu, phi0)?;
    let lambda = bounds.lambda_hat;
    let opts = RenormOptions::default();
    let out = renorm::renorm_fixed_point(phi0, mu, lambda, &opts)?;
    let h = &out.history;
    b.note(format!(
        "lambda_hat {lambda}, ell_hat {}, differences {:?}, ratios {:?}",
        bounds.ell_hat, h.differences, h.ratios
    ));
    b.push(Check::flag("converged", h.converged));
    b.push(Check::at_most("max contraction ratio", h.max_ratio.unwrap_or(0.0), 0.1));
    let chk = renorm::check_fixed_point(phi0, mu, lambda, &out.state, &opts, 20)?;
    b.push(Check::below("psi_inf reproduces the fixed point", chk.psi_inf_residual, 1e-4));
    b.push(Check::below("horn residual at the fixed point", chk.horn.max_relative_error, 1e-4));
    b.note(format!("self-consistency {:.3e}", chk.self_consistency));
    let worst = |f: fn(&renorm::IterateBounds) -> f64| h.iterate_bounds.iter().map(f).fold(0.0, f64::max);
    b.push(Check::at_most("max ||Delta'|| on the 3/16 disc", worst(|x| x.deriv_sup), renorm::DERIV_BOUND));
    b.push(Check::below("max ||delta|| on the 3/16 disc", worst(|x| x.delta_sup), renorm::DELTA_BOUND));
    b.push(Check::below("max |Delta| on the 3/16 disc", worst(|x| x.image_sup), renorm::IMAGE_RADIUS));
    Ok(())
}

pub fn criterion_9() -> Report {
    run("criterion 9", "parabolic renormalization fixed point", Some(1800.0), |b| {
        renorm_checks(b, &Germ::linear(Center::Zero, C::new(1.0 / 50.0, 0.0)), C::new(0.0, 0.0))
    })
}

fn real_checks(b: &mut Builder, m: &ModulusData, lambda: f64) -> Result<(), Error> {
    let rc = germs::check_real_condition(m, 64)?;
    b.push(Check::below("real condition on the data", rc.max_residual, 1e-12));
    let r = synthesize(m, lambda, &SynthOptions::default())?;
    let res = globalize::real_symmetry(&r, 25)?;
    b.push(Check::below("max |conj f(conj z) - f(z)|", res, 1e-7));
    Ok(())
}

pub fn criterion_10() -> Report {
    run("criterion 10", "real synthesis", Some(300.0), |b| {
        let m = modulus(C::new(0.3, 0.0), 0.05, -0.05);
        real_checks(b, &m, half_lambda_max(&m)?)
    })
}

fn sigma_checks(b: &mut Builder, r: &SynthesisResult) -> Result<(), Error> {
    let s = globalize::sigma_law(r, 25)?;
    b.push(Check::below("max |f(sigma z) + f_other(z)|", s.f_residual, 1e-7));
    b.push(Check::below("act X_f vs X_act f", s.field_identity_residual, 1e-7));
    b.note(format!(
        "f at infinity {:.3e}, residual after removing it {:.3e}, field symmetry {:.3e}",
        s.f_at_infinity, s.f_residual_shifted, s.field_symmetry_residual
    ));
    Ok(())
}

pub fn criterion_11() -> Report {
    run("criterion 11", "sigma laws", Some(60.0), |b| {
        let m = acceptance_modulus();
        let r = synthesize(&m, half_lambda_max(&m)?, &SynthOptions::default())?;
        sigma_checks(b, &r)
    })
}

pub fn criterion(n: usize, seed: u64) -> Option<Report> {
    Some(match n {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(seed),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(),
        10 => criterion_10(),
        11 => criterion_11(),
        _ => return None,
    })
}

pub fn acceptance(seed: u64) -> Vec<Report> {
    (1..=11).filter_map(|n| criterion(n, seed)).collect()
}

// ---------------------------------------------------------------- module suites

/// Optional inputs for the module suites; missing values fall back to the acceptance settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteInput {
    pub modulus: Option<ModulusData>,
    pub lambda: Option<f64>,
    pub seed: u64,
}

impl SuiteInput {
    fn modulus_or(&self, m: ModulusData) -> ModulusData {
        self.modulus.clone().unwrap_or(m)
    }
}

pub const SUITES: [&str; 8] = ["model", "flow", "germs", "cauchyheine", "synthesis", "globalize", "renorm", "acceptance"];

fn model_suite(input: &SuiteInput) -> Report {
    run("model", "model field invariants", None, |b| {
        let mu = input.modulus.as_ref().map_or(C::new(0.0, 0.0), |m| m.mu);
        let lambda = input.lambda.unwrap_or(0.05);
        let p = ModelParams::new(lambda, mu)?;
        let (lo, hi) = renorm::x0_magnitude_range(&ModelParams::new(lambda.min(0.5 / mu.norm().max(1e-300)), mu)?, 20, 64)?;
        b.push(Check::at_most("2/5 - min |X0|/(lambda |z|^2)", 0.4 - lo, 0.0));
        b.push(Check::at_most("max |X0|/(lambda |z|^2) - 10/3", hi - 10.0 / 3.0, 0.0));
        let mut worst = 0.0f64;
        for w in spiral_points(64, 0.1, 3.0) {
            if let (Ok(a), Ok(c)) = (model::sigma_push(|z| model::eval_x0(z, &p), w), model::eval_x0(w, &p)) {
                worst = worst.max((a - c).norm() / (1.0 + c.norm()));
            }
        }
        b.push(Check::below("sigma-invariance of X0", worst, 1e-12));
        let expected_poles = if p.is_mu_zero() { 2.0 } else { 4.0 };
        b.push(Check::equal("finite poles", p.poles().len() as f64, expected_poles));
        let zeros: u32 = p.zeros().iter().map(|z| z.1).sum();
        b.push(Check::equal("finite zeros with multiplicity", zeros as f64, if p.is_mu_zero() { 2.0 } else { 4.0 }));
        jet_checks(b, &[lambda], &[mu])
    })
}

fn flow_suite() -> Vec<Report> {
    vec![criterion_1(), criterion_2()]
}

fn germs_suite(input: &SuiteInput) -> Report {
    run("germs", "germ utilities", None, |b| {
        let r = 0.5;
        let vals: Vec<C> = germs::circle_points(r, 64).into_iter().map(|h| h.exp() - 1.0).collect();
        let (c, _) = germs::taylor_from_samples(&vals, r, 12);
        let mut fact = 1.0;
        let mut worst = c[0].norm();
        for (k, ck) in c.iter().enumerate().skip(1) {
            fact *= k as f64;
            worst = worst.max((ck - 1.0 / fact).norm());
        }
        b.push(Check::below("Taylor coefficients of exp(h) - 1", worst, 1e-12));
        let g = GermMap::new(vec![C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(1.0, 0.0)]);
        let inv = germs::germ_invert(&g)?;
        let lagrange = [0.0, 1.0, -1.0, 2.0, -5.0, 14.0];
        let e = lagrange.iter().zip(&inv.coeffs).map(|(a, c)| (c - a).norm()).fold(0.0, f64::max);
        b.push(Check::below("reversion of h + h^2", e, 1e-12));
        if let Some(m) = &input.modulus {
            if m.mu.im == 0.0 {
                let rc = germs::check_real_condition(m, 64)?;
                b.note(format!("real condition residual {:.3e}", rc.max_residual));
            }
        }
        Ok(())
    })
}

fn cauchyheine_suite(input: &SuiteInput) -> Vec<Report> {
    let jump = run("cauchyheine", "jump identity", None, |b| {
        let m = input.modulus_or(modulus(C::new(0.0, 0.0), 0.1, 0.0));
        let lambda = match input.lambda {
            Some(l) => l,
            None => half_lambda_max(&m)?,
        };
        jump_checks(b, &m, lambda, input.seed)
    });
    vec![criterion_4(), jump]
}

fn synthesis_suite(input: &SuiteInput) -> Report {
    run("synthesis", "contraction and modulus reproduction", None, |b| {
        let m = input.modulus_or(acceptance_modulus());
        let lambda = match input.lambda {
            Some(l) => l,
            None => half_lambda_max(&m)?,
        };
        let r = synthesize(&m, lambda, &SynthOptions::default())?;
        contraction_checks(b, &r);
        horn_checks(b, &m, lambda)?;
        sigma_checks(b, &r)
    })
}

fn globalize_suite(input: &SuiteInput) -> Report {
    run("globalize", "poles and modulus at infinity", None, |b| {
        let m = input.modulus_or(modulus(C::new(0.5, 0.0), 0.05, 0.0));
        let lambda = input.lambda.unwrap_or(1.0 / 25600.0);
        globalize_checks(b, &m, lambda)
    })
}

fn renorm_suite(input: &SuiteInput) -> Report {
    run("renorm", "renormalization fixed point", None, |b| {
        let (phi0, mu) = match &input.modulus {
            Some(m) => (m.phi0.clone(), m.mu),
            None => (Germ::linear(Center::Zero, C::new(1.0 / 50.0, 0.0)), C::new(0.0, 0.0)),
        };
        renorm_checks(b, &phi0, mu)
    })
}

/// Runs a named suite: a module name, `acceptance`, or `criterion-N`.
pub fn run_suite(name: &str, input: &SuiteInput) -> Option<Vec<Report>> {
    if let Some(n) = name.strip_prefix("criterion-") {
        return n.parse().ok().and_then(|n| criterion(n, input.seed)).map(|r| vec![r]);
    }
    Some(match name {
        "model" => vec![model_suite(input)],
        "flow" => flow_suite(),
        "germs" => vec![germs_suite(input)],
        "cauchyheine" => cauchyheine_suite(input),
        "synthesis" => vec![synthesis_suite(input)],
        "globalize" => vec![globalize_suite(input)],
        "renorm" => vec![renorm_suite(input)],
        "acceptance" => acceptance(input.seed),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wedge_points_lie_in_wedges() {
        let pts = wedge_points(100);
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().all(|z| model::wedge_of(*z).is_some()));
        let zero = pts.iter().filter(|z| model::wedge_of(**z) == Some(model::Wedge::Zero)).count();
        assert_eq!(zero, 50);
    }

    #[test]
    fn non_increasing_accepts_floor() {
        assert!(non_increasing(&[1e-3, 1e-6, 1e-9], ROUND_OFF));
        assert!(non_increasing(&[4.4e-16, 4.4e-16, 4.4e-16], ROUND_OFF));
        assert!(!non_increasing(&[1e-9, 1e-6], ROUND_OFF));
        assert!(!non_increasing(&[1e-13, 1e-13], ROUND_OFF));
        assert!(non_increasing(&[1e-13, 1e-13], 1e-12));
    }

    #[test]
    fn random_pair_is_in_unit_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (a, b) = random_unit_pair(&mut rng);
        assert!(a.sector_sup(400) <= 1.0 + 1e-12);
        assert!(b.sector_sup(400) <= 1.0 + 1e-12);
    }

    #[test]
    fn model_suite_passes_for_mu_zero() {
        let r = model_suite(&SuiteInput::default());
        assert!(r.passed, "{}", r.line());
    }
}
