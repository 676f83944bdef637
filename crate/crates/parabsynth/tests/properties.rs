use std::f64::consts::PI;

use parabsynth::cauchyheine::{self, ContourSet, JumpData, KernelKind, SectorialPair};
use parabsynth::flow::{self, FlowOptions, ModelField};
use parabsynth::germs::{self, Center, Germ, GermMap, ModulusData};
use parabsynth::globalize;
use parabsynth::model::{self, ModelParams, Side};
use parabsynth::renorm::{self, PoleSum};
use parabsynth::synthesis::{synthesize, SynthOptions};
use parabsynth::verify;
use parabsynth::C;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn point(r_lo: f64, r_hi: f64) -> impl Strategy<Value = C> {
    (r_lo..r_hi, -PI..PI).prop_map(|(r, a)| C::from_polar(r, a))
}

fn mu() -> impl Strategy<Value = C> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b))
}

fn pole_sum() -> impl Strategy<Value = PoleSum> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, 0.3..2.0f64, -0.3..0.3f64), 1..4).prop_map(|v| {
        let g = PoleSum {
            residues: v.iter().map(|t| c(t.0, t.1)).collect(),
            poles: v.iter().map(|t| -C::from_polar(t.2, t.3)).collect(),
        };
        let s = 1.0 / g.sector_sup(400);
        PoleSum {
            residues: g.residues.iter().map(|a| a * s).collect(),
            poles: g.poles,
        }
    })
}

fn real_modulus(mu: f64, c0: f64, c_inf: f64) -> ModulusData {
    ModulusData::new(
        c(mu, 0.0),
        Germ::linear(Center::Zero, c(c0, 0.0)),
        Germ::linear(Center::Infinity, c(c_inf, 0.0)),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_is_sigma_invariant(z in point(0.1, 10.0), lambda in 0.001..1.0f64, mu in mu()) {
        let p = ModelParams::new(lambda, mu).unwrap();
        if let (Ok(pushed), Ok(x)) = (model::sigma_push(|w| model::eval_x0(w, &p), z), model::eval_x0(z, &p)) {
            prop_assert!((pushed - x).norm() <= 1e-12 * x.norm().max(f64::MIN_POSITIVE), "{pushed} vs {x}");
        }
    }

    #[test]
    fn h0_is_a_primitive(r in 0.05..3.0f64, a in -1.4..1.4f64, lambda in 0.05..1.0f64, mu in mu()) {
        let z = C::from_polar(r, a);
        let p = ModelParams::new(lambda, mu).unwrap();
        prop_assume!(model::in_sector(z, Side::Plus) && model::eval_x0(z, &p).is_ok());
        let h = 1e-4 * r;
        let lh = |d: f64| model::log_h0(z + d * h, Side::Plus, &p).unwrap();
        let deriv = (lh(-2.0) - 8.0 * lh(-1.0) + 8.0 * lh(1.0) - lh(2.0)) / (12.0 * h);
        let x = model::eval_x0(z, &p).unwrap();
        let target = c(0.0, 2.0 * PI);
        let scale = 1.0 + lh(0.0).norm() * f64::EPSILON / h * x.norm();
        prop_assert!((x * deriv - target).norm() / target.norm() < 1e-7 * scale);
    }

    #[test]
    fn model_magnitude_bounds(z in point(1e-3, 0.5), lambda in 1e-4..0.05f64, mu in mu()) {
        let p = ModelParams::new(lambda, mu).unwrap();
        let x = model::eval_x0(z, &p).unwrap().norm();
        let s = lambda * z.norm_sqr();
        prop_assert!(0.4 * s <= x && x <= 10.0 / 3.0 * s, "{x} vs {s}");
    }

    #[test]
    fn lie_derivative_bound(f in pole_sum(), lambda in 1e-3..0.05f64, mu in mu()) {
        let p = ModelParams::new(lambda, mu).unwrap();
        prop_assert!(renorm::lie_derivative_ratio(&p, &f, 16).unwrap() <= 4.0);
    }

    #[test]
    fn flow_semigroup(z in point(0.2, 2.0), t in 0.05..0.5f64, s in 0.05..0.5f64, lambda in 0.01..0.5f64, mu in mu()) {
        let x = ModelField::new(ModelParams::new(lambda, mu).unwrap());
        let o = FlowOptions::with_tol(1e-10);
        let run = |z0: C, dt: f64| flow::flow(&x, z0, c(dt, 0.0), &o).ok().and_then(|r| r.ok());
        if let (Some(a), Some(mid)) = (run(z, t + s), run(z, t)) {
            if let Some(b) = run(mid, s) {
                prop_assert!((a - b).norm() <= 1e-8 * (1.0 + a.norm()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn germ_json_round_trip(coeffs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..8), radius in 0.1..10.0f64, inf in any::<bool>()) {
        let center = if inf { Center::Infinity } else { Center::Zero };
        let g = Germ::new(center, coeffs.iter().map(|t| c(t.0, t.1)).collect(), radius).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let tag = if inf { "\"inf\"" } else { "\"0\"" };
        prop_assert!(s.contains(tag));
        prop_assert_eq!(serde_json::from_str::<Germ>(&s).unwrap(), g);
    }

    #[test]
    fn germ_inverse_composes_to_identity(a1 in 0.5..2.0f64, b1 in -1.0..1.0f64, rest in prop::collection::vec((-0.5..0.5f64, -0.5..0.5f64), 1..5)) {
        let mut coeffs = vec![c(0.0, 0.0), c(a1, b1)];
        coeffs.extend(rest.iter().map(|t| c(t.0, t.1)));
        let g = GermMap::new(coeffs);
        let inv = germs::germ_invert(&g).unwrap();
        let id = germs::germ_compose(&g, &inv).unwrap();
        for (k, ck) in id.coeffs.iter().enumerate().take(g.order() + 1) {
            let want = if k == 1 { 1.0 } else { 0.0 };
            prop_assert!((ck - want).norm() < 1e-9, "coefficient {k}: {ck}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn transform_contracts_on_the_unit_ball(f1 in pole_sum(), g1 in pole_sum(), f2 in pole_sum(), g2 in pole_sum(), c0 in 0.01..0.1f64) {
        let m = real_modulus(0.0, c0, 0.0);
        let bounds = model::synthesis_bounds(&m).unwrap();
        let lambda = bounds.lambda_max / 2.0;
        let kappa = bounds.kappa(lambda);
        let p = ModelParams::new(lambda, m.mu).unwrap();
        let cs = ContourSet::new(&p, 400);
        let jumps = JumpData::normalized(&m);
        let pair = |a: &PoleSum, b: &PoleSum| SectorialPair::from_fn(&cs, |z| a.eval(z), |z| b.eval(-z));
        let (u, v) = (pair(&f1, &g1), pair(&f2, &g2));
        let (cu, _) = cauchyheine::ch_transform(&u, &cs, &jumps, &p, KernelKind::Cauchy).unwrap();
        let (cv, _) = cauchyheine::ch_transform(&v, &cs, &jumps, &p, KernelKind::Cauchy).unwrap();
        prop_assert!(cu.diff_norm(&cv) <= 1.2 * 2.0 * kappa * u.diff_norm(&v));
        prop_assert!(cu.raw_norm() <= bounds.ball_radius(lambda));
    }

    #[test]
    fn jump_identity_for_random_data(c0 in -0.1..0.1f64, c_inf in -0.1..0.1f64, mu in 0.0..1.0f64, f in pole_sum(), g in pole_sum()) {
        let m = real_modulus(mu, c0, c_inf);
        let lambda = model::synthesis_bounds(&m).unwrap().lambda_max / 2.0;
        let (res, _) = verify::jump_identity(&m, lambda, Some(&(f, g)), 40).unwrap();
        prop_assert!(res < 1e-7);
    }

    #[test]
    fn fixed_point_sigma_law_and_real_symmetry(c0 in -0.1..0.1f64, c_inf in -0.1..0.1f64, mu in 0.0..1.0f64) {
        let m = real_modulus(mu, c0, c_inf);
        let lambda = model::synthesis_bounds(&m).unwrap().lambda_max / 2.0;
        let opts = SynthOptions::default();
        let r = synthesize(&m, lambda, &opts).unwrap();
        prop_assert!(r.diagnostics.final_delta_norm <= 2.0 * opts.fp_tol);
        let s = globalize::sigma_law(&r, 10).unwrap();
        prop_assert!(s.f_residual < 1e-7);
        prop_assert!(globalize::real_symmetry(&r, 10).unwrap() < 1e-7);
    }
}
