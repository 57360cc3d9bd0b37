use std::sync::Arc;

use nifrde::builtin::{
    example5, example8, example8_caputo_dini_closed, example8_coefficient, example8_lyapunov, linear_field,
};
use nifrde::error::Error;
use nifrde::fractional_calculus::rl_kernel;
use nifrde::lyapunov::*;
use proptest::prelude::*;

fn free_linear(q: f64, a: f64, t: f64, x: f64, x0: f64) -> DiniEvalContext<f64> {
    DiniEvalContext::without_impulses(q, linear_field(a), 0.0, vec![x0], t, vec![x]).unwrap()
}

#[test]
fn quadratic_dini_is_two_x_f() {
    let ctx = free_linear(0.5, -1.0, 1.0, 1.0, 1.0);
    let est = dini_fractional(&LyapunovSpec::quadratic(), &ctx, None).unwrap();
    assert!((est.value + 2.0).abs() < 1e-6, "{}", est.value);
    assert_eq!(est.closed_form, Some(-2.0));
    assert!(est.is_convergent(1e-6));
}

#[test]
fn quadratic_caputo_dini_against_closed_form() {
    let ctx = free_linear(0.5, -1.0, 1.0, 0.5, 1.0);
    let est = caputo_fractional_dini(&LyapunovSpec::quadratic(), &ctx, None).unwrap();
    let closed = 2.0 * 0.5 * (-0.5) + (0.25 - 1.0) * rl_kernel(0.0, 1.0, 0.5).unwrap();
    assert!((est.closed_form.unwrap() - closed).abs() < 1e-12);
    assert!((est.value - closed).abs() < 1e-6, "{} vs {closed}", est.value);
}

#[test]
fn example8_operators_at_two() {
    let p = example8(3, 0.0f64, 1.0).unwrap();
    let ctx = DiniEvalContext::new(&p, 2.0, vec![1.0]).unwrap();
    let v = example8_lyapunov::<f64>();
    let d = dini_fractional(&v, &ctx, None).unwrap();
    let expect = 2.0 * (2.0 - 2f64.sin()) * example8_coefficient(2.0);
    assert!((d.value - expect).abs() < 1e-3);
    let c = caputo_fractional_dini(&v, &ctx, None).unwrap();
    let closed = example8_caputo_dini_closed(2.0, 1.0, 1.0);
    assert!((c.closed_form.unwrap() - closed).abs() < 1e-6);
    assert!((c.value - closed).abs() < 1e-3);
}

#[test]
fn example8_closed_forms_agree_and_reduce() {
    let p = example8(3, 0.0f64, 1.5).unwrap();
    let v = example8_lyapunov::<f64>();
    for t in [0.3f64, 1.0, 3.3, 9.0, 15.0] {
        for x in [-1.2f64, 0.4, 1.5] {
            let ctx = DiniEvalContext::new(&p, t, vec![x]).unwrap();
            let general = v.caputo_closed_form(&ctx).unwrap().unwrap();
            let direct = example8_caputo_dini_closed(t, x, 1.5);
            assert!((general - direct).abs() < 1e-6, "t={t} x={x}: {general} vs {direct}");
            let reduced = -2.0 * 1.5f64.powi(2) / (std::f64::consts::PI * t).sqrt();
            assert!((direct - reduced).abs() < 1e-9);
        }
    }
}

#[test]
fn operators_reject_impulse_points_and_bad_steps() {
    let p = example8(3, 0.0f64, 1.0).unwrap();
    let t1 = p.schedule.t[0];
    assert!(matches!(DiniEvalContext::new(&p, t1 + 0.5, vec![1.0]), Err(Error::Domain(_))));
    assert!(matches!(DiniEvalContext::new(&p, 0.0, vec![1.0]), Err(Error::Domain(_))));
    let ctx = DiniEvalContext::new(&p, p.schedule.s[1] + 0.1, vec![1.0]).unwrap();
    let v = example8_lyapunov::<f64>();
    assert!(matches!(dini_fractional(&v, &ctx, Some(&[0.5, 0.25])), Err(Error::Domain(_))));
    let steps = operator_steps(&ctx).unwrap();
    assert!(steps.iter().all(|&h| ctx.t - h >= ctx.flow_start));
}

#[test]
fn general_form_needs_no_closed_form() {
    let ctx = free_linear(0.7, -0.5, 1.5, 0.8, 1.0);
    let v = LyapunovSpec::general(|t: f64, x: &[f64]| (1.0 + 0.1 * t) * x[0] * x[0]);
    let d = dini_fractional(&v, &ctx, None).unwrap();
    assert!(d.closed_form.is_none());
    let expect = (1.0 + 0.15) * 2.0 * 0.8 * (-0.5 * 0.8);
    assert!((d.value - expect).abs() < 1e-6, "{} vs {expect}", d.value);
    let weighted = LyapunovSpec::weighted_quadratic(|t: f64| 1.0 + 0.1 * t, None);
    let c_general = caputo_fractional_dini(&v, &ctx, None).unwrap();
    let c_closed = weighted.caputo_closed_form(&ctx).unwrap().unwrap();
    assert!((c_general.value - c_closed).abs() < 1e-5, "{} vs {c_closed}", c_general.value);
}

#[test]
fn printed_variant_is_the_squared_weight_candidate() {
    let ctx = free_linear(0.5, -1.0, 2.0, 0.7, 1.0);
    let m = |t: f64| 2.0 - t.sin();
    let printed = printed_weighted_quadratic_variant(m, |t: f64| -t.cos(), &ctx).unwrap();
    let squared = LyapunovSpec::weighted_quadratic(move |t: f64| m(t) * m(t), None);
    let est = caputo_fractional_dini(&squared, &ctx, None).unwrap();
    assert!((printed - est.value).abs() < 1e-5);
    let plain = LyapunovSpec::weighted_quadratic(m, None).caputo_closed_form(&ctx).unwrap().unwrap();
    assert!((printed - plain).abs() > 1e-2);
}

#[test]
fn impulse_decrease_margin() {
    let p = example5(0.5f64, -1.0, 1.0).unwrap();
    let v = LyapunovSpec::quadratic();
    let xs: Vec<Vec<f64>> = (-5..=5).map(|i| vec![i as f64 * 0.2]).collect();
    let (tk, sk) = p.schedule.impulse_interval(1).unwrap();
    let ts: Vec<f64> = (0..=10).map(|i| tk + (sk - tk) * i as f64 / 10.0).collect();
    let m = check_impulse_decrease(&v, &p, 1, &xs, &ts).unwrap();
    assert!(m.margin >= 0.0);
    assert!(matches!(check_impulse_decrease(&v, &p, 3, &xs, &ts), Err(Error::Index { .. })));
    assert!(check_impulse_decrease(&v, &p, 1, &xs, &[sk + 1.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quadratic_dini_matches_two_x_dot_f(
        q in 0.2f64..0.95,
        a in -2.0f64..2.0,
        x in prop::collection::vec(-2.0f64..2.0, 2),
        t in 0.5f64..3.0,
    ) {
        let f: nifrde::frde_solver::VectorField<f64> =
            Arc::new(move |_, v: &[f64]| vec![a * v[0] + v[1], -v[0] + a * v[1]]);
        let ctx = DiniEvalContext::without_impulses(q, f, 0.0, vec![1.0, 0.0], t, x.clone()).unwrap();
        let est = dini_fractional(&LyapunovSpec::quadratic(), &ctx, None).unwrap();
        let exact = est.closed_form.unwrap();
        prop_assert!((est.value - exact).abs() < 1e-5 * (1.0 + exact.abs()), "{} vs {exact}", est.value);
    }

    #[test]
    fn initial_state_shifts_by_kernel(
        q in 0.2f64..0.95,
        t in 0.5f64..3.0,
        x in -2.0f64..2.0,
        x0a in -2.0f64..2.0,
        x0b in -2.0f64..2.0,
    ) {
        let v = LyapunovSpec::quadratic();
        let a = caputo_fractional_dini(&v, &free_linear(q, -1.0, t, x, x0a), None).unwrap();
        let b = caputo_fractional_dini(&v, &free_linear(q, -1.0, t, x, x0b), None).unwrap();
        let shift = (x0b * x0b - x0a * x0a) * rl_kernel(0.0, t, q).unwrap();
        prop_assert!(((a.value - b.value) - shift).abs() < 1e-9 * (1.0 + shift.abs()));
    }
}
