//! Majorants, Sontag extensions, conjugacies and the converse Lyapunov construction.

use std::sync::Arc;

use peaks_core::gallery::{closed_forms, lyapunov_function, pair_b, worked_system, ExampleParams};
use peaks_core::scalar::{linspace, Ext, RealFn};
use peaks_core::{
    kappa_conjugacy, majorize_decreasing, operator_ratio, sontag_extension, verify_certificate, verify_opt_lyapunov,
    verify_pair, yoshizawa_construct, InitialSet, KLGen, Psd, System,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, ..ProptestConfig::default() })]

    #[test]
    fn sontag_dominates_and_pins_h0(
        amp in 0.1..20.0f64, rate in 0.05..2.0f64, poly in 0.0..5.0f64, q in 0.5..3.0f64,
        s in 0.5..10.0f64, m_frac in 0.0..1.0f64,
    ) {
        let gamma = KLGen::new("random decay", move |s: f64, t: f64| s * (amp * (-rate * t).exp() + poly / (t + 1.0).powf(q)));
        let m = m_frac * s;
        let h = sontag_extension(&gamma, s, m).unwrap();
        prop_assert_eq!(h.h0(), m);
        prop_assert_eq!(h.eval(0.0), m);
        for t in linspace(0.0_f64, 50.0, 501) {
            let bound = h.eval((-t).exp());
            prop_assert!(bound >= gamma.eval(s, t), "t = {t}: {bound} < {}", gamma.eval(s, t));
        }
        // h ~ 1/(−ln r) near 0: continuous, but too flat-then-steep for a finite-difference probe.
        let rs = linspace(0.0_f64, 1.0, 400);
        prop_assert!(rs.windows(2).all(|w| h.eval(w[0]) < h.eval(w[1])));
    }

    #[test]
    fn majorant_strict_above_and_sharp(
        amp in 0.1..20.0f64, rate in 0.05..3.0f64, step in prop::bool::ANY, m in -5.0..5.0f64,
    ) {
        let f: RealFn<f64> = if step {
            Arc::new(move |x: f64| m + amp * (-(rate * x).floor()).exp())
        } else {
            Arc::new(move |x: f64| m + amp * (-rate * x).exp())
        };
        let g = majorize_decreasing(f.clone(), m).unwrap();
        let xs = linspace(0.0_f64, 60.0, 6001);
        for w in xs.windows(2) {
            prop_assert!(g.eval(w[1]) < g.eval(w[0]), "not strictly decreasing at {}", w[0]);
            prop_assert!(g.eval(w[0]) >= f(w[0]));
        }
        prop_assert!((g.eval(1e8) - m).abs() <= 1e-6);
        prop_assert!((g.inf_estimate - m).abs() <= 1e-6 * m.abs().max(1.0));
    }
}

fn conjugacy_residual(
    f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    factor: f64,
    contraction: bool,
    x_max: f64,
) -> f64 {
    let f: RealFn<f64> = Arc::new(f);
    let g = kappa_conjugacy(f.clone(), factor, contraction, x_max).unwrap();
    assert_eq!(g(0.0), 0.0);
    linspace(0.0_f64, x_max, 1001)
        .into_iter()
        .skip(1)
        .map(|x| (g(f(x)) - factor * g(x)).abs() / g(x).abs().max(1.0))
        .fold(0.0, f64::max)
}

#[test]
fn conjugacy_residuals() {
    assert!(conjugacy_residual(|x| 2.0 * x, 3.0, false, 10.0) <= 1e-9);
    assert!(conjugacy_residual(|x| x + x * x, 2.0, false, 5.0) <= 1e-9);
    assert!(conjugacy_residual(|x| x / 2.0, 0.25, true, 10.0) <= 1e-9);
}

#[test]
fn conjugacy_rejects_wrong_direction() {
    assert!(kappa_conjugacy(Arc::new(|x: f64| x / 2.0), 2.0, false, 10.0).is_err());
    assert!(kappa_conjugacy(Arc::new(|x: f64| 2.0 * x), 0.5, true, 10.0).is_err());
}

#[test]
fn yoshizawa_on_worked_example() {
    let params = ExampleParams::new(9.0_f64, 0.1).unwrap();
    let cf = closed_forms(params);
    let sys = worked_system(params);
    let mut seq = cf.sequence();
    let raw = pair_b(params, cf.n_zero);
    let pair = verify_pair(&mut seq, raw.h, raw.beta, 200).unwrap();
    let y = yoshizawa_construct(&pair, &sys, 400).unwrap();
    for x in sys.initial_set.samples(1000) {
        let vx = y.v.eval(&x).finite().unwrap();
        let vt = y.v.eval(&sys.map(&x)).finite().unwrap();
        assert!(vx <= 1.0 + 1e-12, "V({x:?}) = {vx}");
        assert!(vt <= pair.beta * vx * (1.0 + 1e-9) + 1e-15, "V(Tx) = {vt} > beta V(x) = {}", pair.beta * vx);
    }
    let r = verify_certificate(&y.h_hat, &y.v, &sys, &seq, 60, 200).unwrap();
    assert!(r.passed, "{r:?}");
    assert_eq!(y.truncations(), 0);
}

#[test]
fn power_bound_holds_in_class() {
    let params = ExampleParams::new(30.0_f64, 1.0 / 3.0).unwrap();
    let sys = worked_system(params);
    let v = lyapunov_function(params);
    let r1 = operator_ratio(&v, &sys, 1, 200).unwrap();
    assert!(r1.n_condition);
    for k in 2..=4 {
        let rk = operator_ratio(&v, &sys, k, 200).unwrap();
        assert!(rk.ratio <= r1.ratio.powi(k as i32) * (1.0 + 1e-9), "k = {k}");
    }
    let line = System::new(
        "x/2",
        InitialSet::Box { lo: vec![-1.0], hi: vec![2.0] },
        |x: &[f64]| vec![x[0] / 2.0],
        |x: &[f64]| x[0],
    )
    .unwrap();
    let p = Psd::finite("x^2", |x: &[f64]| x[0] * x[0]);
    let r1 = operator_ratio(&p, &line, 1, 100).unwrap();
    let r3 = operator_ratio(&p, &line, 3, 100).unwrap();
    assert!((r1.ratio - 0.25).abs() < 1e-12);
    assert!(r3.ratio <= r1.ratio.powi(3) * (1.0 + 1e-12));
}

#[test]
fn counterexample_breaks_power_bound() {
    let sys =
        System::new("-x", InitialSet::Box { lo: vec![-1.0], hi: vec![1.0] }, |x: &[f64]| vec![-x[0]], |x: &[f64]| x[0])
            .unwrap();
    let p = Psd::finite("max(x,0)", |x: &[f64]| x[0].max(0.0)).with_witness(vec![1.0]);
    let r1 = operator_ratio(&p, &sys, 1, 101).unwrap();
    let r2 = operator_ratio(&p, &sys, 2, 101).unwrap();
    assert_eq!((r1.ratio, r2.ratio, r1.n_condition), (0.0, 1.0, false));
}

#[test]
fn extended_values_are_skipped_by_decrement() {
    let sys = System::new(
        "x/2",
        InitialSet::Box { lo: vec![0.5], hi: vec![1.0] },
        |x: &[f64]| vec![x[0] / 2.0],
        |x: &[f64]| x[0],
    )
    .unwrap();
    // +∞ off X^in orbits is allowed; only the decrement and containment are checked.
    let v = Psd::new("x^2 or inf", |x: &[f64]| if x[0] < -5.0 { Ext::Infinite } else { Ext::Finite(x[0] * x[0]) });
    let cand = verify_opt_lyapunov(v, &sys, 0.5, 50).unwrap();
    assert!((cand.ratio - 0.25).abs() < 1e-12);
}
