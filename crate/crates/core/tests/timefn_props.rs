use proptest::prelude::*;
use pulsesis_core::quadrature::simpson;
use pulsesis_core::TimeFn;

fn leaf() -> impl Strategy<Value = TimeFn> {
    prop_oneof![
        (-5.0..5.0f64).prop_map(TimeFn::constant),
        (-2.0..2.0f64, 0.0..2.0f64, 0.2..5.0f64, 0.0..6.3f64).prop_map(|(m, a, p, ph)| TimeFn::sinusoid(m, a, p, ph)),
        prop::collection::vec(0.1..3.0f64, 1..5).prop_flat_map(|gaps| {
            let n = gaps.len();
            let breaks: Vec<f64> = gaps
                .iter()
                .scan(0.0, |acc, g| {
                    *acc += g;
                    Some(*acc)
                })
                .collect();
            prop::collection::vec(-3.0..3.0f64, n + 1).prop_map(move |v| TimeFn::piecewise_constant(breaks.clone(), v))
        }),
        prop::collection::vec((0.1..3.0f64, -3.0..3.0f64), 1..5).prop_map(|pts| {
            let mut t = 0.0;
            TimeFn::piecewise_linear(
                pts.into_iter()
                    .map(|(g, v)| {
                        t += g;
                        (t, v)
                    })
                    .collect(),
            )
        }),
    ]
}

fn spec() -> impl Strategy<Value = TimeFn> {
    leaf().prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(TimeFn::sum),
            (-2.0..2.0f64, inner).prop_map(|(k, f)| TimeFn::scaled(k, f)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bounds_enclose_samples(f in spec(), a in 0.0..10.0f64, w in 0.0..10.0f64) {
        let b = f.bounds_over(a, a + w);
        prop_assert!(b.lower <= b.upper);
        for k in 0..=400 {
            let t = a + w * k as f64 / 400.0;
            let v = f.value(t);
            prop_assert!(b.lower - 1e-12 <= v && v <= b.upper + 1e-12, "t={} v={} {:?}", t, v, b);
        }
    }

    #[test]
    fn integral_is_additive(f in spec(), a in 0.0..5.0f64, w1 in 0.0..5.0f64, w2 in 0.0..5.0f64) {
        let tol = 1e-10;
        let (b, c) = (a + w1, a + w1 + w2);
        let whole = f.integrate(a, c, tol).unwrap();
        let parts = f.integrate(a, b, tol).unwrap() + f.integrate(b, c, tol).unwrap();
        prop_assert!((whole - parts).abs() <= 2.0 * tol, "{} vs {}", whole, parts);
    }

    #[test]
    fn sum_and_scaled_are_linear(f in spec(), g in spec(), k in -3.0..3.0f64, t1 in 0.1..8.0f64) {
        let tol = 1e-10;
        let fi = f.integrate(0.0, t1, tol).unwrap();
        let gi = g.integrate(0.0, t1, tol).unwrap();
        let s = TimeFn::sum(vec![f.clone(), g]).integrate(0.0, t1, tol).unwrap();
        prop_assert!((s - fi - gi).abs() <= 3.0 * tol);
        let sc = TimeFn::scaled(k, f).integrate(0.0, t1, tol).unwrap();
        prop_assert!((sc - k * fi).abs() <= tol * (1.0 + k.abs()) * 2.0);
    }
}

#[test]
fn piecewise_constant_integral_matches_fine_simpson() {
    let f = TimeFn::piecewise_constant(vec![2.0], vec![1.0, 5.0]);
    let q = f.integrate(0.0, 4.0, 1e-10).unwrap();
    let reference = simpson(|t| f.value(t), 0.0, 4.0, 1_000_000);
    assert!((q - 12.0).abs() < 1e-10);
    assert!((q - reference).abs() < 1e-5);
}

#[test]
fn sum_bounds_contain_dense_samples() {
    let f = TimeFn::sum(vec![TimeFn::constant(1.0), TimeFn::sinusoid(0.0, 1.0, 1.0, 0.0)]);
    let b = f.bounds_over(0.0, 0.25);
    let (lo, hi) = (0..=100_000)
        .map(|k| f.value(0.25 * k as f64 / 1e5))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    assert!(b.lower <= lo && hi <= b.upper);
    assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 2.0).abs() < 1e-12);
}

#[test]
fn evaluation_conventions() {
    assert_eq!(TimeFn::constant(2.5).value(7.0), 2.5);
    let s = TimeFn::sinusoid(1.0, 0.5, std::f64::consts::TAU, 0.0);
    assert!((s.value(std::f64::consts::FRAC_PI_2) - 1.5).abs() < 1e-15);
    assert_eq!(TimeFn::piecewise_constant(vec![1.0], vec![3.0, 4.0]).value(1.0), 4.0);
    assert!(TimeFn::constant(1.0).eval(-1.0).is_err());
}
