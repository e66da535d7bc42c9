use pulsesis_core::analysis::{self, periodic_capacity_params, verify_periodic_capacity};
use pulsesis_core::integrator::{integrate, Tolerances};
use pulsesis_core::{EquilibriumKind, LimitingParams, Scenario, Stability, State, Thresholds, TimeFn};

fn distance(a: State, b: State) -> f64 {
    (a.s - b.s).hypot(a.i - b.i)
}

#[test]
fn perturbed_stable_endemic_point_is_approached() {
    let lim = LimitingParams::new(1.0, 0.5, 0.5, 0.1, 1.0, 1.0, 100.0);
    let eqs = analysis::equilibria(&lim, &Thresholds::default()).unwrap();
    let e = eqs.iter().find(|e| e.kind == EquilibriumKind::Endemic).unwrap();
    assert_eq!(e.classification, Stability::LocallyAsymptoticallyStable);
    let start = State::new(1.01 * e.point.s, 0.99 * e.point.i);
    let horizon = 25.0;
    let traj = integrate(&Scenario::new(lim.to_params(1e-6), start, horizon).with_uniform_grid(100)).unwrap();
    let tail: Vec<f64> =
        traj.samples.iter().filter(|x| x.t >= 0.8 * horizon).map(|x| distance(x.state(), e.point)).collect();
    assert!(tail.last().unwrap() < tail.first().unwrap());
    assert!(*tail.last().unwrap() < 1e-3 * distance(start, e.point));
}

#[test]
fn periodic_capacity_gives_periodic_total() {
    for a in [0.1, 0.3] {
        let tp = 2.0;
        let params = periodic_capacity_params(1.0, a, tp, 100.0);
        let v = verify_periodic_capacity(&params, tp, 20.0, 10, 1e-10).unwrap();
        assert!(v.periodic, "{:?}", v.max_residual);
        let sc = Scenario::new(params, State::new(100.0, 0.0), 20.0).with_tolerances(Tolerances::new(1e-12, 1e-12));
        let traj = integrate(&sc).unwrap();
        for k in 0..10 {
            let t = 1.7 * k as f64;
            let (x, y) = (traj.state_at(t).unwrap(), traj.state_at(t + tp).unwrap());
            assert!((y.n() - x.n()).abs() <= 1e-6 * x.n(), "a {a} t {t}: {} vs {}", x.n(), y.n());
        }
    }
}

#[test]
fn constant_excess_incidence_breaks_periodicity() {
    let mut params = periodic_capacity_params(1.0, 0.1, 2.0, 100.0);
    params.delta1 = TimeFn::constant(1.1);
    let v = verify_periodic_capacity(&params, 2.0, 20.0, 10, 1e-10).unwrap();
    assert!(!v.periodic);
    assert!((v.max_residual + 0.2).abs() < 1e-9);
}
