mod common;

use pulsesis_core::integrator::{apply_impulse, integrate, SampleKind, Tolerances};
use pulsesis_core::{ImpulseEvent, ImpulseSchedule, ModelParams, Scenario, State};
use rand::Rng;

#[test]
fn random_scenarios_stay_nonnegative() {
    let mut rng = common::rng(21);
    for k in 0..60 {
        let sc = common::scenario(&mut rng, k % 2 == 1);
        assert!(sc.validate().is_empty(), "{:?}", sc.validate());
        let traj = integrate(&sc).unwrap();
        let tol = 1e-9 * (1.0 + sc.initial.n());
        let (s, i) = traj.min_components();
        assert!(s >= -tol && i >= -tol, "case {k}: min S {s}, min I {i}");
        for w in traj.samples.windows(2) {
            assert!(
                w[0].t < w[1].t || (w[0].t == w[1].t && w[0].kind == SampleKind::Pre && w[1].kind == SampleKind::Post)
            );
        }
    }
}

#[test]
fn impulses_never_increase_the_total() {
    let mut rng = common::rng(22);
    for _ in 0..30 {
        let sc = common::scenario(&mut rng, true);
        let traj = integrate(&sc).unwrap();
        assert_eq!(traj.impulses.len(), sc.schedule.within(sc.horizon).count());
        for r in &traj.impulses {
            assert!(r.after.n() <= r.before.n());
            if r.p.max(r.q) > 0.0 && r.before.s > 0.0 && r.before.i > 0.0 {
                assert!(r.after.n() < r.before.n());
            }
        }
    }
}

#[test]
fn zero_infected_stays_exactly_zero() {
    let mut rng = common::rng(23);
    for _ in 0..10 {
        let mut sc = {
            let imp = rng.gen_bool(0.5);
            common::scenario(&mut rng, imp)
        };
        sc.initial.i = 0.0;
        let traj = integrate(&sc).unwrap();
        assert!(traj.samples.iter().all(|x| x.i == 0.0));
        sc.initial = State::ZERO;
        let traj = integrate(&sc).unwrap();
        assert!(traj.samples.iter().all(|x| x.s == 0.0 && x.i == 0.0));
    }
}

#[test]
fn linear_decay_of_infected() {
    let p = ModelParams::constant(0.0, 0.6, 0.4, 0.0, 1.0, 1.0, 100.0);
    let sc = Scenario::new(p, State::new(10.0, 1.0), 5.0);
    let traj = integrate(&sc).unwrap();
    for t in [1.0, 2.0, 5.0] {
        let x = traj.state_at(t).unwrap();
        assert!((x.i - (-t).exp()).abs() < 1e-8, "t = {t}: {}", x.i);
    }
}

#[test]
fn culling_all_infected_is_final() {
    let p = ModelParams::constant(1.0, 0.1, 0.2, 0.02, 1.0, 1.0, 100.0);
    let sc = Scenario::new(p, State::new(40.0, 10.0), 4.0)
        .with_schedule(ImpulseSchedule::new(1.0, vec![ImpulseEvent::new(1.0, 0.0, 1.0)]));
    let traj = integrate(&sc).unwrap();
    let r = traj.impulses[0];
    assert_eq!(r.after.s, r.before.s);
    assert_eq!(r.after.i, 0.0);
    assert!(traj.samples.iter().filter(|x| x.t > 1.0 || x.kind == SampleKind::Post).all(|x| x.i == 0.0));
}

#[test]
fn total_cull_extinguishes() {
    let p = ModelParams::constant(1.0, 0.1, 0.2, 0.02, 1.0, 1.0, 100.0);
    let sc = Scenario::new(p, State::new(40.0, 10.0), 4.0)
        .with_schedule(ImpulseSchedule::new(1.0, vec![ImpulseEvent::new(1.5, 1.0, 1.0)]));
    let traj = integrate(&sc).unwrap();
    assert!(traj.samples.iter().filter(|x| x.t > 1.5 || x.kind == SampleKind::Post).all(|x| x.s == 0.0 && x.i == 0.0));
}

#[test]
fn impulse_map_examples() {
    assert_eq!(apply_impulse(State::new(100.0, 40.0), 0.2, 0.5), State::new(80.0, 20.0));
    assert_eq!(apply_impulse(State::new(3.0, 4.0), 0.0, 0.0), State::new(3.0, 4.0));
    assert_eq!(apply_impulse(State::new(3.0, 4.0), 1.0, 1.0), State::ZERO);
}

#[test]
fn schedule_validation_examples() {
    let ok = ImpulseSchedule::new(1.0, vec![ImpulseEvent::new(1.0, 0.2, 0.3), ImpulseEvent::new(2.0, 0.2, 0.3)]);
    assert!(ok.validate().is_empty());
    let close = ImpulseSchedule::new(1.0, vec![ImpulseEvent::new(1.0, 0.2, 0.3), ImpulseEvent::new(1.5, 0.2, 0.3)]);
    let v = close.validate();
    assert_eq!(v.len(), 1);
    assert!(v[0].message.contains("event 1"));
    let frac = ImpulseSchedule::new(1.0, vec![ImpulseEvent::new(1.0, 1.2, 0.3)]);
    assert_eq!(frac.validate().len(), 1);
}

#[test]
fn halving_tolerances_converges() {
    let mut rng = common::rng(24);
    for _ in 0..10 {
        let sc = {
            let imp = rng.gen_bool(0.5);
            common::scenario(&mut rng, imp)
        }
        .with_tolerances(Tolerances::new(1e-8, 1e-10));
        let coarse = integrate(&sc).unwrap();
        let fine_sc = sc.clone().with_tolerances(sc.tolerances.halved());
        let fine = integrate(&fine_sc).unwrap();
        let (a, b) = (coarse.final_state(), fine.final_state());
        let diff = (a.s - b.s).abs().max((a.i - b.i).abs());
        let bound = 10.0 * fine.stats.error_estimate.max(fine_sc.tolerances.abs);
        assert!(diff <= bound.max(1e-9 * (1.0 + b.norm_inf())), "diff {diff} bound {bound}");
    }
}

#[test]
fn output_grid_times_are_sampled() {
    let p = ModelParams::constant(0.5, 0.1, 0.1, 0.01, 1.0, 1.0, 100.0);
    let sc = Scenario::new(p, State::new(20.0, 5.0), 10.0).with_uniform_grid(20);
    let traj = integrate(&sc).unwrap();
    for t in &sc.output_grid {
        assert!(traj.samples.iter().any(|x| x.t == *t), "missing {t}");
    }
    assert!(traj.complete());
}
