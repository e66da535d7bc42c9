#![allow(dead_code)]

use pulsesis_core::{ImpulseEvent, ImpulseSchedule, ModelParams, Scenario, State, TimeFn};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nonnegative coefficient in `[lo, hi]`, constant or varying.
pub fn coefficient(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> TimeFn {
    let mid = rng.gen_range(lo..=hi);
    match rng.gen_range(0..4) {
        0 => TimeFn::constant(mid),
        1 => {
            let amp = rng.gen_range(0.0..=(mid - lo).min(hi - mid));
            TimeFn::sinusoid(mid, amp, rng.gen_range(1.0..10.0), rng.gen_range(0.0..std::f64::consts::TAU))
        }
        2 => {
            let n = rng.gen_range(1..4);
            let mut t = 0.0;
            let breaks: Vec<f64> = (0..n)
                .map(|_| {
                    t += rng.gen_range(1.0..8.0);
                    t
                })
                .collect();
            let values = (0..=n).map(|_| rng.gen_range(lo..=hi)).collect();
            TimeFn::piecewise_constant(breaks, values)
        }
        _ => {
            let mut t = 0.0;
            let knots = (0..rng.gen_range(2..5))
                .map(|_| {
                    t += rng.gen_range(1.0..10.0);
                    (t, rng.gen_range(lo..=hi))
                })
                .collect();
            TimeFn::piecewise_linear(knots)
        }
    }
}

pub fn params(rng: &mut ChaCha8Rng) -> ModelParams {
    let cap = rng.gen_range(20.0..200.0);
    let mut p = ModelParams::constant(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, cap);
    p.r = coefficient(rng, 0.0, 1.5);
    p.d = coefficient(rng, 0.0, 1.0);
    p.gamma = coefficient(rng, 0.0, 1.0);
    p.beta = coefficient(rng, 0.0, 0.05);
    p.delta1 = coefficient(rng, 0.1, 2.0);
    p.delta2 = coefficient(rng, 0.1, 2.0);
    if rng.gen_bool(0.5) {
        let amp = rng.gen_range(0.0..0.2 * cap);
        p.p0 = TimeFn::sinusoid(0.0, amp, rng.gen_range(2.0..10.0), 0.0);
        p.k = TimeFn::constant(cap + amp);
    }
    p
}

pub fn initial(rng: &mut ChaCha8Rng) -> State {
    State::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..50.0))
}

pub fn schedule(rng: &mut ChaCha8Rng, horizon: f64) -> ImpulseSchedule {
    let gap = rng.gen_range(0.5..5.0);
    let mut events = Vec::new();
    let mut t = rng.gen_range(0.1..gap + 0.1);
    while t < horizon {
        events.push(ImpulseEvent::new(t, rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)));
        t += gap + rng.gen_range(0.0..2.0);
    }
    ImpulseSchedule::new(gap, events)
}

pub fn scenario(rng: &mut ChaCha8Rng, impulses: bool) -> Scenario {
    let horizon = rng.gen_range(5.0..50.0);
    let mut sc = Scenario::new(params(rng), initial(rng), horizon);
    if impulses {
        sc = sc.with_schedule(schedule(rng, horizon));
    }
    sc
}
