use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::oracles::{Cumulative, TrajectoryOracles};
use super::sign::SignPartition;
use super::{ev, flag, CheckId, ConditionEntry, Context, Evidence, Verdict};
use crate::integrator::ImpulseSchedule;
use crate::model::{ModelParams, State};
use crate::settings::WeightRule;

use Verdict::{No, Undetermined, Yes};

struct Entry {
    hyp: Verdict,
    concl: Verdict,
    evidence: Vec<Evidence>,
    notes: Vec<String>,
    finite: bool,
}

impl Entry {
    fn new(hyp: Verdict, concl: Verdict) -> Self {
        Self { hyp, concl, evidence: Vec::new(), notes: Vec::new(), finite: false }
    }

    fn ev(mut self, name: &'static str, value: f64) -> Self {
        self.evidence.push(ev(name, value));
        self
    }

    fn note(mut self, s: &str) -> Self {
        self.notes.push(s.to_owned());
        self
    }

    fn finite(mut self) -> Self {
        self.finite = true;
        self
    }
}

pub(crate) fn run(cx: &Context, check: CheckId) -> ConditionEntry {
    let e = match check {
        CheckId::Positivity => positivity(cx),
        CheckId::NegativeRecoveryPositivity => negative_recovery(cx),
        CheckId::InfectionFreeIntegrableGrowth => infection_free_integrable(cx),
        CheckId::InfectionFreeExponentialExtinction => infection_free_extinction(cx),
        CheckId::SusceptibleFreeRegime => susceptible_free(cx),
        CheckId::BoundedPositiveRates => bounded_positive_rates(cx),
        CheckId::BoundedDeathDominance => bounded_death_dominance(cx),
        CheckId::VanishingPopulations => vanishing_populations(cx),
        CheckId::InfectedExponentialDecay => infected_decay(cx),
        CheckId::BoundedTotalSmallDelta2 => small_delta2(cx),
        CheckId::BoundedRatioCondition => ratio_condition(cx, false),
        CheckId::IntegrableGrowthBounds => integrable_growth(cx),
        CheckId::ZeroEquilibriumInstability => zero_instability(cx),
        CheckId::UltimateBoundedness => ratio_condition(cx, true),
        CheckId::InfectedUnboundedGrowth => infected_growth(cx),
        CheckId::NoZeroSusceptible => no_zero_susceptible(cx),
        CheckId::InfectionFreeOscillation => oscillation(cx),
        CheckId::InvariantSetOmega => omega(cx),
        CheckId::InvariantSetOmegaE => omega_e(cx),
        CheckId::ImpulsiveBoundedPositiveDelta => impulsive_delta(cx),
        CheckId::ImpulsiveLogContraction => log_contraction(cx),
    };
    ConditionEntry {
        check,
        hypothesis: e.hyp,
        conclusion: e.concl,
        evidence: e.evidence,
        notes: e.notes,
        finite_horizon: e.finite,
    }
}

fn nonneg_initial(cx: &Context) -> bool {
    let x = cx.initial();
    x.s >= 0.0 && x.i >= 0.0
}

/// Premises shared by every bound built on `G ≥ δ_m N`: nonnegative data
/// and recovery so that the state stays nonnegative.
fn positive_regime(cx: &Context) -> bool {
    nonneg_initial(cx) && cx.over_horizon(&cx.params().gamma).lower >= 0.0
}

fn infection_free(cx: &Context) -> bool {
    cx.initial().i == 0.0
}

/// `sup p / δ_m` over the horizon, infinite when `δ_m ≤ 0`.
fn omega_bound(cx: &Context) -> (f64, f64) {
    let dm = cx.params().delta_bounds(0.0, cx.end).delta_m();
    let cap = cx.capacity_over(0.0, cx.end);
    if dm > 0.0 {
        (cap.upper / dm, cap.lower / dm)
    } else {
        (f64::INFINITY, f64::INFINITY)
    }
}

fn positivity(cx: &Context) -> Entry {
    let x0 = cx.initial();
    let g = cx.over_horizon(&cx.params().gamma);
    let hyp = Verdict::from_bool(nonneg_initial(cx) && g.lower >= 0.0);
    let tol = cx.neg_tol();
    let (mut min_s, mut min_i) = (f64::INFINITY, f64::INFINITY);
    for p in &cx.series {
        min_s = min_s.min(p.x.s);
        min_i = min_i.min(p.x.i);
    }
    let mut ok = min_s >= -tol && min_i >= -tol;
    let mut e = Entry::new(hyp, Undetermined);
    if x0.i == 0.0 {
        let zero = cx.series.iter().all(|p| p.x.i == 0.0);
        ok &= zero;
        e = e.ev("infected_stays_zero", flag(zero));
    }
    if x0.n() == 0.0 && x0.s == 0.0 {
        let zero = cx.series.iter().all(|p| p.x.s == 0.0 && p.x.i == 0.0);
        ok &= zero;
        e = e.ev("total_stays_zero", flag(zero));
    }
    e.concl = Verdict::from_bool(ok);
    e.ev("min_s", min_s).ev("min_i", min_i).ev("neg_tol", tol).ev("gamma_lower", g.lower)
}

fn negative_recovery(cx: &Context) -> Entry {
    let x0 = cx.initial();
    let tol = cx.neg_tol();
    let (min_s, min_i) =
        cx.series.iter().fold((f64::INFINITY, f64::INFINITY), |(s, i), p| (s.min(p.x.s), i.min(p.x.i)));
    let concl = Verdict::from_bool(min_s >= -tol && min_i >= -tol);
    let base = Entry::new(Undetermined, concl).ev("min_s", min_s).ev("min_i", min_i);
    if !(x0.i > 0.0 && x0.s >= 0.0) {
        return base.note("condition needs I(0) > 0 and S(0) >= 0");
    }
    if cx.impulsive() {
        return base.note("condition is stated for the impulse-free system");
    }
    let params = cx.params();
    let gamma = &params.gamma;
    let part = SignPartition::build(gamma, 0.0, cx.end, 64);
    let neg_measure: f64 = part.neg_intervals.iter().map(|iv| iv.len()).sum();
    if part.neg_intervals.is_empty() {
        return Entry { hyp: Yes, ..base }.ev("negative_measure", 0.0).note("gamma is nonnegative on the horizon");
    }
    let oracles = match TrajectoryOracles::new(cx.traj, params, cx.th.quad_tol) {
        Ok(o) => o,
        Err(_) => return base.note("quadrature along the trajectory failed"),
    };
    let mut knots = TrajectoryOracles::mesh(cx.traj);
    knots.extend(part.boundaries());
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    // E₂/Φ_S = exp(∫(βS - d - γ) - ∫(a - βI))
    let ratio = |s: f64| -> f64 {
        match (oracles.infected_exponent(s), oracles.susceptible_exponent(s)) {
            (Ok(e), Ok(f)) => libm::exp(e - f),
            _ => f64::NAN,
        }
    };
    let jp_f = |s: f64| {
        let g = gamma.value(s);
        if g > 0.0 {
            g * ratio(s)
        } else {
            0.0
        }
    };
    let jm_f = |s: f64| if gamma.value(s) < 0.0 { ratio(s) } else { 0.0 };
    let (jp, jm) = match (
        Cumulative::build(knots.clone(), &jp_f, cx.th.quad_tol),
        Cumulative::build(knots, &jm_f, cx.th.quad_tol),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return base.note("quadrature along the trajectory failed"),
    };
    let sups: Vec<(f64, f64)> =
        part.neg_intervals.iter().map(|iv| (iv.a, -gamma.bounds_over(iv.a, iv.b).lower)).collect();
    let s_over_i = x0.s / x0.i;
    let mut margin = f64::INFINITY;
    for p in cx.series.iter().filter(|p| p.t > 0.0) {
        let sup = sups.iter().filter(|(a, _)| *a < p.t).fold(0.0f64, |m, (_, v)| m.max(*v));
        let lhs = if sup > 0.0 { sup * jm.at(p.t, &jm_f).unwrap_or(f64::NAN) } else { 0.0 };
        let rhs = s_over_i + jp.at(p.t, &jp_f).unwrap_or(f64::NAN);
        let m = rhs - lhs;
        if m.is_nan() {
            return base.note("quadrature along the trajectory failed");
        }
        margin = margin.min(m);
    }
    let hyp = Verdict::from_bool(margin >= -cx.th.class_tol * (1.0 + s_over_i));
    Entry { hyp, ..base }.ev("min_margin", margin).ev("negative_measure", neg_measure)
}

fn infection_free_integrable(cx: &Context) -> Entry {
    let p = cx.params();
    let g = |_t: f64, x: State, c: &crate::model::Coefficients| (c.r * (1.0 - c.delta1 * x.n() / c.p)).abs();
    if !infection_free(cx) {
        return Entry::new(No, cx.bounded_verdict(None)).note("infected compartment is not identically zero").finite();
    }
    let (tail_abs, total_abs) = match (cx.integral(g, cx.t_tail, cx.end), cx.integral(g, 0.0, cx.end)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Entry::new(Undetermined, cx.bounded_verdict(None)).note("quadrature failed").finite(),
    };
    let hyp = Verdict::from_bool(tail_abs <= cx.th.slope_tol * cx.tail_len);
    let scale = cx.n0 * libm::exp(total_abs);
    let d1 = cx.over_tail(&p.delta1).lower;
    let p_over_n = cx.tail().filter(|q| q.x.n() > 0.0).map(|q| cx.coeff(q.t).p / q.x.n()).fold(f64::INFINITY, f64::min);
    Entry::new(hyp, cx.bounded_verdict(Some(scale)))
        .ev("tail_abs_growth_integral", tail_abs)
        .ev("abs_growth_integral", total_abs)
        .ev("liminf_delta1", d1)
        .ev("liminf_p_over_n", p_over_n)
        .ev("sufficient_condition", flag(d1 >= p_over_n))
        .finite()
}

fn infection_free_extinction(cx: &Context) -> Entry {
    let p = cx.params();
    let n_tail = cx.state_at(cx.t_tail).n();
    let n_end = cx.final_state().n();
    let concl = cx.decay_verdict(n_tail, n_end, 0.0);
    if !infection_free(cx) {
        return Entry::new(No, Undetermined).note("infected compartment is not identically zero").finite();
    }
    let g = |_t: f64, x: State, c: &crate::model::Coefficients| c.r * (1.0 - c.delta1 * x.n() / c.p);
    let Some(tail_g) = cx.integral(g, cx.t_tail, cx.end) else {
        return Entry::new(Undetermined, concl).note("quadrature failed").finite();
    };
    let required = cx.th.slope_tol * cx.tail_len;
    let hyp = Verdict::from_bool(tail_g <= -required);
    let concl = cx.decay_verdict(n_tail, n_end, required);
    let pts: Vec<(f64, f64)> = cx.tail().filter(|q| q.x.n() > 0.0).map(|q| (q.t, libm::log(q.x.n()))).collect();
    let rate = crate::analysis::regression_slope(&pts);
    let ratio_min = cx
        .tail()
        .map(|q| {
            let c = cx.coeff(q.t);
            c.delta1 * q.x.n() / c.p - 1.0
        })
        .fold(f64::INFINITY, f64::min);
    Entry::new(hyp, concl)
        .ev("tail_growth_integral", tail_g)
        .ev("fitted_log_rate", rate)
        .ev("extinct", flag(n_end <= cx.th.ext_tol * cx.n0))
        .ev("liminf_r", cx.over_tail(&p.r).lower)
        .ev("liminf_excess_incidence", ratio_min)
        .finite()
}

fn susceptible_free(cx: &Context) -> Entry {
    let g = cx.over_horizon(&cx.params().gamma);
    let hyp = Verdict::from_bool(cx.initial().s == 0.0 && g.lower == 0.0 && g.upper == 0.0);
    let max_s = cx.series.iter().map(|p| p.x.s.abs()).fold(0.0, f64::max);
    let exact = cx.series.iter().all(|p| p.x.s == 0.0);
    let pts: Vec<(f64, f64)> = cx.tail().filter(|q| q.x.i > 0.0).map(|q| (q.t, libm::log(q.x.i))).collect();
    Entry::new(hyp, Verdict::from_bool(max_s <= cx.neg_tol()))
        .ev("max_abs_s", max_s)
        .ev("exactly_zero", flag(exact))
        .ev("infected_log_rate", crate::analysis::regression_slope(&pts))
}

fn bounded_positive_rates(cx: &Context) -> Entry {
    let p = cx.params();
    let dm1 = cx.over_horizon(&p.delta1).lower;
    let d = cx.over_horizon(&p.d);
    let r = cx.over_horizon(&p.r);
    let cap = cx.capacity_over(0.0, cx.end);
    let ok = dm1 > 0.0 && d.lower > 0.0 && r.lower > 0.0 && positive_regime(cx);
    if !ok {
        return Entry::new(No, cx.bounded_verdict(None))
            .ev("delta_m1", dm1)
            .ev("d_min", d.lower)
            .ev("r_min", r.lower)
            .finite();
    }
    // N ≤ max(N₀, sup p/δ_m1 + sup r · sup p / (4 δ_m1 inf d))
    let m1 = cap.upper / dm1;
    let c = r.upper * cap.upper / (4.0 * dm1);
    let bound = cx.n0.max(m1 + c / d.lower);
    Entry::new(Yes, cx.within_bound(bound))
        .ev("bound", bound)
        .ev("n_max", cx.n_max)
        .ev("delta_m1", dm1)
        .ev("d_min", d.lower)
        .ev("r_min", r.lower)
}

fn bounded_death_dominance(cx: &Context) -> Entry {
    let p = cx.params();
    let d = cx.over_tail(&p.d);
    let rt = cx.over_tail(&p.r);
    let r_all = cx.over_horizon(&p.r);
    let dm = cx.params().delta_bounds(0.0, cx.end).delta_m();
    let vanishing = rt.lower.abs().max(rt.upper.abs()) <= cx.th.limit_tol;
    let base = |e: Entry| e.ev("liminf_d", d.lower).ev("limsup_abs_r", rt.lower.abs().max(rt.upper.abs())).finite();
    if d.lower > 0.0 && vanishing && r_all.lower >= 0.0 && dm >= 0.0 && positive_regime(cx) {
        // r ≥ 0: N' ≤ rN
        let Some(ir) = p.r.integrate(0.0, cx.end, cx.th.quad_tol).ok() else {
            return base(Entry::new(Undetermined, cx.bounded_verdict(None)));
        };
        let scale = cx.n0 * libm::exp(ir);
        return base(Entry::new(Yes, cx.bounded_verdict(Some(scale)))).ev("growth_integral", ir);
    }
    if d.lower > 0.0 && rt.lower > 0.0 {
        let ratio = d.lower / rt.upper;
        return base(Entry::new(Undetermined, cx.bounded_verdict(None)))
            .ev("liminf_d_over_r", ratio)
            .note("no finite threshold makes d/r sufficiently large");
    }
    base(Entry::new(No, cx.bounded_verdict(None)))
}

fn vanishing_populations(cx: &Context) -> Entry {
    let a = |_t: f64, x: State, c: &crate::model::Coefficients| c.logistic_factor(x);
    let n_tail = cx.state_at(cx.t_tail).n();
    let n_end = cx.final_state().n();
    let Some(tail_a) = cx.integral(a, cx.t_tail, cx.end) else {
        return Entry::new(Undetermined, cx.decay_verdict(n_tail, n_end, 0.0)).note("quadrature failed").finite();
    };
    let b_min = cx
        .tail()
        .map(|q| {
            let c = cx.coeff(q.t);
            c.d + c.logistic_factor(q.x)
        })
        .fold(f64::INFINITY, f64::min);
    let required = cx.th.slope_tol * cx.tail_len;
    let hyp = Verdict::from_bool(tail_a <= -required && b_min >= -cx.th.class_tol && positive_regime(cx));
    Entry::new(hyp, cx.decay_verdict(n_tail, n_end, required))
        .ev("tail_growth_integral", tail_a)
        .ev("liminf_d_plus_growth", b_min)
        .ev("n_end_over_n0", if cx.n0 > 0.0 { n_end / cx.n0 } else { 0.0 })
        .finite()
}

fn infected_decay(cx: &Context) -> Entry {
    let p = cx.params();
    let eps_d = cx.over_tail(&p.d).lower;
    let eps_g = cx.over_tail(&p.gamma).lower;
    let beta_sup = cx.over_tail(&p.beta).upper;
    let s_sup = cx.tail().map(|q| q.x.s).fold(0.0, f64::max);
    let eps_i = eps_d + eps_g - beta_sup.max(0.0) * s_sup;
    let hyp = Verdict::from_bool(eps_i >= cx.th.slope_tol && s_sup.is_finite() && positive_regime(cx));
    let i_tail = cx.state_at(cx.t_tail).i;
    let i_end = cx.final_state().i;
    Entry::new(hyp, cx.decay_verdict(i_tail, i_end, eps_i.max(0.0) * cx.tail_len))
        .ev("eps_d", eps_d)
        .ev("eps_gamma", eps_g)
        .ev("limsup_s", s_sup)
        .ev("eps_i", eps_i)
        .ev("i_end", i_end)
        .finite()
}

fn small_delta2(cx: &Context) -> Entry {
    let p = cx.params();
    let dm2 = cx.over_tail(&p.delta2).lower;
    let r_low = cx.over_tail(&p.r).lower;
    let d_up = cx.over_tail(&p.d).upper;
    let cap = cx.capacity_over(cx.t_tail, cx.end);
    let pointwise = cx.tail().all(|q| {
        let c = cx.coeff(q.t);
        c.delta2 < 1.0 && c.delta2 * c.r * q.x.s < c.p * c.d
    });
    let uniform = dm2 > 0.0 && r_low > 0.0 && positive_regime(cx);
    let e = if pointwise && uniform {
        // S < p d / (r δ₂) on the tail, and I > p/δ₂ forces N' < 0
        let s_bound = cap.upper * d_up / (r_low * dm2);
        let scale = cx.n_max_pre.max(s_bound + cap.upper / dm2);
        Entry::new(Yes, cx.bounded_verdict(Some(scale))).ev("scale", scale)
    } else if pointwise {
        Entry::new(Undetermined, cx.bounded_verdict(None))
            .note("pointwise condition holds without a positive lower bound on delta2 and r")
    } else {
        Entry::new(No, cx.bounded_verdict(None))
    };
    e.ev("pointwise_condition", flag(pointwise)).ev("delta_m2", dm2).ev("r_min", r_low).finite()
}

fn ratio(d: f64, r: f64) -> f64 {
    if r != 0.0 {
        d / r
    } else if d > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn s_over_i(x: State) -> f64 {
    if x.i > 0.0 {
        x.s / x.i
    } else {
        f64::INFINITY
    }
}

/// Ratio condition `d/r ≤ S/I` with `d/r ≥ 0`, both at the tail.
fn ratio_condition(cx: &Context, ultimate: bool) -> Entry {
    let p = cx.params();
    let mut gap = f64::NEG_INFINITY;
    let mut dr_min = f64::INFINITY;
    for q in cx.tail() {
        let c = cx.coeff(q.t);
        let dr = ratio(c.d, c.r);
        dr_min = dr_min.min(dr);
        let g = dr - s_over_i(q.x);
        if !g.is_nan() {
            gap = gap.max(g);
        }
    }
    let printed = gap <= cx.th.class_tol && dr_min >= -cx.th.class_tol;
    let dm = p.delta_bounds(0.0, cx.end).delta_m();
    let r_low = cx.over_horizon(&p.r).lower;
    let extra = dm > 0.0 && r_low >= 0.0 && positive_regime(cx);
    let (bound, min_bound) = omega_bound(cx);
    let bound = cx.n0.max(bound);
    let hyp = match (printed, extra) {
        (true, true) => Yes,
        (true, false) => Undetermined,
        _ => No,
    };
    let concl = if extra {
        if ultimate {
            cx.within_bound(bound)
        } else {
            cx.bounded_verdict(Some(bound))
        }
    } else {
        cx.bounded_verdict(None)
    };
    let mut e = Entry::new(hyp, concl)
        .ev("limsup_gap", gap)
        .ev("liminf_d_over_r", dr_min)
        .ev("printed_le_zero", flag(gap <= cx.th.class_tol))
        .ev("printed_ge_zero", flag(gap >= -cx.th.class_tol))
        .ev("delta_m", dm)
        .ev("bound", bound)
        .ev("min_bound", min_bound)
        .finite();
    if printed && !extra {
        e = e.note("ratio condition alone does not bound N without delta_m > 0 and r >= 0");
    }
    e
}

fn integrable_growth(cx: &Context) -> Entry {
    let p = cx.params();
    let dm = p.delta_bounds(0.0, cx.end).delta_m();
    let f = move |_t: f64, x: State, c: &crate::model::Coefficients| c.r * (1.0 - dm * x.n() / c.p);
    let fp = move |t: f64, x: State, c: &crate::model::Coefficients| f(t, x, c).max(0.0);
    let ind = move |_t: f64, x: State, c: &crate::model::Coefficients| {
        if dm * x.n() < c.p {
            c.r
        } else {
            0.0
        }
    };
    let (Some(tail_f), Some(all_fp), Some(tail_ind)) =
        (cx.integral(f, cx.t_tail, cx.end), cx.integral(fp, 0.0, cx.end), cx.integral(ind, cx.t_tail, cx.end))
    else {
        return Entry::new(Undetermined, cx.bounded_verdict(None)).note("quadrature failed").finite();
    };
    let hyp = Verdict::from_bool(tail_f <= cx.th.slope_tol * cx.tail_len && positive_regime(cx));
    let r_low = cx.over_horizon(&p.r).lower;
    // r ≥ 0: N' ≤ f⁺ N
    let scale = if r_low >= 0.0 && dm >= 0.0 { Some(cx.n0 * libm::exp(all_fp)) } else { None };
    Entry::new(hyp, cx.bounded_verdict(scale))
        .ev("tail_growth_integral", tail_f)
        .ev("positive_growth_integral", all_fp)
        .ev("tail_indicator_integral", tail_ind)
        .finite()
}

fn zero_instability(cx: &Context) -> Entry {
    let p = cx.params();
    let kappa = cx.th.slope_tol;
    let n_min = cx.series.iter().map(|q| q.x.n()).fold(f64::INFINITY, f64::min);
    if cx.impulsive() {
        return Entry::new(Undetermined, Undetermined)
            .ev("n_min", n_min)
            .note("culling can move the state toward the origin");
    }
    let holds = positive_regime(cx)
        && cx.series.iter().all(|q| {
            let c = cx.coeff(q.t);
            c.r > 0.0 && c.d >= 0.0 && q.x.s > 0.0 && c.r * q.x.s - c.d * q.x.i >= kappa * c.r * q.x.s
        });
    let dmax = p.delta_bounds(0.0, cx.end).delta_max();
    let p_low = cx.capacity_over(0.0, cx.end).lower;
    // below κ p/δ_M the total strictly grows
    let floor = if dmax > 0.0 { cx.n0.min(kappa * p_low / dmax) } else { cx.n0 };
    Entry::new(Verdict::from_bool(holds), Verdict::from_bool(n_min >= 0.5 * floor))
        .ev("n_min", n_min)
        .ev("floor", floor)
}

fn infected_growth(cx: &Context) -> Entry {
    let i0 = cx.initial().i;
    let i_tail = cx.state_at(cx.t_tail).i;
    let i_end = cx.final_state().i;
    let i_max = cx.series.iter().map(|q| q.x.i).fold(0.0, f64::max);
    let concl = if i0 > 0.0 && i_max > cx.th.unbounded_factor * i0 {
        Yes
    } else if i_end <= i_tail {
        No
    } else {
        Undetermined
    };
    let rate_min = cx.tail().map(|q| cx.coeff(q.t).infected_rate(q.x)).fold(f64::INFINITY, f64::min);
    let e = |h| {
        Entry::new(h, concl)
            .ev("liminf_infected_rate", rate_min)
            .ev("i_max_over_i0", if i0 > 0.0 { i_max / i0 } else { 0.0 })
            .finite()
    };
    if !(i0 > 0.0) {
        return e(No).note("I(0) = 0 keeps I identically zero");
    }
    let culls_i = cx.traj.impulses.iter().any(|r| r.q > 0.0 && r.t >= cx.t_tail);
    if culls_i {
        return e(Undetermined).note("culling of I inside the tail window");
    }
    e(Verdict::from_bool(rate_min >= cx.th.slope_tol))
}

fn no_zero_susceptible(cx: &Context) -> Entry {
    let g = &cx.params().gamma;
    let last = cx.series.len().saturating_sub(1);
    let witness = cx.series[..last].iter().find(|q| q.x.i > 0.0 && g.value(q.t) > 0.0 && q.t < cx.end).map(|q| q.t);
    let s_max = cx.series.iter().map(|q| q.x.s).fold(f64::NEG_INFINITY, f64::max);
    let mut e = Entry::new(Verdict::from_bool(witness.is_some()), Verdict::from_bool(s_max > 0.0)).ev("s_max", s_max);
    if let Some(t) = witness {
        e = e.ev("witness_time", t);
    }
    if cx.initial().s == 0.0 && cx.over_horizon(g).upper <= 0.0 {
        e = e.note("zero recovery with S(0) = 0 is the susceptible-free regime");
    }
    e
}

fn sign_changes(values: impl Iterator<Item = f64>, tol: f64) -> usize {
    let mut last = 0i8;
    let mut n = 0;
    for v in values {
        let s = if v > tol {
            1
        } else if v < -tol {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                n += 1;
            }
            last = s;
        }
    }
    n
}

fn oscillation(cx: &Context) -> Entry {
    let p = cx.params();
    let tol = cx.th.osc_tol;
    let factor = |q: &super::Point| {
        let c = cx.coeff(q.t);
        1.0 - c.delta1 * q.x.n() / c.p
    };
    let factor_changes = sign_changes(cx.tail().map(factor), tol);
    let r_low = cx.over_horizon(&p.r).lower;
    let hyp = Verdict::from_bool(infection_free(cx) && r_low > 0.0 && cx.initial().s > 0.0 && factor_changes >= 2);
    let dm1 = p.delta_bounds(0.0, cx.end).delta_m1;
    let scale = if dm1 > 0.0 { Some(cx.capacity_over(0.0, cx.end).upper / dm1) } else { None };
    let bounded = cx.bounded_verdict(scale);
    let (mut lo, mut hi, mut sum, mut cnt) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for q in cx.tail() {
        let n = q.x.n();
        lo = lo.min(n);
        hi = hi.max(n);
        sum += n;
        cnt += 1;
    }
    let mean = if cnt > 0 { sum / cnt as f64 } else { 0.0 };
    let convergent = hi - lo <= tol * mean.abs();
    let deriv_changes = sign_changes(
        cx.tail().map(|q| {
            let c = cx.coeff(q.t);
            let (ds, di) = c.field(q.x);
            let scale = (c.r.abs() * q.x.n()).max(f64::MIN_POSITIVE);
            (ds + di) / scale
        }),
        tol,
    );
    let concl = match bounded {
        Yes if !convergent && deriv_changes >= 2 => Yes,
        Yes if convergent && deriv_changes < 2 => No,
        _ => Undetermined,
    };
    Entry::new(hyp, concl)
        .ev("factor_sign_changes", factor_changes as f64)
        .ev("derivative_sign_changes", deriv_changes as f64)
        .ev("tail_range", hi - lo)
        .ev("tail_mean", mean)
        .finite()
}

fn omega(cx: &Context) -> Entry {
    let p = cx.params();
    let (bound, min_bound) = omega_bound(cx);
    let r_low = cx.over_horizon(&p.r).lower;
    let inside = cx.n0 <= bound + cx.inv_slack(bound);
    let hyp = Verdict::from_bool(bound.is_finite() && r_low >= 0.0 && positive_regime(cx) && inside);
    let breaches = cx.series.iter().filter(|q| q.x.n() > min_bound + cx.inv_slack(min_bound)).count();
    let concl = if bound.is_finite() { cx.within_bound(bound) } else { Undetermined };
    Entry::new(hyp, concl)
        .ev("bound", bound)
        .ev("n_max", cx.n_max)
        .ev("min_bound", min_bound)
        .ev("min_bound_breaches", breaches as f64)
}

fn omega_e(cx: &Context) -> Entry {
    let printed = cx.series.iter().all(|q| {
        let c = cx.coeff(q.t);
        let n = q.x.n();
        let d2_ok = if n > 0.0 && c.r != 0.0 { c.delta2 <= c.p * (1.0 - c.d) / (c.r * n) } else { true };
        (0.0..=1.0).contains(&c.d) && c.delta1 >= 0.0 && c.delta1 * n <= c.p && c.delta2 >= 0.0 && d2_ok
    });
    let tol = 0.1 * cx.th.inv_tol * (1.0 + cx.n0) / cx.end.max(1.0);
    let nonincreasing_at = |t: f64, x: State| {
        let (ds, di) = cx.coeff(t).field(x);
        ds + di <= tol
    };
    let pointwise = cx.series.iter().all(|q| nonincreasing_at(q.t, q.x))
        && cx.traj.dense_steps().iter().all(|s| {
            let m = 0.5 * (s.t0 + s.t1);
            nonincreasing_at(m, s.eval(m))
        });
    let hyp = match (printed, pointwise && positive_regime(cx)) {
        (true, true) => Yes,
        _ => No,
    };
    let mut e = Entry::new(hyp, cx.within_bound(cx.n0))
        .ev("printed_conditions", flag(printed))
        .ev("nonincreasing", flag(pointwise))
        .ev("max_growth", cx.n_max - cx.n0);
    if printed && !pointwise {
        e = e.note("printed inequalities hold but N is not pointwise nonincreasing");
    }
    e
}

fn impulsive_delta(cx: &Context) -> Entry {
    let p = cx.params();
    let (bound, _) = omega_bound(cx);
    let r_low = cx.over_horizon(&p.r).lower;
    let hyp = Verdict::from_bool(bound.is_finite() && r_low >= 0.0 && positive_regime(cx));
    let bound = cx.n0.max(bound);
    let concl = if bound.is_finite() { cx.within_bound(bound) } else { cx.bounded_verdict(None) };
    let e =
        Entry::new(hyp, concl).ev("bound", bound).ev("n_max", cx.n_max).ev("impulses", cx.traj.impulses.len() as f64);
    if r_low < 0.0 {
        e.note("negative growth rate with positive incidence can blow up")
    } else {
        e
    }
}

/// Log-balance of growth against culling at each impulse.
#[derive(Debug, Clone, PartialEq)]
pub struct LogContraction {
    /// `(t_k, C_k)` with `C_k = ∫₀^{t_k} r - Σ_{i≤k} |ln(1 - w_i)|`.
    pub at_impulses: Vec<(f64, f64)>,
    /// The same balance at the horizon.
    pub at_end: f64,
    /// Every selected weight is at most `min(p, q)`.
    pub weights_dominated: bool,
}

pub fn log_contraction_criterion(
    params: &ModelParams,
    schedule: &ImpulseSchedule,
    horizon: f64,
    rule: WeightRule,
    tol: f64,
) -> Result<LogContraction, crate::timefn::TimeFnError> {
    let mut at_impulses = Vec::new();
    let mut culled = 0.0f64;
    let mut dominated = true;
    let mut last = 0.0;
    let mut grown = 0.0;
    for (_, e) in schedule.within(horizon) {
        let w = rule.weight(e.p, e.q);
        dominated &= w <= e.p.min(e.q);
        grown += params.r.integrate(last, e.t, tol)?;
        last = e.t;
        culled += if w >= 1.0 { f64::INFINITY } else { -libm::log1p(-w) };
        at_impulses.push((e.t, grown - culled));
    }
    grown += params.r.integrate(last, horizon, tol)?;
    Ok(LogContraction { at_impulses, at_end: grown - culled, weights_dominated: dominated })
}

fn log_contraction(cx: &Context) -> Entry {
    let sc = cx.scenario;
    let p = cx.params();
    let Ok(lc) = log_contraction_criterion(p, &sc.schedule, cx.end, sc.w_rule, cx.th.quad_tol) else {
        return Entry::new(Undetermined, cx.bounded_verdict(None)).note("quadrature failed").finite();
    };
    let tail_max =
        lc.at_impulses.iter().filter(|(t, _)| *t >= cx.t_tail).map(|&(_, c)| c).fold(f64::NEG_INFINITY, f64::max);
    let printed = tail_max <= cx.th.class_tol && lc.at_end <= cx.th.class_tol;
    let r_low = cx.over_horizon(&p.r).lower;
    let sound = r_low >= 0.0 && lc.weights_dominated && positive_regime(cx);
    let hyp = match (printed, sound) {
        (true, true) => Yes,
        (true, false) => Undetermined,
        _ => No,
    };

    // envelope N(t) ≤ N₀ exp(C(t)), valid when r ≥ 0 and w ≤ min(p, q)
    let mut breach = false;
    let mut c_sup = f64::NEG_INFINITY;
    if sound && cx.n0 > 0.0 {
        let mut grown = 0.0;
        let mut culled = 0.0f64;
        let mut last_t = 0.0;
        let mut events = sc.schedule.within(cx.end).map(|(_, e)| e).peekable();
        for q in &cx.series {
            grown += p.r.integrate(last_t, q.t, cx.th.quad_tol).unwrap_or(f64::NAN);
            last_t = q.t;
            // pre-impulse points see culls strictly before t; post points include t
            while let Some(e) = events.peek() {
                if e.t < q.t || (q.post && e.t == q.t) {
                    let w = sc.w_rule.weight(e.p, e.q);
                    culled += if w >= 1.0 { f64::INFINITY } else { -libm::log1p(-w) };
                    events.next();
                } else {
                    break;
                }
            }
            let c = grown - culled;
            c_sup = c_sup.max(c);
            let env = cx.n0 * libm::exp(c);
            if q.x.n() > env * (1.0 + 1e-8) + cx.inv_slack(env) {
                breach = true;
            }
        }
    }
    let concl = if breach {
        No
    } else if sound && cx.n0 > 0.0 {
        cx.bounded_verdict(Some(cx.n0 * libm::exp(c_sup.max(0.0))))
    } else {
        cx.bounded_verdict(None)
    };
    let mut e = Entry::new(hyp, concl)
        .ev("tail_max_criterion", tail_max)
        .ev("criterion_at_end", lc.at_end)
        .ev("impulses", lc.at_impulses.len() as f64)
        .ev("envelope_breach", flag(breach))
        .finite();
    if printed && !sound {
        e = e.note(&format!(
            "criterion holds but the bound needs r >= 0 and weights at most min(p, q) (rule {:?})",
            sc.w_rule
        ));
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, ImpulseEvent, Scenario};
    use crate::monitors::evaluate;

    #[test]
    fn sign_change_counter_uses_hysteresis() {
        let v = [1.0, 0.0005, -0.0005, 1.0, -1.0, 0.5];
        assert_eq!(sign_changes(v.iter().copied(), 1e-3), 2);
    }

    #[test]
    fn balanced_log_contraction_is_zero() {
        let p = ModelParams::constant(1.0, 0.1, 0.0, 0.0, 0.0, 0.0, 10.0);
        let w = 1.0 - libm::exp(-1.0);
        let events = (1..=10).map(|k| ImpulseEvent::new(k as f64, w, w)).collect();
        let lc = log_contraction_criterion(&p, &ImpulseSchedule::new(1.0, events), 10.0, WeightRule::FromMin, 1e-12)
            .unwrap();
        assert!(lc.at_impulses.iter().all(|&(_, c)| c.abs() < 1e-10));
        assert!(lc.at_end.abs() < 1e-10);
    }

    #[test]
    fn every_check_reported_once() {
        let sc =
            Scenario::new(ModelParams::constant(0.5, 0.2, 0.1, 0.01, 0.02, 0.01, 50.0), State::new(20.0, 2.0), 10.0);
        let tr = integrate(&sc).unwrap();
        let rep = evaluate(&sc, &tr, &[]);
        assert_eq!(rep.entries.len(), CheckId::ALL.len());
        assert_eq!(rep.violations().count(), 0);
        let only = evaluate(&sc, &tr, &[CheckId::Positivity, CheckId::InvariantSetOmega]);
        assert_eq!(only.entries.len(), 2);
    }

    #[test]
    fn blowup_contradicts_nothing_it_should_not() {
        // δ = 0 with r > 0 and fast decay of I: S grows exponentially
        let sc = Scenario::new(ModelParams::constant(1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 10.0), State::new(1.0, 1.0), 30.0);
        let tr = integrate(&sc).unwrap();
        let rep = evaluate(&sc, &tr, &[]);
        assert_eq!(rep.violations().count(), 0, "{:?}", rep.violations().collect::<Vec<_>>());
        let r = rep.get(CheckId::BoundedRatioCondition).unwrap();
        assert_eq!(r.hypothesis, Undetermined);
    }
}
