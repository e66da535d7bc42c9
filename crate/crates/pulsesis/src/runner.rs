//! Integration, analysis, monitoring and artifact writing for one or many
//! scenarios.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use pulsesis_core::analysis::{self, classify_infection_free, limiting_params, verify_periodic_capacity};
use pulsesis_core::integrator::integrate;
use pulsesis_core::monitors::{evaluate, TrajectoryOracles};
use pulsesis_core::{CheckId, ConditionReport, Scenario, Trajectory};
use rayon::prelude::*;

use crate::config::LoadedScenario;
use crate::export::trajectory_csv;
use crate::plot::trajectory_svg;
use crate::report::*;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Overrides the scenario's own selection.
    pub checks: Option<Vec<CheckId>>,
    /// Forces SVG output regardless of the scenario file.
    pub plot: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub trajectory: Option<Trajectory>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.report.status.passed
    }
}

/// Analysis of the limiting system and coefficient structure; no
/// integration.
pub fn analyze(l: &LoadedScenario) -> AnalysisSection {
    let sc = &l.scenario;
    let th = &sc.thresholds;
    let (t0, t1) = l.analysis.tail_window.unwrap_or((sc.horizon * (1.0 - th.tail_fraction), sc.horizon));
    let limits = limiting_params(&sc.params, t0, t1, th);
    let (equilibria, equilibria_error) = match &limits.params {
        Some(lim) => match analysis::equilibria(lim, th) {
            Ok(v) => (v, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        },
        None => (Vec::new(), Some("some coefficient has no limit over the tail window".to_owned())),
    };
    let ifr = classify_infection_free(&sc.params, sc.horizon, th);
    let period = l.analysis.capacity_period.or_else(|| sc.params.delta1.period()).or_else(|| sc.params.r.period());
    let (periodicity, periodicity_error) = match period {
        Some(tp) => match verify_periodic_capacity(&sc.params, tp, sc.horizon, 10, th.quad_tol) {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        },
        None => (None, None),
    };
    AnalysisSection {
        limits,
        equilibria,
        equilibria_error,
        infection_free: InfectionFreeSummary {
            label: ifr.label,
            tail_slope: ifr.tail_slope,
            phi_max: ifr.phi_max,
            phi_final: ifr.phi_final,
        },
        periodicity_period: period,
        periodicity,
        periodicity_error,
    }
}

fn digest(l: &LoadedScenario, checks: &[CheckId]) -> ScenarioDigest {
    let sc = &l.scenario;
    let h = sc.horizon;
    let coefficient_bounds = sc
        .params
        .named()
        .iter()
        .map(|(name, f)| {
            let b = f.bounds_over(0.0, h);
            NamedBounds { name, lower: b.lower, upper: b.upper }
        })
        .collect();
    let cap = sc.params.capacity_fn().bounds_over(0.0, h);
    let events = &sc.schedule.events;
    ScenarioDigest {
        horizon: h,
        initial: sc.initial,
        coefficient_bounds,
        capacity: NamedBounds { name: "p", lower: cap.lower, upper: cap.upper },
        delta: sc.params.delta_bounds(0.0, h),
        schedule: ScheduleSummary {
            min_gap: sc.schedule.min_gap,
            events: events.len(),
            within_horizon: sc.schedule.within(h).count(),
            zero_effect: events.iter().enumerate().filter(|(_, e)| e.is_null()).map(|(k, _)| k).collect(),
            first: events.first().map(|e| e.t),
            last: events.last().map(|e| e.t),
        },
        tolerances: sc.tolerances,
        thresholds: sc.thresholds,
        checks: checks.iter().map(|c| c.id()).collect(),
    }
}

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

/// Closed-form residuals at ten probe times. The `N` residual is only held
/// to tolerance where the representation's amplification leaves room for
/// it at the integration tolerance.
pub fn oracle_residuals(sc: &Scenario, traj: &Trajectory) -> OracleSection {
    let floor = 1e-12 * (1.0 + sc.initial.n());
    let limit = 1e-6 / sc.tolerances.rel.max(1e-16);
    let mut out = OracleSection {
        probes: Vec::new(),
        max_infected_rel: 0.0,
        max_total_rel: 0.0,
        max_reconstruction_rel: 0.0,
        amplification_limit: limit,
        ill_conditioned_probes: 0,
        quadrature_error: 0.0,
        error: None,
        passed: true,
    };
    let o = match TrajectoryOracles::new(traj, &sc.params, sc.thresholds.quad_tol) {
        Ok(o) => o,
        Err(e) => {
            out.error = Some(e.to_string());
            out.passed = false;
            return out;
        }
    };
    out.quadrature_error = o.quadrature_error();
    for k in 1..=10 {
        let t = traj.end * (k as f64 / 10.0);
        let probe = (|| -> Result<OracleProbe, pulsesis_core::monitors::OracleError> {
            let x = traj.state_at(t).unwrap_or(traj.final_state());
            let (tb, base) = traj.restart_base(t);
            let i = o.infected(t)?;
            let n = o.total(t)?;
            let y = o.reconstruct(t)?;
            let growth = (o.logistic_exponent(t)? - o.logistic_exponent(tb)?).exp();
            let amplification = if x.n() > 0.0 { growth * base.n() / x.n() } else { 1.0 };
            let scale = x.norm_inf().max(floor);
            Ok(OracleProbe {
                t,
                infected_rel: rel(i, x.i, floor),
                total_rel: rel(n.value, x.n(), floor),
                total_amplification: amplification,
                total_checked: amplification <= limit,
                reconstruction_rel: (y.s - x.s).abs().max((y.i - x.i).abs()) / scale,
            })
        })();
        match probe {
            Ok(p) => out.probes.push(p),
            Err(e) => {
                out.error = Some(format!("probe t = {t}: {e}"));
                out.passed = false;
                return out;
            }
        }
    }
    let mut failures = 0;
    for p in &out.probes {
        out.max_infected_rel = out.max_infected_rel.max(p.infected_rel);
        out.max_reconstruction_rel = out.max_reconstruction_rel.max(p.reconstruction_rel);
        if p.total_checked {
            out.max_total_rel = out.max_total_rel.max(p.total_rel);
        } else {
            out.ill_conditioned_probes += 1;
        }
        let bad = !(p.infected_rel <= INFECTED_TOL)
            || !(p.reconstruction_rel <= RECONSTRUCTION_TOL)
            || (p.total_checked && !(p.total_rel <= TOTAL_TOL));
        failures += bad as usize;
    }
    out.passed = failures == 0;
    out
}

/// Everything a run computes, without touching the filesystem.
pub fn execute(l: &LoadedScenario, checks: Option<&[CheckId]>) -> RunOutcome {
    let sc = &l.scenario;
    let selection: Vec<CheckId> = checks.map(<[CheckId]>::to_vec).unwrap_or_else(|| l.checks.clone());
    let enabled: Vec<CheckId> = if selection.is_empty() { CheckId::ALL.to_vec() } else { selection.clone() };
    let analysis = analyze(l);
    let (traj, failure) = match integrate(sc) {
        Ok(t) => (Some(t), None),
        Err(e) => (e.partial.as_deref().cloned(), Some(e.to_string())),
    };
    let (monitors, oracles) = match (&traj, &failure) {
        (Some(t), None) => (evaluate(sc, t, &selection), Some(oracle_residuals(sc, t))),
        _ => (ConditionReport::default(), None),
    };
    let integration = match &traj {
        Some(t) => IntegrationSummary {
            complete: t.complete() && failure.is_none(),
            end: t.end,
            samples: t.samples.len(),
            stats: t.stats,
            impulses: t.impulses.clone(),
            final_state: t.final_state(),
            failure: failure.clone(),
        },
        None => IntegrationSummary {
            complete: false,
            end: 0.0,
            samples: 0,
            stats: Default::default(),
            impulses: Vec::new(),
            final_state: sc.initial,
            failure: failure.clone(),
        },
    };
    let violations: Vec<&'static str> = monitors.violations().map(|e| e.check.id()).collect();
    let mut oracle_failures = Vec::new();
    if let Some(o) = &oracles {
        if let Some(e) = &o.error {
            oracle_failures.push(e.clone());
        }
        if !(o.max_infected_rel <= INFECTED_TOL) {
            oracle_failures.push(format!("closed-form I residual {:e} > {INFECTED_TOL:e}", o.max_infected_rel));
        }
        if !(o.max_total_rel <= TOTAL_TOL) {
            oracle_failures.push(format!("closed-form N residual {:e} > {TOTAL_TOL:e}", o.max_total_rel));
        }
        if !(o.max_reconstruction_rel <= RECONSTRUCTION_TOL) {
            oracle_failures
                .push(format!("fundamental-matrix residual {:e} > {RECONSTRUCTION_TOL:e}", o.max_reconstruction_rel));
        }
    }
    let integration_failed = failure.is_some();
    let status = Status {
        passed: violations.is_empty() && oracle_failures.is_empty() && !integration_failed,
        violations,
        oracle_failures,
        integration_failed,
    };
    let report = RunReport {
        name: l.name.clone(),
        scenario: digest(l, &enabled),
        integration,
        analysis,
        monitors,
        oracles,
        files: Vec::new(),
        status,
    };
    RunOutcome { report, trajectory: traj }
}

fn write(dir: &Path, name: &str, kind: &'static str, body: &str, files: &mut Vec<FileEntry>) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    files.push(FileEntry { kind, path: name.to_owned(), bytes: body.len() as u64 });
    Ok(())
}

/// Runs one scenario and writes `trajectory.csv`, `report.json`,
/// `summary.txt` and optionally `plot.svg` into `opts.out_dir`. Partial
/// trajectories are written when integration fails.
pub fn run(l: &LoadedScenario, opts: &RunOptions) -> anyhow::Result<RunOutcome> {
    let mut outcome = execute(l, opts.checks.as_deref());
    let dir = &opts.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    if let Some(t) = &outcome.trajectory {
        write(dir, "trajectory.csv", "trajectory", &trajectory_csv(t), &mut files)?;
        if opts.plot || l.output.plot {
            write(dir, "plot.svg", "plot", &trajectory_svg(t, &l.name), &mut files)?;
        }
    }
    let summary = outcome.report.summary();
    write(dir, "summary.txt", "summary", &summary, &mut files)?;
    // the report lists itself without a size
    files.push(FileEntry { kind: "report", path: "report.json".to_owned(), bytes: 0 });
    outcome.report.files = files;
    let json = outcome.report.to_json();
    fs::write(dir.join("report.json"), &json)
        .with_context(|| format!("writing {}", dir.join("report.json").display()))?;
    Ok(outcome)
}

/// Runs scenarios in parallel. With more than one scenario each gets its
/// own subdirectory named after it.
pub fn run_batch(scenarios: &[LoadedScenario], opts: &RunOptions) -> Vec<anyhow::Result<RunOutcome>> {
    let names = unique_names(scenarios);
    scenarios
        .par_iter()
        .zip(names.par_iter())
        .map(|(l, name)| {
            let mut o = opts.clone();
            if scenarios.len() > 1 {
                o.out_dir = opts.out_dir.join(name);
            }
            run(l, &o)
        })
        .collect()
}

fn unique_names(scenarios: &[LoadedScenario]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(scenarios.len());
    for (k, l) in scenarios.iter().enumerate() {
        let base: String =
            l.name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
        let name = if out.contains(&base) { format!("{base}-{k}") } else { base };
        out.push(name);
    }
    out
}
