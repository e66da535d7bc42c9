//! Run report: scenario digest, analysis, monitors, oracle residuals and
//! the list of written files.

use std::fmt::Write;

use pulsesis_core::analysis::{InfectionFreeLabel, LimitReport, PeriodicityVerdict};
use pulsesis_core::integrator::{ImpulseRecord, StepStats, Tolerances};
use pulsesis_core::model::DeltaBounds;
use pulsesis_core::{ConditionReport, Equilibrium, State, Thresholds};
use serde::Serialize;

/// Relative targets for the closed-form residuals.
pub const INFECTED_TOL: f64 = 1e-6;
pub const TOTAL_TOL: f64 = 1e-5;
pub const RECONSTRUCTION_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    pub scenario: ScenarioDigest,
    pub integration: IntegrationSummary,
    pub analysis: AnalysisSection,
    pub monitors: ConditionReport,
    pub oracles: Option<OracleSection>,
    pub files: Vec<FileEntry>,
    pub status: Status,
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedBounds {
    pub name: &'static str,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScheduleSummary {
    #[serde(rename = "T")]
    pub min_gap: f64,
    pub events: usize,
    pub within_horizon: usize,
    /// Indices of events with `p = q = 0`.
    pub zero_effect: Vec<usize>,
    pub first: Option<f64>,
    pub last: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioDigest {
    pub horizon: f64,
    pub initial: State,
    pub coefficient_bounds: Vec<NamedBounds>,
    pub capacity: NamedBounds,
    pub delta: DeltaBounds,
    pub schedule: ScheduleSummary,
    pub tolerances: Tolerances,
    pub thresholds: Thresholds,
    pub checks: Vec<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegrationSummary {
    pub complete: bool,
    pub end: f64,
    pub samples: usize,
    pub stats: StepStats,
    pub impulses: Vec<ImpulseRecord>,
    pub final_state: State,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InfectionFreeSummary {
    pub label: InfectionFreeLabel,
    pub tail_slope: f64,
    pub phi_max: f64,
    pub phi_final: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisSection {
    pub limits: LimitReport,
    pub equilibria: Vec<Equilibrium>,
    pub equilibria_error: Option<String>,
    pub infection_free: InfectionFreeSummary,
    pub periodicity_period: Option<f64>,
    pub periodicity: Option<PeriodicityVerdict>,
    pub periodicity_error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleProbe {
    pub t: f64,
    pub infected_rel: f64,
    pub total_rel: f64,
    /// `e^{∫a}·N_b / N(t)`: how much the closed form for `N` magnifies
    /// input errors at this probe.
    pub total_amplification: f64,
    /// Whether the `N` residual is held to [`TOTAL_TOL`].
    pub total_checked: bool,
    pub reconstruction_rel: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSection {
    pub probes: Vec<OracleProbe>,
    pub max_infected_rel: f64,
    pub max_total_rel: f64,
    pub max_reconstruction_rel: f64,
    pub amplification_limit: f64,
    pub ill_conditioned_probes: usize,
    pub quadrature_error: f64,
    pub error: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub kind: &'static str,
    pub path: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Status {
    /// Checks whose hypothesis held while the conclusion failed.
    pub violations: Vec<&'static str>,
    pub oracle_failures: Vec<String>,
    pub integration_failed: bool,
    pub passed: bool,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let i = &self.integration;
        let _ = writeln!(out, "scenario {}", self.name);
        let _ = writeln!(
            out,
            "  integration: {} at t = {} ({} accepted, {} rejected steps, {} impulses)",
            if i.complete { "complete" } else { "FAILED" },
            i.end,
            i.stats.accepted,
            i.stats.rejected,
            i.impulses.len()
        );
        if let Some(f) = &i.failure {
            let _ = writeln!(out, "  failure: {f}");
        }
        let _ = writeln!(out, "  final state: S = {}, I = {}", i.final_state.s, i.final_state.i);
        for e in &self.analysis.equilibria {
            let _ = writeln!(
                out,
                "  equilibrium {:?} at ({}, {}): {}{}",
                e.kind,
                e.point.s,
                e.point.i,
                e.classification,
                if e.admissible { "" } else { " (not admissible)" }
            );
        }
        if let Some(err) = &self.analysis.equilibria_error {
            let _ = writeln!(out, "  equilibria: {err}");
        }
        let _ = writeln!(out, "  infection-free trend: {:?}", self.analysis.infection_free.label);
        if let Some(p) = &self.analysis.periodicity {
            let _ = writeln!(out, "  periodic capacity: {} (max residual {:e})", p.periodic, p.max_residual);
        }
        let _ = writeln!(out, "  monitors:");
        for e in &self.monitors.entries {
            let mark = if e.is_violation() { "  VIOLATION" } else { "" };
            let _ = writeln!(
                out,
                "    {:<40} hypothesis {:<12} conclusion {:<12}{}",
                e.check.id(),
                e.hypothesis.label(),
                e.conclusion.label(),
                mark
            );
        }
        if let Some(o) = &self.oracles {
            let _ = writeln!(
                out,
                "  oracles: I {:.2e}, N {:.2e} ({} ill-conditioned probes skipped), reconstruction {:.2e}: {}",
                o.max_infected_rel,
                o.max_total_rel,
                o.ill_conditioned_probes,
                o.max_reconstruction_rel,
                if o.passed { "ok" } else { "FAILED" }
            );
        }
        let _ = writeln!(out, "  status: {}", if self.status.passed { "pass" } else { "FAIL" });
        out
    }
}
