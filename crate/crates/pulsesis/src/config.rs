//! JSON scenario files.
//!
//! ```json
//! {
//!   "params": { "r": {"type": "constant", "value": 1.0}, ..., "K": ..., "p0": ... },
//!   "initial": {"S": 40.0, "I": 10.0},
//!   "impulses": {"T": 1.0, "events": [{"t": 2.0, "p": 0.2, "q": 0.5}]},
//!   "horizon": 50.0,
//!   "tolerances": {"rel": 1e-10, "abs": 1e-12},
//!   "checks": ["positivity", "invariant_set_omega"],
//!   "output": {"grid": 200, "plot": true}
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use pulsesis_core::integrator::Tolerances;
use pulsesis_core::model::Violation;
use pulsesis_core::{CheckId, ImpulseSchedule, ModelParams, Scenario, State, Thresholds, WeightRule};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub params: ModelParams,
    pub initial: State,
    #[serde(default)]
    pub impulses: ImpulseSchedule,
    pub horizon: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Check ids; empty runs every check.
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub allow_negative_gamma: bool,
    #[serde(default)]
    pub w_rule: WeightRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Evenly spaced sample count on `[0, horizon]`, on top of step ends.
    pub grid: usize,
    /// Extra sample times.
    pub times: Vec<f64>,
    pub plot: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { grid: 200, times: Vec::new(), plot: false }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Window for coefficient limits; defaults to the monitor tail window.
    pub tail_window: Option<(f64, f64)>,
    /// Period probed by the periodic-capacity test; inferred from `δ₁` or
    /// `r` when absent.
    pub capacity_period: Option<f64>,
}

/// A validated scenario together with its run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub name: String,
    pub source: Option<PathBuf>,
    pub scenario: Scenario,
    pub checks: Vec<CheckId>,
    pub output: OutputSpec,
    pub analysis: AnalysisSpec,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario:\n{}", list(.0))]
    Invalid(Vec<Violation>),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  - {x}")).collect::<Vec<_>>().join("\n")
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, LoadError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialize")
    }

    /// Inverse of [`ScenarioFile::resolve`].
    pub fn from_loaded(l: &LoadedScenario) -> Self {
        let sc = &l.scenario;
        let mut output = l.output.clone();
        output.times = sc.output_grid.clone();
        output.grid = 0;
        Self {
            name: Some(l.name.clone()),
            params: sc.params.clone(),
            initial: sc.initial,
            impulses: sc.schedule.clone(),
            horizon: sc.horizon,
            tolerances: sc.tolerances,
            checks: l.checks.iter().map(|c| c.id().to_owned()).collect(),
            output,
            analysis: l.analysis.clone(),
            thresholds: sc.thresholds,
            allow_negative_gamma: sc.allow_negative_gamma,
            w_rule: sc.w_rule,
        }
    }

    /// Builds and validates the scenario, collecting every violation.
    pub fn resolve(self, fallback_name: &str) -> Result<LoadedScenario, LoadError> {
        let mut violations = Vec::new();
        let mut checks = Vec::new();
        for id in &self.checks {
            match CheckId::parse(id) {
                Some(c) if !checks.contains(&c) => checks.push(c),
                Some(_) => {}
                None => violations.push(Violation::new("unknown-check", format!("unknown check id `{id}`"))),
            }
        }
        let mut scenario = Scenario::new(self.params, self.initial, self.horizon)
            .with_schedule(self.impulses)
            .with_tolerances(self.tolerances);
        scenario.thresholds = self.thresholds;
        scenario.allow_negative_gamma = self.allow_negative_gamma;
        scenario.w_rule = self.w_rule;
        violations.extend(threshold_violations(&scenario.thresholds));
        if scenario.horizon > 0.0 && scenario.horizon.is_finite() {
            let mut grid = if self.output.grid > 0 {
                scenario.clone().with_uniform_grid(self.output.grid).output_grid
            } else {
                Vec::new()
            };
            grid.extend(self.output.times.iter().copied());
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            scenario.output_grid = grid;
        }
        if let Some((a, b)) = self.analysis.tail_window {
            if !(0.0 <= a && a <= b && b.is_finite()) {
                violations
                    .push(Violation::new("tail-window", format!("tail window ({a}, {b}) must satisfy 0 <= t0 <= t1")));
            }
        }
        if let Some(tp) = self.analysis.capacity_period {
            if !(tp > 0.0 && tp.is_finite()) {
                violations
                    .push(Violation::new("capacity-period", format!("capacity period must be positive, got {tp}")));
            }
        }
        violations.extend(scenario.validate());
        if !violations.is_empty() {
            return Err(LoadError::Invalid(violations));
        }
        Ok(LoadedScenario {
            name: self.name.unwrap_or_else(|| fallback_name.to_owned()),
            source: None,
            scenario,
            checks,
            output: OutputSpec { grid: self.output.grid, times: self.output.times, plot: self.output.plot },
            analysis: self.analysis,
        })
    }
}

fn threshold_violations(th: &Thresholds) -> Vec<Violation> {
    let mut out = Vec::new();
    let positive = [
        ("class_tol", th.class_tol),
        ("limit_tol", th.limit_tol),
        ("slope_tol", th.slope_tol),
        ("ext_tol", th.ext_tol),
        ("osc_tol", th.osc_tol),
        ("inv_tol", th.inv_tol),
        ("neg_tol_factor", th.neg_tol_factor),
        ("quad_tol", th.quad_tol),
    ];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            out.push(Violation::new("thresholds", format!("{name} must be positive, got {v}")));
        }
    }
    if !(th.tail_fraction > 0.0 && th.tail_fraction < 1.0) {
        out.push(Violation::new("thresholds", format!("tail_fraction must lie in (0, 1), got {}", th.tail_fraction)));
    }
    if !(th.growth_tol >= 1.0) || !th.growth_tol.is_finite() {
        out.push(Violation::new("thresholds", format!("growth_tol must be at least 1, got {}", th.growth_tol)));
    }
    if !(th.unbounded_factor > 1.0) || !th.unbounded_factor.is_finite() {
        out.push(Violation::new("thresholds", format!("unbounded_factor must exceed 1, got {}", th.unbounded_factor)));
    }
    out
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_owned(), source })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    let mut loaded = ScenarioFile::from_json(&text)?.resolve(stem)?;
    loaded.source = Some(path.to_owned());
    Ok(loaded)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "params": {
            "r": {"type": "constant", "value": 1.0},
            "d": {"type": "constant", "value": 0.5},
            "gamma": {"type": "constant", "value": 0.5},
            "beta": {"type": "constant", "value": 0.1},
            "delta1": {"type": "constant", "value": 1.0},
            "delta2": {"type": "constant", "value": 1.0},
            "K": {"type": "constant", "value": 100.0},
            "p0": {"type": "constant", "value": 0.0}
        },
        "initial": {"S": 10.0, "I": 15.0},
        "horizon": 10.0
    }"#;

    #[test]
    fn minimal_file_loads() {
        let l = ScenarioFile::from_json(MINIMAL).unwrap().resolve("minimal").unwrap();
        assert_eq!(l.scenario.params, ModelParams::constant(1.0, 0.5, 0.5, 0.1, 1.0, 1.0, 100.0));
        assert_eq!(l.scenario.output_grid.len(), 201);
        assert!(l.checks.is_empty());
        assert_eq!(l.name, "minimal");
    }

    #[test]
    fn every_violation_is_listed() {
        let text = MINIMAL
            .replace(r#""beta": {"type": "constant", "value": 0.1}"#, r#""beta": {"type": "constant", "value": -0.1}"#)
            .replace(
                r#""horizon": 10.0"#,
                r#""horizon": 10.0, "checks": ["nope"], "impulses": {"T": 1.0, "events": [{"t": 1.0, "p": 0.2, "q": 0.3}, {"t": 1.5, "p": 0.2, "q": 0.3}]}"#,
            );
        let Err(LoadError::Invalid(v)) = ScenarioFile::from_json(&text).unwrap().resolve("x") else {
            panic!("expected rejection");
        };
        let codes: Vec<_> = v.iter().map(|x| x.code).collect();
        assert!(codes.contains(&"unknown-check"));
        assert!(codes.contains(&"impulse-gap"));
        assert!(v.iter().any(|x| x.message.contains("beta")), "{codes:?}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace(r#""horizon": 10.0"#, r#""horizon": 10.0, "horizn": 3"#);
        assert!(matches!(ScenarioFile::from_json(&text), Err(LoadError::Parse(_))));
    }
}
