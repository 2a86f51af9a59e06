//! Canned experiments. Each scenario builds its machines, runs the checks and
//! condenses the result into a [`ScenarioOutcome`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bounds::BoundReport;
use crate::distribution::EnergyDistribution;
use crate::error::{Error, Result};
use crate::report::CheckReport;

mod ensemble;
mod qubit;
mod triviality;
mod twin;

pub use ensemble::{lattice_convergence, ConvergencePoint, EnsembleParams};
pub use qubit::{qubit_machine, QubitParams};
pub use triviality::{triviality_models, TrivialityParams};
pub use twin::{oscillator_pair, ControlParams, TwinParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    TwinOscillator,
    NonautonomousControl,
    QubitSaturation,
    RandomClockEnsemble,
    CommutingTriviality,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::TwinOscillator,
        ScenarioKind::NonautonomousControl,
        ScenarioKind::QubitSaturation,
        ScenarioKind::RandomClockEnsemble,
        ScenarioKind::CommutingTriviality,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::TwinOscillator => "twin_oscillator",
            ScenarioKind::NonautonomousControl => "nonautonomous_control",
            ScenarioKind::QubitSaturation => "qubit_saturation",
            ScenarioKind::RandomClockEnsemble => "random_clock_ensemble",
            ScenarioKind::CommutingTriviality => "commuting_triviality",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ScenarioKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn description(self) -> &'static str {
        match self {
            ScenarioKind::TwinOscillator => {
                "two resonant oscillators coupled for a fixed time; work against the cosine closed form"
            }
            ScenarioKind::NonautonomousControl => {
                "externally switched coupling with a ground-state storage; power grows with the coupling"
            }
            ScenarioKind::QubitSaturation => {
                "qubit flipped by an ideal clock; power approaches 1/pi of the fluctuation bound"
            }
            ScenarioKind::RandomClockEnsemble => {
                "random clock machines checked against both power bounds and the speed-limit chain"
            }
            ScenarioKind::CommutingTriviality => {
                "interaction commuting with the free Hamiltonian; no work, factorised evolution"
            }
        }
    }

    /// Whether the machine is driven by its own agent rather than an external switch.
    pub fn autonomous(self) -> bool {
        !matches!(
            self,
            ScenarioKind::TwinOscillator | ScenarioKind::NonautonomousControl
        )
    }

    /// Random kinds require a seed.
    pub fn seeded(self) -> bool {
        matches!(
            self,
            ScenarioKind::RandomClockEnsemble | ScenarioKind::CommutingTriviality
        )
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioParams {
    TwinOscillator(TwinParams),
    NonautonomousControl(ControlParams),
    QubitSaturation(QubitParams),
    RandomClockEnsemble(EnsembleParams),
    CommutingTriviality(TrivialityParams),
}

impl ScenarioParams {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            ScenarioParams::TwinOscillator(_) => ScenarioKind::TwinOscillator,
            ScenarioParams::NonautonomousControl(_) => ScenarioKind::NonautonomousControl,
            ScenarioParams::QubitSaturation(_) => ScenarioKind::QubitSaturation,
            ScenarioParams::RandomClockEnsemble(_) => ScenarioKind::RandomClockEnsemble,
            ScenarioParams::CommutingTriviality(_) => ScenarioKind::CommutingTriviality,
        }
    }

    /// Default parameters for a kind; random kinds still need a seed.
    pub fn default_for(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::TwinOscillator => ScenarioParams::TwinOscillator(TwinParams::default()),
            ScenarioKind::NonautonomousControl => {
                ScenarioParams::NonautonomousControl(ControlParams::default())
            }
            ScenarioKind::QubitSaturation => ScenarioParams::QubitSaturation(QubitParams::default()),
            ScenarioKind::RandomClockEnsemble => {
                ScenarioParams::RandomClockEnsemble(EnsembleParams::default())
            }
            ScenarioKind::CommutingTriviality => {
                ScenarioParams::CommutingTriviality(TrivialityParams::default())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScenarioParams::TwinOscillator(p) => p.validate(),
            ScenarioParams::NonautonomousControl(p) => p.validate(),
            ScenarioParams::QubitSaturation(p) => p.validate(),
            ScenarioParams::RandomClockEnsemble(p) => p.validate(),
            ScenarioParams::CommutingTriviality(p) => p.validate(),
        }
    }
}

/// One scenario to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub hbar: f64,
    pub params: ScenarioParams,
    /// Overrides for named check tolerances.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl ScenarioSpec {
    pub fn new(name: impl Into<String>, hbar: f64, params: ScenarioParams) -> Self {
        ScenarioSpec {
            name: name.into(),
            hbar,
            params,
            tolerances: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> ScenarioKind {
        self.params.kind()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::param("hbar", format!("must be positive, got {}", self.hbar)));
        }
        for (k, v) in &self.tolerances {
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(Error::param(
                    format!("tolerances.{k}"),
                    "must be a non-negative number",
                ));
            }
        }
        self.params.validate()
    }

    fn tol(&self, check: &str, default: f64) -> f64 {
        self.tolerances.get(check).copied().unwrap_or(default)
    }
}

/// A bound report at one value of the scenario's scan parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub param: f64,
    pub report: BoundReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub name: String,
    pub kind: ScenarioKind,
    pub autonomous: bool,
    /// Headline machine of the scenario.
    pub bound_report: BoundReport,
    pub checks: Vec<CheckReport>,
    /// Name of the scanned quantity, when the scenario scans one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_param: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesPoint>,
    /// Files written for this scenario, filled in by the runner.
    #[serde(default)]
    pub artifacts: Vec<String>,
    pub pass: bool,
}

impl ScenarioOutcome {
    fn assemble(
        spec: &ScenarioSpec,
        bound_report: BoundReport,
        checks: Vec<CheckReport>,
        series_param: Option<&str>,
        series: Vec<SeriesPoint>,
    ) -> Self {
        let kind = spec.kind();
        let autonomous = kind.autonomous();
        let checks_pass = checks.iter().all(|c| c.passed);
        let bounds_pass = bound_report.pass && series.iter().all(|s| s.report.pass);
        ScenarioOutcome {
            name: spec.name.clone(),
            kind,
            autonomous,
            bound_report,
            checks,
            series_param: series_param.map(str::to_owned),
            series,
            artifacts: Vec::new(),
            pass: checks_pass && bounds_pass,
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// True when a bound was violated by a machine satisfying the switch-on condition.
    pub fn bound_violated(&self) -> bool {
        std::iter::once(&self.bound_report)
            .chain(self.series.iter().map(|s| &s.report))
            .any(|r| !r.pass)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledDistribution {
    pub label: String,
    pub distribution: EnergyDistribution,
}

/// Outcome plus bulky data kept out of the report.
#[derive(Clone, Debug)]
pub struct ScenarioResult {
    pub outcome: ScenarioOutcome,
    pub distributions: Vec<LabeledDistribution>,
}

/// Run one scenario.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioResult> {
    spec.validate()?;
    match &spec.params {
        ScenarioParams::TwinOscillator(p) => twin::run_twin(spec, p),
        ScenarioParams::NonautonomousControl(p) => twin::run_control(spec, p),
        ScenarioParams::QubitSaturation(p) => qubit::run(spec, p),
        ScenarioParams::RandomClockEnsemble(p) => ensemble::run(spec, p),
        ScenarioParams::CommutingTriviality(p) => triviality::run(spec, p),
    }
}

pub(crate) fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

pub(crate) fn odd_points(name: &str, n: usize, min: usize) -> Result<()> {
    if n >= min && n % 2 == 1 {
        Ok(())
    } else {
        Err(Error::param(name, format!("need an odd count >= {min}, got {n}")))
    }
}
