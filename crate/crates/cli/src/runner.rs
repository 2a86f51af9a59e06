//! Executes a configuration and writes the report and data files.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use powerbound_core::operator::set_tolerances;
use powerbound_core::scenarios::{LabeledDistribution, ScenarioKind, ScenarioOutcome, ScenarioSpec};
use powerbound_core::{run_scenario, EnergyDistribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const SCHEMA: &str = "powerbound-report/1";
pub const REPORT_FILE: &str = "report.json";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("sweep: {0}")]
    Sweep(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub name: String,
    pub kind: ScenarioKind,
    pub autonomous: bool,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<ScenarioOutcome>,
    /// Set when the scenario could not be evaluated at all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub name: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub scenarios: Vec<ScenarioRecord>,
    pub pass: bool,
    /// Some bound failed on a machine that satisfies the switch-on condition.
    pub bound_violation: bool,
    /// SHA-256 of the report without timings and digest.
    pub digest: String,
    pub timings: Vec<Timing>,
}

#[derive(Serialize)]
struct DigestView<'a> {
    schema: &'a str,
    scenarios: &'a [ScenarioRecord],
    pass: bool,
    bound_violation: bool,
}

impl RunReport {
    fn new(scenarios: Vec<ScenarioRecord>, timings: Vec<Timing>) -> Result<Self, RunError> {
        let pass = scenarios.iter().all(|s| s.pass);
        let bound_violation = scenarios
            .iter()
            .any(|s| s.outcome.as_ref().is_some_and(|o| o.bound_violated()));
        let mut report = RunReport {
            schema: SCHEMA.to_string(),
            scenarios,
            pass,
            bound_violation,
            digest: String::new(),
            timings,
        };
        report.digest = report.compute_digest()?;
        Ok(report)
    }

    pub fn compute_digest(&self) -> Result<String, RunError> {
        let view = DigestView {
            schema: &self.schema,
            scenarios: &self.scenarios,
            pass: self.pass,
            bound_violation: self.bound_violation,
        };
        let bytes = serde_json::to_vec(&view)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    pub fn record(&self, name: &str) -> Option<&ScenarioRecord> {
        self.scenarios.iter().find(|s| s.name == name)
    }

    /// Process exit code: 0 when everything passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.pass && !self.bound_violation {
            0
        } else {
            1
        }
    }
}

struct Evaluated {
    record: ScenarioRecord,
    distributions: Vec<LabeledDistribution>,
    seconds: f64,
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".to_string()
    }
}

fn evaluate(spec: &ScenarioSpec) -> Evaluated {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(|| run_scenario(spec)));
    let seconds = start.elapsed().as_secs_f64();
    let kind = spec.kind();
    let failed = |error: String| Evaluated {
        record: ScenarioRecord {
            name: spec.name.clone(),
            kind,
            autonomous: kind.autonomous(),
            pass: false,
            outcome: None,
            error: Some(error),
        },
        distributions: Vec::new(),
        seconds,
    };
    match result {
        Ok(Ok(r)) => Evaluated {
            record: ScenarioRecord {
                name: spec.name.clone(),
                kind,
                autonomous: r.outcome.autonomous,
                pass: r.outcome.pass,
                outcome: Some(r.outcome),
                error: None,
            },
            distributions: r.distributions,
            seconds,
        },
        Ok(Err(e)) => failed(e.to_string()),
        Err(p) => failed(format!("panicked: {}", panic_message(p))),
    }
}

fn evaluate_all(config: &RunConfig, specs: &[ScenarioSpec]) -> Result<Vec<Evaluated>, RunError> {
    set_tolerances(config.tolerances.hermitian, config.tolerances.unitary);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()?;
    Ok(pool.install(|| specs.par_iter().map(evaluate).collect()))
}

/// File-name-safe form of a scenario name.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_distribution(path: &Path, d: &EnergyDistribution) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["energy", "probability"])?;
    for (e, p) in d.energies.iter().zip(&d.probabilities) {
        w.write_record([format!("{e:.16e}"), format!("{p:.16e}")])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

fn finish(config: &RunConfig, evaluated: Vec<Evaluated>) -> Result<RunReport, RunError> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut records = Vec::with_capacity(evaluated.len());
    let mut timings = Vec::with_capacity(evaluated.len());
    for mut ev in evaluated {
        if config.emit_distributions {
            for d in &ev.distributions {
                let file = format!("{}_{}.csv", file_stem(&ev.record.name), file_stem(&d.label));
                write_distribution(&dir.join(&file), &d.distribution)?;
                if let Some(o) = ev.record.outcome.as_mut() {
                    o.artifacts.push(file);
                }
            }
        }
        timings.push(Timing {
            name: ev.record.name.clone(),
            seconds: ev.seconds,
        });
        records.push(ev.record);
    }
    let report = RunReport::new(records, timings)?;
    let path = dir.join(REPORT_FILE);
    fs::write(&path, serde_json::to_string_pretty(&report)?).map_err(io_err(&path))?;
    Ok(report)
}

/// Run every scenario of the configuration and write `report.json` (plus
/// distribution CSVs when enabled) into the output directory.
pub fn run(config: &RunConfig) -> Result<RunReport, RunError> {
    let evaluated = evaluate_all(config, &config.scenarios)?;
    finish(config, evaluated)
}

/// Read a report previously written by [`run`].
pub fn read_report(path: &Path) -> Result<RunReport, RunError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Replace one parameter of `spec` by `value`, keeping its type.
pub fn with_param(spec: &ScenarioSpec, field: &str, value: f64) -> Result<ScenarioSpec, RunError> {
    let mut out = spec.clone();
    if field == "hbar" {
        out.hbar = value;
        return Ok(out);
    }
    let mut params = serde_json::to_value(&spec.params)?;
    let existing = params
        .get(field)
        .filter(|_| field != "kind")
        .ok_or_else(|| RunError::Sweep(format!("scenario `{}` has no parameter `{field}`", spec.name)))?;
    let scalar = if value.fract() == 0.0 && value >= 0.0 && value < u64::MAX as f64 {
        Value::from(value as u64)
    } else {
        serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| RunError::Sweep(format!("cannot represent {value}")))?
    };
    let candidates = if existing.is_array() {
        vec![Value::Array(vec![scalar.clone()])]
    } else {
        vec![scalar.clone(), Value::from(value), Value::Array(vec![scalar])]
    };
    let mut last = None;
    for c in candidates {
        params[field] = c;
        match serde_json::from_value(params.clone()) {
            Ok(p) => {
                out.params = p;
                return Ok(out);
            }
            Err(e) => last = Some(e),
        }
    }
    Err(RunError::Sweep(format!(
        "`{field}` = {value} does not fit the parameter type: {}",
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Resolve `path` (`field` or `name.field`) to a scenario and field.
fn resolve<'a>(config: &'a RunConfig, path: &'a str) -> Result<(&'a ScenarioSpec, &'a str), RunError> {
    if let Some((name, field)) = path.split_once('.') {
        if let Some(s) = config.scenarios.iter().find(|s| s.name == name) {
            return Ok((s, field));
        }
    }
    match config.scenarios.as_slice() {
        [only] => Ok((only, path)),
        _ => Err(RunError::Sweep(format!(
            "`{path}` does not name a scenario; use <name>.<field> with one of: {}",
            config.scenarios.iter().map(|s| s.name.as_str()).collect::<Vec<_>>().join(", ")
        ))),
    }
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub field: String,
    pub values: Vec<f64>,
    pub report: RunReport,
}

/// Run one scenario once per value of a parameter. Writes `report.json` and
/// `sweep.csv` into the output directory.
pub fn sweep(config: &RunConfig, path: &str, values: &[f64]) -> Result<SweepReport, RunError> {
    if values.is_empty() {
        return Err(RunError::Sweep("no sweep values".into()));
    }
    let (base, field) = resolve(config, path)?;
    let specs = values
        .iter()
        .map(|&v| {
            let mut s = with_param(base, field, v)?;
            s.name = format!("{}[{field}={v}]", base.name);
            Ok(s)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let evaluated = evaluate_all(config, &specs)?;
    let report = finish(config, evaluated)?;

    let csv_path = config.output_dir.join(SWEEP_FILE);
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["param", "work", "power", "rhs_fluctuation", "rhs_commutator", "saturation"])?;
    let fmt = |x: f64| format!("{x:.16e}");
    for (v, rec) in values.iter().zip(&report.scenarios) {
        let row = match &rec.outcome {
            Some(o) => {
                let b = &o.bound_report;
                [
                    fmt(*v),
                    fmt(b.work),
                    fmt(b.power),
                    fmt(b.rhs_fluctuation),
                    fmt(b.rhs_commutator),
                    b.saturation_fluctuation.map(fmt).unwrap_or_default(),
                ]
            }
            None => [fmt(*v), String::new(), String::new(), String::new(), String::new(), String::new()],
        };
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err(&csv_path))?;
    Ok(SweepReport {
        field: field.to_string(),
        values: values.to_vec(),
        report,
    })
}
