//! TOML run configuration with strict key checking and line-numbered errors.
//!
//! ```toml
//! hbar = 1.0
//! seed = 7
//! output_dir = "out"
//! emit_distributions = true
//!
//! [[scenario]]
//! name = "qubit"
//! kind = "qubit_saturation"
//! [scenario.params]
//! profile_ratio = 0.01
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::path::PathBuf;

use powerbound_core::scenarios::{ScenarioKind, ScenarioParams, ScenarioSpec};
use powerbound_core::Error as CoreError;
use serde::Deserialize;
use toml::Spanned;

pub const DEFAULT_OUTPUT_DIR: &str = "powerbound-out";

/// Bundled configuration exercising every scenario kind.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    pub hermitian: f64,
    pub unitary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: 1e-12,
            unitary: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub hbar: f64,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub emit_distributions: bool,
    /// Worker threads; `None` uses the rayon default.
    pub workers: Option<usize>,
    pub tolerances: Tolerances,
    pub scenarios: Vec<ScenarioSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.path, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for i in &self.issues {
            writeln!(f, "  {i}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    hbar: Option<Spanned<f64>>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    emit_distributions: bool,
    workers: Option<Spanned<i64>>,
    tolerances: Option<RawTolerances>,
    #[serde(default)]
    scenario: Vec<RawScenario>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    hermitian: Option<f64>,
    unitary: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    kind: Spanned<String>,
    hbar: Option<Spanned<f64>>,
    params: Option<Spanned<toml::Table>>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
}

/// 1-based line of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

/// Line of `key = ...` in the table starting at `span`, falling back to the table start.
fn key_line(text: &str, span: &Range<usize>, key: &str) -> usize {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    let start = span.start.min(text.len());
    let mut offset = start;
    for (i, line) in text[start..].split_inclusive('\n').enumerate() {
        let trimmed = line.trim_start();
        if i > 0 && trimmed.starts_with('[') {
            break;
        }
        if let Some(rest) = trimmed.strip_prefix(leaf) {
            if rest.trim_start().starts_with('=') {
                return line_of(text, offset);
            }
        }
        offset += line.len();
    }
    line_of(text, start)
}

fn toml_issue(text: &str, e: &toml::de::Error, path: String) -> ConfigIssue {
    ConfigIssue {
        line: e.span().map(|s| line_of(text, s.start)),
        path,
        message: e.message().to_string(),
    }
}

fn params_for(kind: ScenarioKind, table: toml::Table) -> Result<ScenarioParams, toml::de::Error> {
    let value = toml::Value::Table(table);
    Ok(match kind {
        ScenarioKind::TwinOscillator => ScenarioParams::TwinOscillator(value.try_into()?),
        ScenarioKind::NonautonomousControl => ScenarioParams::NonautonomousControl(value.try_into()?),
        ScenarioKind::QubitSaturation => ScenarioParams::QubitSaturation(value.try_into()?),
        ScenarioKind::RandomClockEnsemble => ScenarioParams::RandomClockEnsemble(value.try_into()?),
        ScenarioKind::CommutingTriviality => ScenarioParams::CommutingTriviality(value.try_into()?),
    })
}

fn inherit_seed(params: &mut ScenarioParams, seed: Option<u64>) {
    match params {
        ScenarioParams::RandomClockEnsemble(p) if p.seed.is_none() => p.seed = seed,
        ScenarioParams::CommutingTriviality(p) if p.seed.is_none() => p.seed = seed,
        _ => {}
    }
}

/// Parse and validate a configuration. All problems found are reported together.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
        issues: vec![toml_issue(text, &e, "config".into())],
    })?;
    let mut issues = Vec::new();

    let hbar = match &raw.hbar {
        Some(h) if !(*h.get_ref() > 0.0 && h.get_ref().is_finite()) => {
            issues.push(ConfigIssue {
                line: Some(line_of(text, h.span().start)),
                path: "hbar".into(),
                message: format!("must be positive, got {}", h.get_ref()),
            });
            1.0
        }
        Some(h) => *h.get_ref(),
        None => 1.0,
    };
    let workers = match &raw.workers {
        Some(w) if *w.get_ref() < 1 => {
            issues.push(ConfigIssue {
                line: Some(line_of(text, w.span().start)),
                path: "workers".into(),
                message: "must be at least 1".into(),
            });
            None
        }
        Some(w) => Some(*w.get_ref() as usize),
        None => None,
    };
    let defaults = Tolerances::default();
    let tolerances = match raw.tolerances {
        Some(t) => Tolerances {
            hermitian: t.hermitian.unwrap_or(defaults.hermitian),
            unitary: t.unitary.unwrap_or(defaults.unitary),
        },
        None => defaults,
    };
    if !(tolerances.hermitian > 0.0 && tolerances.unitary > 0.0) {
        issues.push(ConfigIssue {
            line: None,
            path: "tolerances".into(),
            message: "must be positive".into(),
        });
    }

    if raw.scenario.is_empty() {
        issues.push(ConfigIssue {
            line: None,
            path: "scenario".into(),
            message: "at least one [[scenario]] is required".into(),
        });
    }

    let mut scenarios = Vec::new();
    let mut names = BTreeMap::new();
    for (i, s) in raw.scenario.into_iter().enumerate() {
        let at = format!("scenario[{i}]");
        let kind_line = line_of(text, s.kind.span().start);
        let Some(kind) = ScenarioKind::parse(s.kind.get_ref()) else {
            let known: Vec<&str> = ScenarioKind::ALL.iter().map(|k| k.as_str()).collect();
            issues.push(ConfigIssue {
                line: Some(kind_line),
                path: format!("{at}.kind"),
                message: format!("unknown scenario kind `{}` (known: {})", s.kind.get_ref(), known.join(", ")),
            });
            continue;
        };
        let name = s.name.unwrap_or_else(|| kind.as_str().to_string());
        if let Some(prev) = names.insert(name.clone(), i) {
            issues.push(ConfigIssue {
                line: Some(kind_line),
                path: format!("{at}.name"),
                message: format!("duplicate name `{name}` (also scenario[{prev}])"),
            });
        }
        let scenario_hbar = match &s.hbar {
            Some(h) => *h.get_ref(),
            None => hbar,
        };
        let (table, span) = match s.params {
            Some(p) => {
                let span = p.span();
                (p.into_inner(), span)
            }
            None => (toml::Table::new(), s.kind.span()),
        };
        let mut params = match params_for(kind, table) {
            Ok(p) => p,
            Err(e) => {
                let mut issue = toml_issue(text, &e, format!("{at}.params"));
                if issue.line.is_none() {
                    issue.line = Some(line_of(text, span.start));
                }
                issues.push(issue);
                continue;
            }
        };
        inherit_seed(&mut params, raw.seed);
        let spec = ScenarioSpec {
            name,
            hbar: scenario_hbar,
            params,
            tolerances: s.tolerances,
        };
        if let Err(e) = spec.validate() {
            let (field, message) = match &e {
                CoreError::InvalidParameter { name, reason } => (name.clone(), reason.clone()),
                other => (String::new(), other.to_string()),
            };
            let line = match field.as_str() {
                "hbar" => s.hbar.as_ref().map(|h| line_of(text, h.span().start)).unwrap_or(kind_line),
                "" => kind_line,
                f => key_line(text, &span, f),
            };
            let path = match field.as_str() {
                "" => at.clone(),
                "hbar" => format!("{at}.hbar"),
                f if f.starts_with("tolerances.") => format!("{at}.{f}"),
                f => format!("{at}.params.{f}"),
            };
            issues.push(ConfigIssue {
                line: Some(line),
                path,
                message,
            });
            continue;
        }
        scenarios.push(spec);
    }

    if !issues.is_empty() {
        return Err(ConfigError { issues });
    }
    Ok(RunConfig {
        hbar,
        seed: raw.seed,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        emit_distributions: raw.emit_distributions,
        workers,
        tolerances,
        scenarios,
    })
}
