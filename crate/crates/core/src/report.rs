use serde::{Deserialize, Serialize};

/// Outcome of one named numerical check.
///
/// `residual` is the measured defect (or, for inequalities, the amount by which
/// the left side exceeds the right side; negative means slack).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    /// False when the check's precondition did not hold; `passed` is then false too.
    pub applicable: bool,
    pub residual: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckReport {
    /// Passes when `residual <= tolerance`.
    pub fn within(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        CheckReport {
            name: name.into(),
            passed: residual <= tolerance,
            applicable: true,
            residual,
            tolerance,
            detail: None,
        }
    }

    /// Inequality `lhs <= rhs + tolerance`; the residual is `lhs - rhs`.
    pub fn at_most(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let mut r = CheckReport::within(name, lhs - rhs, tolerance);
        r.detail = Some(format!("lhs={lhs:.17e} rhs={rhs:.17e}"));
        r
    }

    /// Passes when `residual > threshold` (controls that must show an effect).
    pub fn exceeds(name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        CheckReport {
            name: name.into(),
            passed: residual > threshold,
            applicable: true,
            residual,
            tolerance: threshold,
            detail: None,
        }
    }

    pub fn inapplicable(name: impl Into<String>, reason: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            passed: false,
            applicable: false,
            residual: 0.0,
            tolerance: 0.0,
            detail: Some(reason.into()),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// Rename, keeping the outcome.
    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}
