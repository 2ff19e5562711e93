//! Structured verdicts of the symmetry checks.

use serde::{Deserialize, Serialize};

/// Which symmetry a report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryKind {
    Exchangeable,
    SwapInvariant,
    WeightedSwapInvariant,
    QuasiSwapInvariant,
    SelfDual,
}

/// One named residual compared against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub id: String,
    pub value: f64,
    pub tol: f64,
}

impl ResidualEntry {
    pub fn new(id: impl Into<String>, value: f64, tol: f64) -> Self {
        Self { id: id.into(), value, tol }
    }

    pub fn passes(&self) -> bool {
        self.value <= self.tol
    }
}

/// Verdict of one structural check. `pass` is derived from the residuals at
/// construction, so it can never disagree with them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub kind: SymmetryKind,
    pub pass: bool,
    pub residuals: Vec<ResidualEntry>,
    pub details: String,
}

impl SymmetryReport {
    pub fn from_residuals(
        kind: SymmetryKind,
        residuals: Vec<ResidualEntry>,
        details: impl Into<String>,
    ) -> Self {
        let pass = residuals.iter().all(ResidualEntry::passes);
        Self { kind, pass, residuals, details: details.into() }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.value).fold(0.0, f64::max)
    }

    /// Residual value by id; panics on unknown id (programming error).
    pub fn residual(&self, id: &str) -> f64 {
        self.residuals
            .iter()
            .find(|r| r.id == id)
            .unwrap_or_else(|| panic!("no residual named {id}"))
            .value
    }
}
