//! Pass/fail reporting shared by law validation, Poisson table checks,
//! confluence analysis, and reconstruction verification.

use serde::{Deserialize, Serialize};

/// Outcome of one named check. `witness` holds a human-readable
/// counterexample when the check fails; `detail` carries informational
/// output (filtration slack, counts) even on success.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckOutcome {
    #[must_use]
    pub fn pass(name: impl Into<String>) -> Self {
        CheckOutcome { name: name.into(), pass: true, witness: None, detail: None }
    }

    #[must_use]
    pub fn fail(name: impl Into<String>, witness: impl Into<String>) -> Self {
        CheckOutcome { name: name.into(), pass: false, witness: Some(witness.into()), detail: None }
    }

    #[must_use]
    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// A bundle of check outcomes with an overall verdict.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<CheckOutcome>,
}

impl Report {
    #[must_use]
    pub fn new() -> Self {
        Report { checks: Vec::new() }
    }

    pub fn push(&mut self, outcome: CheckOutcome) {
        self.checks.push(outcome);
    }

    #[must_use]
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// First failing check, if any.
    #[must_use]
    pub fn first_failure(&self) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| !c.pass)
    }
}
