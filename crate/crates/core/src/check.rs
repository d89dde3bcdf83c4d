//! A single named pass/fail measurement.

use serde::{Deserialize, Serialize};

use crate::linalg::{op_norm, CMat};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured residual, eigenvalue or count.
    pub value: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
            witness: None,
        }
    }

    /// Passes when `value >= bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            passed: value >= bound,
            value,
            tolerance: bound,
            witness: None,
        }
    }

    pub fn with_witness(mut self, w: Option<String>) -> Self {
        self.witness = w;
        self
    }
}

/// Running maximum of a residual together with the input that produced it.
#[derive(Clone, Debug, Default)]
pub struct Worst {
    pub value: f64,
    pub witness: Option<String>,
}

impl Worst {
    pub fn see(&mut self, value: f64, witness: impl FnOnce() -> String) {
        if value > self.value || (self.witness.is_none() && value.is_nan()) {
            self.value = value;
            self.witness = Some(witness());
        }
    }

    /// Sees `‖m‖`, skipping the singular value computation when the Frobenius
    /// norm already shows `m` cannot raise the maximum.
    pub fn see_norm(&mut self, m: &CMat, witness: impl FnOnce() -> String) {
        let f = m.norm();
        if f <= self.value {
            return;
        }
        self.see(op_norm(m), witness);
    }

    pub fn check(self, name: impl Into<String>, tolerance: f64) -> Check {
        let c = Check::at_most(name, self.value, tolerance);
        let failed = !c.passed;
        c.with_witness(self.witness.filter(|_| failed))
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}
