//! Check reports and their JSON/text renderings.

use std::fmt::Write as _;

use lcm_dilation::check::Check;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub verdict: Verdict,
    /// Residual, eigenvalue or count measured by the check.
    pub value: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    /// Wall time of the stage that produced the check; excluded from the hash.
    pub wall_time_ms: f64,
}

impl CheckRecord {
    pub fn from_check(c: Check, wall_time_ms: f64) -> Self {
        CheckRecord {
            name: c.name,
            verdict: if c.passed {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            value: c.value,
            tolerance: c.tolerance,
            witness: c.witness,
            wall_time_ms,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub tool: String,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            tool: format!("lcm-dilate {}", env!("CARGO_PKG_VERSION")),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub instance: String,
    pub instance_hash: String,
    pub depth: usize,
    pub seed: u64,
    pub environment: Environment,
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
    /// SHA-256 of the JSON report with wall times zeroed and this field empty.
    pub report_hash: String,
}

impl Report {
    pub fn new(
        command: &str,
        instance: &str,
        instance_hash: &str,
        depth: usize,
        seed: u64,
    ) -> Self {
        Report {
            command: command.to_string(),
            instance: instance.to_string(),
            instance_hash: instance_hash.to_string(),
            depth,
            seed,
            environment: Environment::current(),
            checks: Vec::new(),
            passed: true,
            report_hash: String::new(),
        }
    }

    pub fn push(&mut self, checks: impl IntoIterator<Item = Check>, wall_time_ms: f64) {
        self.checks.extend(
            checks
                .into_iter()
                .map(|c| CheckRecord::from_check(c, wall_time_ms)),
        );
    }

    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.report_hash.clear();
        for c in &mut canonical.checks {
            c.wall_time_ms = 0.0;
        }
        let bytes = serde_json::to_vec(&canonical).expect("report serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Sets the overall verdict and the content hash.
    pub fn finish(mut self) -> Self {
        self.passed = !self.checks.is_empty() && self.checks.iter().all(CheckRecord::passed);
        self.report_hash = self.content_hash();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# {} {} depth={} seed={} instance={}",
            self.command,
            self.instance,
            self.depth,
            self.seed,
            &self.instance_hash[..self.instance_hash.len().min(16)]
        );
        for c in &self.checks {
            let verdict = if c.passed() { "PASS" } else { "FAIL" };
            let _ = write!(
                out,
                "{verdict}  {}  value={:.3e}  tol={:.1e}",
                c.name, c.value, c.tolerance
            );
            if let Some(w) = &c.witness {
                let _ = write!(out, "  witness: {w}");
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "# overall {}  report={}",
            if self.passed { "PASS" } else { "FAIL" },
            &self.report_hash[..self.report_hash.len().min(16)]
        );
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

pub fn emit(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json() + "\n",
        Format::Text => report.to_text(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("validate", "x.json", "abcd", 2, 0);
        r.push([Check::at_most("residual", 1e-12, 1e-8)], 1.5);
        r.push(
            [Check::at_least("eigenvalue", -0.5, 0.0).with_witness(Some("F={(1)}".into()))],
            2.0,
        );
        r.finish()
    }

    #[test]
    fn json_round_trips() {
        let r = sample();
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn text_has_a_verdict_per_check() {
        let text = sample().to_text();
        assert!(text.lines().any(|l| l.starts_with("PASS  residual")));
        assert!(text
            .lines()
            .any(|l| l.starts_with("FAIL  eigenvalue") && l.contains("F={(1)}")));
    }

    #[test]
    fn hash_ignores_wall_time() {
        let a = sample();
        let mut b = a.clone();
        b.checks[0].wall_time_ms = 99.0;
        assert_eq!(a.report_hash, b.content_hash());
        assert!(!a.passed);
    }
}
