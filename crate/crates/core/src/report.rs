//! Pass/fail records for residual checks and their JSON/text rendering.

use serde::Serialize;

/// One structural identity checked over a sample of points.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub points: usize,
    pub seed: u64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    pub fn new(
        name: impl Into<String>,
        max_residual: f64,
        tolerance: f64,
        points: usize,
        seed: u64,
    ) -> Self {
        CheckResult {
            name: name.into(),
            max_residual,
            tolerance,
            points,
            seed,
            pass: max_residual.is_finite() && max_residual <= tolerance,
            note: None,
        }
    }
}

/// Accumulates the worst residual over points; a failed evaluation poisons
/// the scan to an infinite residual instead of aborting the whole run, and
/// the first error message is kept as the check's note.
#[derive(Debug, Default)]
pub struct ResidualScan {
    worst: f64,
    note: Option<String>,
}

impl ResidualScan {
    pub fn new() -> Self {
        ResidualScan::default()
    }

    pub fn observe(&mut self, sample: crate::error::Result<f64>) {
        match sample {
            Ok(v) => self.worst = self.worst.max(v),
            Err(e) => {
                self.worst = f64::INFINITY;
                if self.note.is_none() {
                    self.note = Some(e.to_string());
                }
            }
        }
    }

    pub fn worst(&self) -> f64 {
        self.worst
    }

    pub fn into_check(
        self,
        name: impl Into<String>,
        tolerance: f64,
        points: usize,
        seed: u64,
    ) -> CheckResult {
        let mut check = CheckResult::new(name, self.worst, tolerance, points, seed);
        check.note = self.note;
        check
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    /// Version of the serialized layout, bumped on incompatible changes.
    pub schema: u32,
    pub system: String,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn new(system: impl Into<String>) -> Self {
        Report {
            schema: 1,
            system: system.into(),
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: CheckResult) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = CheckResult>) {
        self.checks.extend(checks);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_text(&self) -> String {
        let name_w = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(4)
            .max(5);
        let mut out = format!("system: {}\n", self.system);
        out.push_str(&format!(
            "{:<name_w$}  {:>12}  {:>9}  {:>6}  {}\n",
            "check", "max residual", "tolerance", "points", "result"
        ));
        for c in &self.checks {
            out.push_str(&format!(
                "{:<name_w$}  {:>12.3e}  {:>9.1e}  {:>6}  {}",
                c.name,
                c.max_residual,
                c.tolerance,
                c.points,
                if c.pass { "PASS" } else { "FAIL" }
            ));
            if let Some(note) = &c.note {
                out.push_str(&format!("  ({note})"));
            }
            out.push('\n');
        }
        out.push_str(if self.all_pass() {
            "overall: PASS\n"
        } else {
            "overall: FAIL\n"
        });
        out
    }
}
