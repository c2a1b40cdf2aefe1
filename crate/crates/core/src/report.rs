//! Verification reports: per-point check entries with residuals and
//! tolerances, aggregated into pass/fail/warn counts.

#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckEntry {
    pub label: String,
    pub x: Option<f64>,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    /// Checks the verification theory leaves open are reported but do not
    /// fail the run.
    pub warn_only: bool,
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn push(&mut self, label: impl Into<String>, x: Option<f64>, residual: f64, tol: f64, pass: bool) {
        self.entries.push(CheckEntry { label: label.into(), x, residual, tol, pass, warn_only: false });
    }

    pub fn push_warn(&mut self, label: impl Into<String>, x: Option<f64>, residual: f64, tol: f64, pass: bool) {
        self.entries.push(CheckEntry { label: label.into(), x, residual, tol, pass, warn_only: true });
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.entries.extend(other.entries);
    }

    pub fn n_fail(&self) -> usize {
        self.entries.iter().filter(|e| !e.pass && !e.warn_only).count()
    }

    pub fn n_warn(&self) -> usize {
        self.entries.iter().filter(|e| !e.pass && e.warn_only).count()
    }

    pub fn passed(&self) -> bool {
        self.n_fail() == 0
    }

    /// Largest failing-side residual among non-warn entries.
    pub fn max_residual(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| !e.warn_only)
            .map(|e| e.residual.abs())
            .fold(0.0, f64::max)
    }

    /// Violations (including warnings) as printable lines.
    pub fn violations(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| !e.pass)
            .map(|e| {
                let loc = e.x.map(|x| format!(" at x = {x:.6}")).unwrap_or_default();
                let kind = if e.warn_only { "WARN" } else { "FAIL" };
                format!("{kind} {}{loc}: residual {:.3e} exceeds {:.1e}", e.label, e.residual, e.tol)
            })
            .collect()
    }
}
