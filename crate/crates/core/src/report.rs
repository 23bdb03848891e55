//! Verification reports: named residuals and conditions with pass/fail.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// Residual, or the value the condition was evaluated on.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub subject: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(subject: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            checks: Vec::new(),
        }
    }

    /// A residual that passes iff it is finite and `<= tolerance`.
    pub fn residual(&mut self, name: &str, value: f64, tolerance: f64) {
        self.checks.push(Check {
            name: name.to_string(),
            value,
            tolerance,
            passed: value.is_finite() && value <= tolerance,
            detail: None,
        });
    }

    pub fn condition(&mut self, name: &str, value: f64, passed: bool, detail: Option<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            value,
            tolerance: f64::NAN,
            passed,
            detail,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn merge(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    /// `subject,check,value,tolerance,passed` rows.
    pub fn csv_rows(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{},{},{:.16e},{:.16e},{}",
                    self.subject, c.name, c.value, c.tolerance, c.passed
                )
            })
            .collect()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} [{}]", self.subject, if self.passed() { "PASS" } else { "FAIL" })?;
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            write!(
                f,
                "  {:<width$}  {:>12.3e}  {}",
                c.name,
                c.value,
                if c.passed { "ok" } else { "FAIL" },
                width = width
            )?;
            if c.tolerance.is_finite() {
                write!(f, "  (tol {:.0e})", c.tolerance)?;
            }
            if let Some(d) = &c.detail {
                write!(f, "  {d}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
