//! Verification suites with machine-readable reports. Each suite runs a
//! family of checks under an optional wall-clock budget.

mod machines;
mod numeric;
mod rule_checks;
mod towers;

pub use machines::{gamma_u, reversibility, GammaOptions, ReversibilityOptions};
pub use numeric::{cover, ne_pipeline, params, sequences, CoverOptions};
pub use rule_checks::{compiler, compute, koo, shift, sonfather, KooOptions, ShiftOptions};
pub use towers::{composition, halting, periods, unive, HaltingOptions, Toy, UniveOptions};

use serde_json::{json, Value};
use std::time::{Duration, Instant};

/// One named property with its outcome.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

/// Outcome of a suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    /// Checks skipped because the budget ran out.
    pub skipped: Vec<String>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn budget_exhausted(&self) -> bool {
        !self.skipped.is_empty()
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Every check ran and passed.
    pub fn passed(&self) -> bool {
        !self.budget_exhausted() && self.checks.iter().all(|c| c.passed)
    }

    /// One record per check, then a summary record.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "fail" };
            out += &json!({"suite": self.suite, "check": c.name, "status": status, "detail": c.detail}).to_string();
            out.push('\n');
        }
        for s in &self.skipped {
            out += &json!({"suite": self.suite, "check": s, "status": "budget"}).to_string();
            out.push('\n');
        }
        let status = if self.budget_exhausted() {
            "budget"
        } else if self.passed() {
            "pass"
        } else {
            "fail"
        };
        out += &json!({
            "suite": self.suite,
            "summary": status,
            "checks": self.checks.len(),
            "failures": self.failures().len(),
            "skipped": self.skipped.len(),
            "elapsed_ms": self.elapsed.as_millis() as u64,
        })
        .to_string();
        out.push('\n');
        out
    }
}

/// Optional wall-clock limit shared by the checks of a run.
#[derive(Debug, Clone, Copy, Default)]
pub struct Budget {
    deadline: Option<Instant>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget { deadline: None }
    }

    pub fn within(d: Duration) -> Self {
        Budget { deadline: Some(Instant::now() + d) }
    }

    pub fn exhausted(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// Collects checks for one suite.
pub(crate) struct Runner {
    report: SuiteReport,
    budget: Budget,
    start: Instant,
}

impl Runner {
    pub(crate) fn new(suite: &str, budget: Budget) -> Self {
        let report = SuiteReport { suite: suite.into(), checks: vec![], skipped: vec![], elapsed: Duration::ZERO };
        Runner { report, budget, start: Instant::now() }
    }

    /// Runs `f` unless the budget is exhausted; `Err` marks a failure.
    pub(crate) fn check(&mut self, name: impl Into<String>, f: impl FnOnce() -> Result<Value, String>) {
        let name = name.into();
        if self.budget.exhausted() {
            self.report.skipped.push(name);
            return;
        }
        let t0 = Instant::now();
        let (passed, mut detail) = match f() {
            Ok(v) => (true, v),
            Err(m) => (false, json!({"counterexample": m})),
        };
        if let Value::Object(m) = &mut detail {
            m.insert("elapsed_ms".into(), json!(t0.elapsed().as_millis() as u64));
        }
        self.report.checks.push(Check { name, passed, detail });
    }

    pub(crate) fn finish(mut self) -> SuiteReport {
        self.report.elapsed = self.start.elapsed();
        self.report
    }
}

/// `Ok` when `cond` holds, else the message.
pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_distinguish_budget_from_failure() {
        let mut r = Runner::new("demo", Budget::unlimited());
        r.check("ok", || Ok(json!({})));
        r.check("bad", || Err("broken".into()));
        let rep = r.finish();
        assert!(!rep.passed() && !rep.budget_exhausted());
        assert_eq!(rep.failures().len(), 1);
        let mut r = Runner::new("demo", Budget::within(Duration::ZERO));
        r.check("late", || Ok(json!({})));
        let rep = r.finish();
        assert!(rep.budget_exhausted() && !rep.passed());
        assert!(rep.to_ndjson().contains("\"summary\":\"budget\""));
    }
}
