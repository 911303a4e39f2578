//! Merging per-stage reports into one entry per check.

use serde::Serialize;

use crate::error::Error;
use crate::report::{Check, Report, Status};

/// Folds every check of `reports` into one check per name, in first-seen order.
/// A name fails if any occurrence fails and passes if any occurrence passes.
pub fn aggregate(title: &str, reports: &[Report]) -> Report {
    let mut out = Report::new(title);
    for r in reports {
        for c in &r.checks {
            match out.checks.iter_mut().find(|m| m.name == c.name) {
                None => out.checks.push(c.clone()),
                Some(m) => merge_into(m, c),
            }
        }
    }
    out
}

fn merge_into(m: &mut Check, c: &Check) {
    m.checked += c.checked;
    m.not_applicable += c.not_applicable;
    if let Some(s) = &c.worst_slack {
        if m.worst_slack.as_ref().is_none_or(|w| s.0 > w.0) {
            m.worst_slack = Some(*s);
        }
    }
    if m.allowance.is_none() {
        m.allowance = c.allowance;
    }
    match (m.status, c.status) {
        (Status::Fail, _) => {}
        (_, Status::Fail) => {
            m.status = Status::Fail;
            m.witness = c.witness.clone();
        }
        (Status::NotApplicable, Status::Pass) => {
            m.status = Status::Pass;
            m.witness = c.witness.clone();
        }
        _ => {}
    }
}

/// A failed check standing in for a suite that could not run.
pub fn error_check(name: &str, e: &Error) -> Check {
    Check::simple(name, false, 0, Some(e.to_string()))
}

#[derive(Serialize, Clone, Debug)]
pub struct MatrixRow {
    pub suite: String,
    #[serde(flatten)]
    pub check: Check,
}

/// The pass/fail matrix of `verify`.
#[derive(Serialize, Clone, Debug, Default)]
pub struct Matrix {
    pub rows: Vec<MatrixRow>,
}

impl Matrix {
    pub fn add(&mut self, suite: &str, report: Report) {
        for check in report.checks {
            self.rows.push(MatrixRow {
                suite: suite.to_string(),
                check,
            });
        }
    }

    pub fn add_check(&mut self, suite: &str, check: Check) {
        self.rows.push(MatrixRow {
            suite: suite.to_string(),
            check,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.check.status != Status::Fail)
    }

    pub fn failures(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| r.check.status == Status::Fail)
            .map(|r| format!("{}/{}", r.suite, r.check.name))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, Q};

    #[test]
    fn folds_statuses_by_name() {
        let mut a = Report::new("a");
        a.push(Check::not_applicable("x", "empty"));
        a.push(Check::simple("y", true, 2, None));
        let mut b = Report::new("b");
        let mut x = Check::simple("x", true, 3, None);
        x.worst_slack = Some(Q(int(1)));
        b.push(x);
        b.push(Check::simple("y", false, 1, Some("bad".into())));
        let m = aggregate("all", &[a, b]);
        assert_eq!(m.checks.len(), 2);
        assert_eq!(m.get("x").unwrap().status, Status::Pass);
        assert_eq!(m.get("x").unwrap().worst_slack, Some(Q(int(1))));
        let y = m.get("y").unwrap();
        assert_eq!((y.status, y.checked, y.witness.as_deref()), (Status::Fail, 3, Some("bad")));
    }
}
