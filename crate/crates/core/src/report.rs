//! Pass/fail records shared by every verification suite.

use serde::Serialize;

use crate::rational::{format_rational, Rational, Q};

#[derive(Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

/// One verified statement.
///
/// `worst_slack` is how much of the allowance (the `C·δ` part of the bound)
/// the worst observed tuple consumed; zero means the sharp inequality held.
#[derive(Serialize, Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub worst_slack: Option<Q>,
    pub allowance: Option<Q>,
    pub checked: u64,
    pub not_applicable: u64,
    pub witness: Option<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn simple(name: impl Into<String>, ok: bool, checked: u64, witness: Option<String>) -> Check {
        Check {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            worst_slack: None,
            allowance: None,
            checked,
            not_applicable: 0,
            witness,
        }
    }

    pub fn not_applicable(name: impl Into<String>, reason: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            status: Status::NotApplicable,
            worst_slack: None,
            allowance: None,
            checked: 0,
            not_applicable: 0,
            witness: Some(reason.into()),
        }
    }
}

/// Accumulates `lhs ≤ rhs_full` observations for one statement.
///
/// `rhs_sharp` is the right-hand side with every δ-dependent term removed.
#[derive(Clone, Debug)]
pub struct Tally {
    name: String,
    allowance: Option<Rational>,
    worst: Option<Rational>,
    worst_witness: Option<String>,
    failure: Option<String>,
    checked: u64,
    skipped: u64,
}

impl Tally {
    pub fn new(name: impl Into<String>) -> Self {
        Tally {
            name: name.into(),
            allowance: None,
            worst: None,
            worst_witness: None,
            failure: None,
            checked: 0,
            skipped: 0,
        }
    }

    pub fn with_allowance(mut self, allowance: Rational) -> Self {
        self.allowance = Some(allowance);
        self
    }

    pub fn observe<F: FnOnce() -> String>(&mut self, lhs: Rational, rhs_sharp: Rational, rhs_full: Rational, witness: F) {
        self.checked += 1;
        let excess = lhs - rhs_sharp;
        let fails = lhs > rhs_full;
        let new_worst = self.worst.is_none_or(|w| excess > w);
        if fails && self.failure.is_none() {
            let w = witness();
            self.failure = Some(format!(
                "{w}: lhs {} > bound {}",
                format_rational(&lhs),
                format_rational(&rhs_full)
            ));
            if new_worst {
                self.worst = Some(excess);
            }
            return;
        }
        if new_worst {
            self.worst = Some(excess);
            if self.failure.is_none() {
                self.worst_witness = Some(witness());
            }
        }
    }

    pub fn observe_bool<F: FnOnce() -> String>(&mut self, ok: bool, witness: F) {
        self.checked += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(witness());
        }
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    pub fn merge(&mut self, other: Tally) {
        self.checked += other.checked;
        self.skipped += other.skipped;
        if self.failure.is_none() {
            self.failure = other.failure;
        }
        if let Some(w) = other.worst {
            if self.worst.is_none_or(|s| w > s) {
                self.worst = Some(w);
                self.worst_witness = other.worst_witness;
            }
        }
    }

    pub fn finish(self) -> Check {
        let status = if self.failure.is_some() {
            Status::Fail
        } else if self.checked == 0 {
            Status::NotApplicable
        } else {
            Status::Pass
        };
        let zero = Rational::from_integer(0);
        Check {
            name: self.name,
            status,
            worst_slack: self.worst.map(|w| Q(if w < zero { zero } else { w })),
            allowance: self.allowance.map(Q),
            checked: self.checked,
            not_applicable: self.skipped,
            witness: self.failure.or(self.worst_witness),
        }
    }
}

#[derive(Serialize, Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub title: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report {
            title: title.into(),
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    /// No check failed. Not-applicable entries do not count against the report.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }
}
