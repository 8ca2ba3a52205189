//! Check reports: verdict, margin, and witnesses for hypothesis checks.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::metric::Point;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Unknown,
    /// A stated precondition of the check does not hold, so the check itself
    /// never ran (distinct from a falsified hypothesis).
    PreconditionFail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Unknown => "unknown",
            Verdict::PreconditionFail => "precondition_fail",
        };
        f.write_str(s)
    }
}

/// A concrete configuration that exhibits the reported behavior: the points
/// involved plus labeled numeric values (distances, slacks, limits).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Witness {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Point>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<(String, Real)>,
}

impl Witness {
    pub fn new() -> Self {
        Witness::default()
    }

    pub fn point(mut self, p: Point) -> Self {
        self.points.push(p);
        self
    }

    pub fn value(mut self, label: impl Into<String>, v: Real) -> Self {
        self.values.push((label.into(), v));
        self
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for p in &self.points {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
            first = false;
        }
        for (label, v) in &self.values {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{label}={v}")?;
            first = false;
        }
        Ok(())
    }
}

/// Outcome of one hypothesis check. `margin` is the extremal signed slack
/// seen over all samples; a failing report always carries at least one
/// witness that re-evaluates to a violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    #[serde(rename = "check")]
    pub check_name: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<Real>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(check_name: impl Into<String>, verdict: Verdict) -> Self {
        CheckReport {
            check_name: check_name.into(),
            verdict,
            margin: None,
            witnesses: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn margin(mut self, m: Real) -> Self {
        self.margin = Some(m);
        self
    }

    pub fn witness(mut self, w: Witness) -> Self {
        self.witnesses.push(w);
        self
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }

    pub fn notes(mut self, ns: impl IntoIterator<Item = String>) -> Self {
        self.notes.extend(ns);
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.check_name, self.verdict)?;
        if let Some(m) = &self.margin {
            write!(f, " (margin {m})")?;
        }
        for w in &self.witnesses {
            write!(f, "\n  witness: {w}")?;
        }
        for n in &self.notes {
            write!(f, "\n  note: {n}")?;
        }
        Ok(())
    }
}
