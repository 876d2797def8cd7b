//! Structured pass/fail records for identity checks.

use std::fmt;

use serde::Serialize;

use crate::multivec::{HForm, Multivector};
use crate::series::FiberSeries;

const SUMMARY_LIMIT: usize = 160;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    /// Name of the identity being verified.
    pub identity: String,
    pub passed: bool,
    /// Informational entries do not affect the overall verdict.
    pub gating: bool,
    /// Highest fiber degree at which the residual is exact; absent for
    /// numeric checks.
    pub certified_order: Option<i32>,
    pub residual: String,
    /// Numeric deviation for tolerance-based checks.
    pub deviation: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CheckReport {
    pub title: String,
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self { title: title.into(), entries: Vec::new() }
    }

    /// All gating entries passed.
    pub fn passed(&self) -> bool {
        self.entries.iter().filter(|e| e.gating).all(|e| e.passed)
    }

    pub fn entry(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn push(&mut self, entry: CheckEntry) {
        self.entries.push(entry);
    }

    /// Exact check: passes when the residual is zero.
    pub fn exact(&mut self, name: &str, identity: &str, residual: Residual) {
        self.entries.push(CheckEntry {
            name: name.into(),
            identity: identity.into(),
            passed: residual.zero,
            gating: true,
            certified_order: Some(residual.order),
            residual: residual.summary,
            deviation: None,
            tolerance: None,
        });
    }

    /// Exact check reported without affecting the verdict.
    pub fn informational(&mut self, name: &str, identity: &str, residual: Residual) {
        self.exact(name, identity, residual);
        self.entries.last_mut().unwrap().gating = false;
    }

    pub fn boolean(&mut self, name: &str, identity: &str, passed: bool, detail: impl Into<String>) {
        self.entries.push(CheckEntry {
            name: name.into(),
            identity: identity.into(),
            passed,
            gating: true,
            certified_order: None,
            residual: detail.into(),
            deviation: None,
            tolerance: None,
        });
    }

    pub fn numeric(&mut self, name: &str, identity: &str, deviation: f64, tolerance: f64) {
        self.entries.push(CheckEntry {
            name: name.into(),
            identity: identity.into(),
            passed: deviation.is_finite() && deviation < tolerance,
            gating: true,
            certified_order: None,
            residual: format!("{deviation:.6e}"),
            deviation: Some(deviation),
            tolerance: Some(tolerance),
        });
    }

    /// Append another report's entries, prefixing their names.
    pub fn absorb(&mut self, prefix: &str, other: CheckReport) {
        for mut e in other.entries {
            e.name = format!("{prefix}{}", e.name);
            self.entries.push(e);
        }
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "== {} ==", self.title)?;
        for e in &self.entries {
            let status = match (e.passed, e.gating) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "NOTE",
            };
            write!(f, "[{status}] {} ({})", e.name, e.identity)?;
            match e.certified_order {
                Some(i32::MAX) => write!(f, " order=exact")?,
                Some(o) => write!(f, " order={o}")?,
                None => {}
            }
            if let Some(t) = e.tolerance {
                write!(f, " tol={t:.1e}")?;
            }
            writeln!(f, " residual: {}", e.residual)?;
        }
        writeln!(f, "verdict: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// A computed residual reduced to what a report needs.
#[derive(Clone, Debug)]
pub struct Residual {
    pub zero: bool,
    pub order: i32,
    pub summary: String,
}

fn clip(s: String) -> String {
    if s.chars().count() <= SUMMARY_LIMIT {
        s
    } else {
        let t: String = s.chars().take(SUMMARY_LIMIT).collect();
        format!("{t}...")
    }
}

impl Residual {
    pub fn series(s: &FiberSeries) -> Self {
        Self { zero: s.is_zero(), order: s.valid_order(), summary: clip(s.to_string()) }
    }

    pub fn multivector(m: &Multivector) -> Self {
        let n = m.components().len();
        let summary = if n == 0 { "0".to_string() } else { clip(format!("{n} nonzero: {m}")) };
        Self { zero: n == 0, order: m.valid_order(), summary }
    }

    pub fn form(h: &HForm) -> Self {
        let n = h.values().len();
        let summary = if n == 0 { "0".to_string() } else { clip(format!("{n} nonzero: {h}")) };
        Self { zero: n == 0, order: h.valid_order(), summary }
    }

    /// Combine several residuals: zero iff all are, order is the minimum.
    pub fn all(parts: impl IntoIterator<Item = Residual>) -> Self {
        let mut zero = true;
        let mut order = i32::MAX;
        let mut first_bad = None;
        let mut bad = 0;
        for p in parts {
            order = order.min(p.order);
            if !p.zero {
                zero = false;
                bad += 1;
                first_bad.get_or_insert(p.summary);
            }
        }
        let summary = match first_bad {
            None => "0".to_string(),
            Some(s) if bad == 1 => s,
            Some(s) => clip(format!("{bad} parts nonzero; first: {s}")),
        };
        Self { zero, order, summary }
    }
}
