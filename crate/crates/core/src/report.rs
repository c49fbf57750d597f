//! Verdicts, checks and the JSON report written by every command.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "UNVERIFIED")]
    Unverified,
    #[serde(rename = "K-CLOSURE-GAP")]
    KClosureGap,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Unverified => "UNVERIFIED",
            Verdict::KClosureGap => "K-CLOSURE-GAP",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

impl Check {
    pub fn pass(name: impl Into<String>, detail: impl Into<String>) -> Check {
        Check { name: name.into(), verdict: Verdict::Pass, detail: detail.into(), witness: None }
    }

    /// A failure always carries the object that demonstrates it.
    pub fn fail(name: impl Into<String>, detail: impl Into<String>, witness: Value) -> Check {
        Check { name: name.into(), verdict: Verdict::Fail, detail: detail.into(), witness: Some(witness) }
    }

    pub fn with_verdict(name: impl Into<String>, verdict: Verdict, detail: impl Into<String>, witness: Option<Value>) -> Check {
        Check { name: name.into(), verdict, detail: detail.into(), witness }
    }

    pub fn from_bool(name: impl Into<String>, ok: bool, detail: impl Into<String>, witness: impl FnOnce() -> Value) -> Check {
        if ok {
            Check::pass(name, detail)
        } else {
            Check::fail(name, detail, witness())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Vec<String>,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    pub data: Value,
}

impl Report {
    pub fn new(command: Vec<String>, checks: Vec<Check>, data: Value) -> Report {
        let verdict = overall(&checks);
        Report { command, verdict, checks, data }
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    /// One line per check, for the terminal.
    pub fn summary(&self) -> String {
        let mut s = format!("{}: {}\n", self.command.join(" "), self.verdict);
        for c in &self.checks {
            s.push_str(&format!("  [{}] {}: {}\n", c.verdict, c.name, c.detail));
        }
        s
    }
}

/// FAIL dominates, then K-CLOSURE-GAP, then UNVERIFIED.
pub fn overall(checks: &[Check]) -> Verdict {
    let has = |v: Verdict| checks.iter().any(|c| c.verdict == v);
    if has(Verdict::Fail) {
        Verdict::Fail
    } else if has(Verdict::KClosureGap) {
        Verdict::KClosureGap
    } else if has(Verdict::Unverified) {
        Verdict::Unverified
    } else {
        Verdict::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn verdict_priority_and_round_trip() {
        let checks = vec![
            Check::pass("a", "ok"),
            Check::with_verdict("b", Verdict::Unverified, "open", None),
            Check::fail("c", "bad", json!({"x": [1, 2]})),
        ];
        let r = Report::new(vec!["cmd".into()], checks, json!({}));
        assert_eq!(r.verdict, Verdict::Fail);
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"FAIL\""));
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(overall(&[Check::pass("a", "")]), Verdict::Pass);
        assert_eq!(overall(&[Check::with_verdict("k", Verdict::KClosureGap, "", None)]), Verdict::KClosureGap);
    }
}
