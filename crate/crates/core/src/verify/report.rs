//! Verification reports with deterministic serialization. Wall-clock timing
//! is kept out of the serialized form so that identical runs produce
//! byte-identical documents.

use serde::Serialize;
use std::collections::BTreeMap;
use std::time::Duration;

pub const SCHEMA: &str = "report.v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubCheck {
    pub indices: String,
    pub method: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub check: String,
    pub spec: String,
    pub levels: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skip_reason: Option<String>,
    pub subchecks: Vec<SubCheck>,
    /// named quantities; big integers as decimal strings
    pub quantities: BTreeMap<String, String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Report {
    pub fn new(check: &str, spec: &str, levels: String) -> Report {
        Report {
            schema: SCHEMA,
            check: check.to_string(),
            spec: spec.to_string(),
            levels,
            verdict: Verdict::Pass,
            skip_reason: None,
            subchecks: vec![],
            quantities: BTreeMap::new(),
            elapsed: Duration::ZERO,
        }
    }

    pub fn push(&mut self, indices: String, method: &str, ok: bool, note: Option<String>) {
        self.subchecks.push(SubCheck {
            indices,
            method: method.to_string(),
            ok,
            note,
        });
        if !ok {
            self.verdict = Verdict::Fail;
        }
    }

    pub fn set_quantity(&mut self, key: &str, value: String) {
        self.quantities.insert(key.to_string(), value);
    }

    pub fn skip(&mut self, reason: &str) {
        self.verdict = Verdict::Skipped;
        self.skip_reason = Some(reason.to_string());
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn one_line(&self) -> String {
        let status = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skipped => "SKIP",
        };
        format!(
            "{status} {check} [{spec}] levels {levels} ({n} subchecks, {ms} ms)",
            check = self.check,
            spec = self.spec,
            levels = self.levels,
            n = self.subchecks.len(),
            ms = self.elapsed.as_millis()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_is_deterministic_and_skips_timing() {
        let mut a = Report::new("axes", "alt(5,2)", "1..=4".into());
        a.push("i=2,j=3".into(), "symbolic-cylinder", true, None);
        a.set_quantity("order", "60".into());
        a.elapsed = Duration::from_millis(123);
        let mut b = a.clone();
        b.elapsed = Duration::from_millis(9_999);
        assert_eq!(a.to_json(), b.to_json());
        assert!(!a.to_json().contains("9999"));
    }
}
