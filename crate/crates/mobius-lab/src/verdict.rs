//! Verdicts: a classification with the numeric evidence that produced it.

use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Positive,
    Negative,
    Inconclusive,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Positive => "Positive",
            Classification::Negative => "Negative",
            Classification::Inconclusive => "Inconclusive",
        }
    }
}

/// Outcome of a diagnostic. `conclusion` names what was concluded (for
/// example `NotMobiusBounded`); `is_certificate` is reserved for conclusions
/// that follow from an exact inequality and is never set on an inconclusive
/// verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub criterion: String,
    pub classification: Classification,
    pub conclusion: String,
    pub is_certificate: bool,
    pub evidence: Vec<(String, f64)>,
    pub method: String,
}

impl Verdict {
    pub fn new(
        criterion: impl Into<String>,
        classification: Classification,
        conclusion: impl Into<String>,
        is_certificate: bool,
        method: impl Into<String>,
    ) -> Self {
        Self {
            criterion: criterion.into(),
            classification,
            conclusion: conclusion.into(),
            is_certificate: is_certificate && classification != Classification::Inconclusive,
            evidence: Vec::new(),
            method: method.into(),
        }
    }

    /// Append an evidence entry.
    pub fn with(mut self, label: impl Into<String>, value: f64) -> Self {
        self.evidence.push((label.into(), value));
        self
    }

    pub fn push(&mut self, label: impl Into<String>, value: f64) {
        self.evidence.push((label.into(), value));
    }

    /// First evidence value recorded under `label`.
    pub fn evidence(&self, label: &str) -> Option<f64> {
        self.evidence.iter().find(|(l, _)| l == label).map(|(_, v)| *v)
    }

    /// JSON form with sorted keys; non-finite evidence serializes as `null`.
    pub fn to_json(&self) -> Value {
        let evidence: Vec<Value> = self.evidence.iter().map(|(l, v)| json!([l, v])).collect();
        json!({
            "criterion": self.criterion,
            "classification": self.classification.as_str(),
            "conclusion": self.conclusion,
            "is_certificate": self.is_certificate,
            "evidence": evidence,
            "method": self.method,
        })
    }
}
