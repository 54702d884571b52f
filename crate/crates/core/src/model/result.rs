use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    GeneratingFunctional,
    Semiclassical,
    ClosedForm,
    Pointer,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::GeneratingFunctional => "generating_functional",
            Method::Semiclassical => "semiclassical",
            Method::ClosedForm => "closed_form",
            Method::Pointer => "pointer",
        }
    }
}

/// Key under which every result reports `|<post|U|pre>|` or its semiclassical analog.
pub const OVERLAP_ABS: &str = "overlap_abs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakValueResult {
    pub value: Complex64,
    pub time: f64,
    pub method: Method,
    pub diagnostics: BTreeMap<String, f64>,
}

impl WeakValueResult {
    pub fn new(value: Complex64, time: f64, method: Method, overlap_abs: f64) -> Self {
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert(OVERLAP_ABS.to_string(), overlap_abs);
        Self { value, time, method, diagnostics }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub fn overlap_abs(&self) -> f64 {
        self.diagnostics[OVERLAP_ABS]
    }

    pub fn diagnostic(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).copied()
    }
}
