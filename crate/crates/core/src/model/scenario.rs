//! Pre/postselected ensemble descriptions and their JSON form.
//!
//! ```json
//! {
//!   "boundary": {"kind": "coherent", "q_pre": 1, "p_pre": 0, "q_post": 0, "p_post": 1},
//!   "hamiltonian": [[2, 0, 0.5, 0], [0, 2, 0.5, 0]],
//!   "hbar": 1, "t_start": 0, "t_end": 1
//! }
//! ```
//!
//! Spin boundaries use `theta_pre`, `phi_pre`, `theta_post`, `phi_post` and the
//! Hamiltonian string `"zero"`; position boundaries use `q_pre`, `q_post`.
//! Unknown keys anywhere are rejected.

use super::labels::{CoherentLabel, SpinLabel};
use super::symbol::PolynomialSymbol;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Coherent { pre: CoherentLabel, post: CoherentLabel },
    Spin { pre: SpinLabel, post: SpinLabel },
    Position { pre: f64, post: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Coherent,
    Spin,
    Position,
}

impl BoundaryKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryKind::Coherent => "coherent",
            BoundaryKind::Spin => "spin",
            BoundaryKind::Position => "position",
        }
    }
}

impl Boundary {
    pub fn kind(&self) -> BoundaryKind {
        match self {
            Boundary::Coherent { .. } => BoundaryKind::Coherent,
            Boundary::Spin { .. } => BoundaryKind::Spin,
            Boundary::Position { .. } => BoundaryKind::Position,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Hamiltonian {
    Polynomial(PolynomialSymbol),
    /// The vanishing spin Hamiltonian, the only one spin scenarios support.
    SpinZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub boundary: Boundary,
    pub hamiltonian: Hamiltonian,
    pub hbar: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl Scenario {
    pub fn new(
        boundary: Boundary,
        hamiltonian: Hamiltonian,
        hbar: f64,
        t_start: f64,
        t_end: f64,
    ) -> Result<Self> {
        let s = Self { boundary, hamiltonian, hbar, t_start, t_end };
        s.validate()?;
        Ok(s)
    }

    pub fn coherent(
        pre: CoherentLabel,
        post: CoherentLabel,
        hamiltonian: PolynomialSymbol,
        hbar: f64,
        t_start: f64,
        t_end: f64,
    ) -> Result<Self> {
        Self::new(
            Boundary::Coherent { pre, post },
            Hamiltonian::Polynomial(hamiltonian),
            hbar,
            t_start,
            t_end,
        )
    }

    pub fn spin(pre: SpinLabel, post: SpinLabel, t_start: f64, t_end: f64) -> Result<Self> {
        Self::new(Boundary::Spin { pre, post }, Hamiltonian::SpinZero, 1.0, t_start, t_end)
    }

    pub fn position(
        pre: f64,
        post: f64,
        hamiltonian: PolynomialSymbol,
        hbar: f64,
        t_start: f64,
        t_end: f64,
    ) -> Result<Self> {
        Self::new(
            Boundary::Position { pre, post },
            Hamiltonian::Polynomial(hamiltonian),
            hbar,
            t_start,
            t_end,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return bad(format!("hbar must be positive and finite, got {}", self.hbar));
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite()) {
            return bad("time window must be finite".into());
        }
        if self.t_end <= self.t_start {
            return bad(format!("t_end ({}) must exceed t_start ({})", self.t_end, self.t_start));
        }
        match (&self.boundary, &self.hamiltonian) {
            (Boundary::Spin { .. }, Hamiltonian::SpinZero) => {}
            (Boundary::Spin { .. }, Hamiltonian::Polynomial(_)) => {
                return bad("spin scenarios take the hamiltonian \"zero\"".into())
            }
            (_, Hamiltonian::SpinZero) => {
                return bad("\"zero\" hamiltonian is reserved for spin scenarios".into())
            }
            (_, Hamiltonian::Polynomial(h)) => {
                if !h.has_real_coefficients() {
                    return bad("hamiltonian coefficients must be real".into());
                }
                if h.terms().any(|(_, c)| !c.re.is_finite()) {
                    return bad("hamiltonian coefficients must be finite".into());
                }
            }
        }
        match self.boundary {
            Boundary::Coherent { pre, post } => {
                if !(pre.is_finite() && post.is_finite()) {
                    return bad("coherent labels must be finite".into());
                }
            }
            Boundary::Spin { pre, post } => {
                for l in [pre, post] {
                    SpinLabel::new(l.theta, l.phi)
                        .map_err(|e| Error::InvalidScenario(format!("spin label: {e}")))?;
                }
            }
            Boundary::Position { pre, post } => {
                if !(pre.is_finite() && post.is_finite()) {
                    return bad("position labels must be finite".into());
                }
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// The polynomial Hamiltonian; `None` for spin scenarios.
    pub fn polynomial_hamiltonian(&self) -> Option<&PolynomialSymbol> {
        match &self.hamiltonian {
            Hamiltonian::Polynomial(h) => Some(h),
            Hamiltonian::SpinZero => None,
        }
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !(self.t_start..=self.t_end).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "time {t} outside [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidScenario(e.to_string()))?;
        file.into_scenario()
    }

    pub fn to_json_value(&self) -> Value {
        let boundary = match self.boundary {
            Boundary::Coherent { pre, post } => BoundaryFile::Coherent {
                q_pre: pre.q,
                p_pre: pre.p,
                q_post: post.q,
                p_post: post.p,
            },
            Boundary::Spin { pre, post } => BoundaryFile::Spin {
                theta_pre: pre.theta,
                phi_pre: pre.phi,
                theta_post: post.theta,
                phi_post: post.phi,
            },
            Boundary::Position { pre, post } => BoundaryFile::Position { q_pre: pre, q_post: post },
        };
        let hamiltonian = match &self.hamiltonian {
            Hamiltonian::SpinZero => Value::String("zero".into()),
            Hamiltonian::Polynomial(h) => Value::Array(
                h.terms()
                    .map(|((m, n), c)| serde_json::json!([m, n, c.re, c.im]))
                    .collect(),
            ),
        };
        serde_json::json!({
            "boundary": serde_json::to_value(boundary).expect("boundary serializes"),
            "hamiltonian": hamiltonian,
            "hbar": self.hbar,
            "t_start": self.t_start,
            "t_end": self.t_end,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("scenario serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    boundary: BoundaryFile,
    hamiltonian: Value,
    hbar: f64,
    t_start: f64,
    t_end: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum BoundaryFile {
    Coherent { q_pre: f64, p_pre: f64, q_post: f64, p_post: f64 },
    Spin { theta_pre: f64, phi_pre: f64, theta_post: f64, phi_post: f64 },
    Position { q_pre: f64, q_post: f64 },
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let boundary = match self.boundary {
            BoundaryFile::Coherent { q_pre, p_pre, q_post, p_post } => Boundary::Coherent {
                pre: CoherentLabel::new(q_pre, p_pre),
                post: CoherentLabel::new(q_post, p_post),
            },
            BoundaryFile::Spin { theta_pre, phi_pre, theta_post, phi_post } => {
                let label = |t, f| {
                    SpinLabel::new(t, f).map_err(|e| Error::InvalidScenario(format!("spin label: {e}")))
                };
                Boundary::Spin { pre: label(theta_pre, phi_pre)?, post: label(theta_post, phi_post)? }
            }
            BoundaryFile::Position { q_pre, q_post } => Boundary::Position { pre: q_pre, post: q_post },
        };
        let hamiltonian = parse_hamiltonian(&self.hamiltonian)?;
        Scenario::new(boundary, hamiltonian, self.hbar, self.t_start, self.t_end)
    }
}

fn parse_hamiltonian(v: &Value) -> Result<Hamiltonian> {
    let bad = |m: &str| Error::InvalidScenario(format!("hamiltonian: {m}"));
    match v {
        Value::String(s) if s == "zero" => Ok(Hamiltonian::SpinZero),
        Value::String(s) => Err(bad(&format!("unknown tag {s:?}"))),
        Value::Array(rows) => {
            let mut terms = Vec::with_capacity(rows.len());
            let mut seen = std::collections::BTreeSet::new();
            for row in rows {
                let cells = row
                    .as_array()
                    .filter(|a| a.len() == 4)
                    .ok_or_else(|| bad("each term must be [m, n, re, im]"))?;
                let exponent = |x: &Value| -> Result<u32> {
                    x.as_u64()
                        .and_then(|k| u32::try_from(k).ok())
                        .ok_or_else(|| bad("exponents must be non-negative integers"))
                };
                let number = |x: &Value| x.as_f64().ok_or_else(|| bad("coefficients must be numbers"));
                let key = (exponent(&cells[0])?, exponent(&cells[1])?);
                if !seen.insert(key) {
                    return Err(bad(&format!("duplicate monomial q^{} p^{}", key.0, key.1)));
                }
                terms.push((key, Complex64::new(number(&cells[2])?, number(&cells[3])?)));
            }
            Ok(Hamiltonian::Polynomial(PolynomialSymbol::from_terms(terms)))
        }
        _ => Err(bad("expected an array of terms or \"zero\"")),
    }
}
