//! JSON problem files describing a [`CompositionChain`].
//!
//! ```json
//! {
//!   "n": 2, "ranks": [1, 1], "local_widths": [1, 1],
//!   "stages": [
//!     {"F": [[{"exponents": {"x[1][1]": 1}, "coeff": 1.0}]], "constraints": []},
//!     {"F": [[{"exponents": {"s[1][1]": 2}, "coeff": 1.0},
//!             {"exponents": {"x[2][1]": 1}, "coeff": 1.0}]],
//!      "constraints": [{"poly": [{"exponents": {}, "coeff": 1.0}], "sense": "ge"}]}
//!   ],
//!   "box_radii": [1.0, 1.0],
//!   "objective_sense": "minimize"
//! }
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainError, ChainParts, CompositionChain, ConstraintSense, Sense, StageConstraint};
use crate::poly::{Monomial, Polynomial, VariableSpace};

#[derive(Debug, Error)]
pub enum ProblemFileError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    #[serde(default)]
    pub exponents: BTreeMap<String, u32>,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDoc {
    pub poly: Vec<Term>,
    pub sense: ConstraintSense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageDoc {
    #[serde(rename = "F")]
    pub f: Vec<Vec<Term>>,
    #[serde(default)]
    pub constraints: Vec<ConstraintDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    pub n: usize,
    pub ranks: Vec<usize>,
    pub local_widths: Vec<usize>,
    pub stages: Vec<StageDoc>,
    pub box_radii: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_radii: Option<Vec<f64>>,
    pub objective_sense: Sense,
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> ProblemFileError {
    ProblemFileError::Field { field: field.into(), message: message.into() }
}

/// Parses a term list into a polynomial, naming `field` on failure.
pub fn parse_terms(space: &Arc<VariableSpace>, terms: &[Term], field: &str) -> Result<Polynomial, ProblemFileError> {
    let mut p = Polynomial::zero(space);
    for (t, term) in terms.iter().enumerate() {
        if !term.coeff.is_finite() {
            return Err(field_err(format!("{field}[{t}].coeff"), "coefficient must be finite"));
        }
        let mut pairs = Vec::with_capacity(term.exponents.len());
        for (name, &e) in &term.exponents {
            let id = space
                .parse_name(name)
                .map_err(|err| field_err(format!("{field}[{t}].exponents"), err.to_string()))?;
            pairs.push((id, e));
        }
        p.add_term(Monomial::from_pairs(pairs), term.coeff);
    }
    Ok(p)
}

fn terms_of(p: &Polynomial) -> Vec<Term> {
    let sp = p.space();
    p.terms()
        .map(|(m, c)| Term { exponents: m.iter().map(|(v, e)| (sp.name(v), e)).collect(), coeff: c })
        .collect()
}

impl ProblemDoc {
    pub fn from_chain(chain: &CompositionChain) -> Self {
        let stages = (1..=chain.n())
            .map(|i| StageDoc {
                f: chain.stage(i).components().iter().map(terms_of).collect(),
                constraints: chain
                    .stage_constraints(i)
                    .map(|c| ConstraintDoc { poly: terms_of(&c.poly), sense: c.sense })
                    .collect(),
            })
            .collect();
        Self {
            n: chain.n(),
            ranks: chain.ranks().to_vec(),
            local_widths: chain.local_widths().to_vec(),
            stages,
            box_radii: chain.box_radii().to_vec(),
            state_radii: chain.state_radii().map(<[f64]>::to_vec),
            objective_sense: chain.sense(),
        }
    }

    pub fn to_chain(&self) -> Result<CompositionChain, ProblemFileError> {
        let n = self.n;
        let check_len = |name: &str, len: usize| {
            if len != n {
                Err(field_err(name, format!("expected {n} entries, found {len}")))
            } else {
                Ok(())
            }
        };
        if n == 0 {
            return Err(field_err("n", "must be at least 1"));
        }
        check_len("ranks", self.ranks.len())?;
        check_len("local_widths", self.local_widths.len())?;
        check_len("stages", self.stages.len())?;
        check_len("box_radii", self.box_radii.len())?;
        if let Some(r) = &self.state_radii {
            check_len("state_radii", r.len())?;
        }
        // Guard against absurd sizes before allocating the variable space.
        let total: usize = self.ranks.iter().chain(&self.local_widths).fold(0usize, |a, &b| a.saturating_add(b));
        if total > 1 << 20 {
            return Err(field_err("ranks", "variable count too large"));
        }
        if let Some(i) = self.ranks.iter().position(|&r| r == 0) {
            return Err(field_err(format!("ranks[{i}]"), "must be positive"));
        }
        if let Some(i) = self.local_widths.iter().position(|&m| m == 0) {
            return Err(field_err(format!("local_widths[{i}]"), "must be positive"));
        }
        let mut parts = ChainParts::new(self.ranks.clone(), self.local_widths.clone());
        let sp = parts.space.clone();
        for (i, st) in self.stages.iter().enumerate() {
            if st.f.len() != self.ranks[i] {
                return Err(field_err(
                    format!("stages[{i}].F"),
                    format!("expected {} components, found {}", self.ranks[i], st.f.len()),
                ));
            }
            parts.stages[i] = st
                .f
                .iter()
                .enumerate()
                .map(|(l, terms)| parse_terms(&sp, terms, &format!("stages[{i}].F[{l}]")))
                .collect::<Result<_, _>>()?;
            for (c, doc) in st.constraints.iter().enumerate() {
                let poly = parse_terms(&sp, &doc.poly, &format!("stages[{i}].constraints[{c}].poly"))?;
                parts.constraints.push(StageConstraint { stage: i + 1, poly, sense: doc.sense });
            }
        }
        parts.box_radii = self.box_radii.clone();
        parts.state_radii = self.state_radii.clone();
        parts.sense = self.objective_sense;
        Ok(CompositionChain::new(parts)?)
    }
}

/// Parses a problem document from JSON text.
pub fn parse_problem(text: &str) -> Result<CompositionChain, ProblemFileError> {
    let doc: ProblemDoc = serde_json::from_str(text).map_err(|e| ProblemFileError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.to_chain()
}

pub fn read_problem(path: &std::path::Path) -> Result<CompositionChain, ProblemFileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ProblemFileError::Io { path: path.display().to_string(), source })?;
    parse_problem(&text)
}

pub fn write_problem(chain: &CompositionChain) -> String {
    serde_json::to_string_pretty(&ProblemDoc::from_chain(chain)).expect("problem documents serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARING: &str = r#"{
      "n": 2, "ranks": [1, 1], "local_widths": [1, 1],
      "stages": [
        {"F": [[{"exponents": {"x[1][1]": 1}, "coeff": 1.0}]]},
        {"F": [[{"exponents": {"s[1][1]": 2}, "coeff": 1.0},
                {"exponents": {"x[2][1]": 1}, "coeff": 1.0}]],
         "constraints": [{"poly": [{"exponents": {"x[2][1]": 1}, "coeff": 1.0}], "sense": "ge"}]}
      ],
      "box_radii": [1.0, 1.0],
      "objective_sense": "minimize"
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let c = parse_problem(SQUARING).unwrap();
        assert_eq!(c.eval(&[vec![0.5], vec![0.25]]).0, 0.5);
        let text = write_problem(&c);
        let c2 = parse_problem(&text).unwrap();
        assert_eq!(ProblemDoc::from_chain(&c), ProblemDoc::from_chain(&c2));
    }

    #[test]
    fn errors_name_the_field() {
        let bad = SQUARING.replace("s[1][1]", "s[7][1]");
        let err = parse_problem(&bad).unwrap_err().to_string();
        assert!(err.contains("stages[1].F[0][0].exponents"), "{err}");
        let bad = SQUARING.replace("\"ranks\": [1, 1]", "\"ranks\": [1]");
        assert!(parse_problem(&bad).unwrap_err().to_string().contains("ranks"));
        let err = parse_problem("{\"n\": ").unwrap_err().to_string();
        assert!(err.starts_with("line 1"), "{err}");
    }
}
