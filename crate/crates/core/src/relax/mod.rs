//! Moment relaxations: shared measure layout plus the dense, chordal and
//! push-forward assemblers.

mod chord;
mod dense;
mod push;

pub use chord::{assemble_chord, predicted_chord_counts, ChordOptions};
pub use dense::assemble_dense;
pub use push::{assemble_push, predicted_push_counts, pushforward_alphas};

use std::collections::HashMap;

use thiserror::Error;

use crate::conic::{BlockKind, ConicProgram, LinearForm, PsdBlock, SolveResult};
use crate::poly::{monomials_up_to, Monomial, Polynomial, VarId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelaxError {
    #[error("relaxation order {order} is too small for {what} of degree {degree}")]
    OrderTooSmall { order: u32, what: String, degree: u32 },
    #[error("{0} is not supported on the measure's variables")]
    Support(String),
}

/// Relaxation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hierarchy {
    Dense,
    Chord,
    Push,
}

impl Hierarchy {
    pub fn as_str(self) -> &'static str {
        match self {
            Hierarchy::Dense => "dense",
            Hierarchy::Chord => "chord",
            Hierarchy::Push => "push",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dense" => Some(Hierarchy::Dense),
            "chord" => Some(Hierarchy::Chord),
            "push" => Some(Hierarchy::Push),
            _ => None,
        }
    }
}

impl std::fmt::Display for Hierarchy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Truncated moment sequence of one measure: scalar ids for every monomial
/// of degree ≤ 2k over `vars`.
#[derive(Debug, Clone)]
pub struct MeasureLayout {
    pub vars: Vec<VarId>,
    pub order: u32,
    /// Rows of the moment matrix (degree ≤ k).
    pub basis: Vec<Monomial>,
    ids: HashMap<Monomial, usize>,
    /// Block index of the moment matrix in the program.
    pub moment_block: usize,
}

impl MeasureLayout {
    /// Allocates moment scalars. Monomials already present in `shared` reuse
    /// that id; new ids are recorded there.
    pub fn new(program: &mut ConicProgram, vars: &[VarId], order: u32, shared: Option<&mut HashMap<Monomial, usize>>) -> Self {
        let mut vars = vars.to_vec();
        vars.sort_unstable();
        vars.dedup();
        let all = monomials_up_to(&vars, 2 * order);
        let mut ids = HashMap::with_capacity(all.len());
        match shared {
            Some(shared) => {
                for m in all {
                    let id = *shared.entry(m.clone()).or_insert_with(|| program.add_var());
                    ids.insert(m, id);
                }
            }
            None => {
                for m in all {
                    ids.insert(m, program.add_var());
                }
            }
        }
        let basis = monomials_up_to(&vars, order);
        Self { vars, order, basis, ids, moment_block: usize::MAX }
    }

    pub fn id(&self, m: &Monomial) -> Option<usize> {
        self.ids.get(m).copied()
    }

    pub fn num_moments(&self) -> usize {
        self.ids.len()
    }

    /// All `(monomial, id)` pairs in graded-lex order.
    pub fn moments(&self) -> Vec<(Monomial, usize)> {
        let mut v: Vec<(Monomial, usize)> = self.ids.iter().map(|(m, &i)| (m.clone(), i)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    /// `L_y(p)` as a linear form in the moment scalars.
    pub fn riesz(&self, p: &Polynomial) -> Result<LinearForm, RelaxError> {
        let mut terms = Vec::with_capacity(p.num_terms());
        for (m, c) in p.terms() {
            let id = self.id(m).ok_or_else(|| RelaxError::Support(format!("monomial {m:?}")))?;
            terms.push((id, c));
        }
        Ok(LinearForm::from_terms(0.0, terms))
    }

    /// `M_k(y)`.
    pub fn moment_matrix(&self, measure: usize, label: String) -> PsdBlock {
        let mut b = PsdBlock::new(self.basis.len(), label, BlockKind::Moment { measure, basis: self.basis.clone() });
        for (j, bj) in self.basis.iter().enumerate() {
            for (i, bi) in self.basis.iter().enumerate().take(j + 1) {
                b.set(i, j, LinearForm::var(self.ids[&bi.mul(bj)]));
            }
        }
        b
    }

    /// Adds the localizing constraint for `g ≥ 0` at order `k − ⌈deg g / 2⌉`.
    /// A zero-order localizer becomes a scalar inequality.
    pub fn add_localizer(&self, program: &mut ConicProgram, g: &Polynomial, measure: usize, label: String) -> Result<(), RelaxError> {
        let d = g.degree().div_ceil(2);
        if d > self.order {
            return Err(RelaxError::OrderTooSmall { order: self.order, what: label, degree: g.degree() });
        }
        let basis = monomials_up_to(&self.vars, self.order - d);
        if basis.len() == 1 {
            program.add_inequality(self.riesz(g)?);
            return Ok(());
        }
        let mut b = PsdBlock::new(basis.len(), label, BlockKind::Localizing { measure });
        for (j, bj) in basis.iter().enumerate() {
            for (i, bi) in basis.iter().enumerate().take(j + 1) {
                b.set(i, j, self.riesz(&g.mul_monomial(&bi.mul(bj), 1.0))?);
            }
        }
        program.add_block(b);
        Ok(())
    }

    /// Rows `L_y(q·h) = 0` for every monomial `q` with `deg(q·h) ≤ 2k`.
    pub fn add_ideal(&self, program: &mut ConicProgram, h: &Polynomial, group: &str, what: &str) -> Result<(), RelaxError> {
        let dh = h.degree();
        if dh > 2 * self.order {
            return Err(RelaxError::OrderTooSmall { order: self.order, what: what.to_string(), degree: dh });
        }
        for q in monomials_up_to(&self.vars, 2 * self.order - dh) {
            let row = self.riesz(&h.mul_monomial(&q, 1.0))?;
            program.add_equality(row, group);
        }
        Ok(())
    }

    /// `y_0 = 1`.
    pub fn add_normalization(&self, program: &mut ConicProgram) {
        let id = self.ids[&Monomial::one()];
        program.add_equality(LinearForm::from_terms(-1.0, [(id, 1.0)]), "normalization");
    }

    /// First-order moments `(var, L(var))` from a solution vector.
    pub fn first_moments(&self, x: &[f64]) -> Vec<(VarId, f64)> {
        self.vars.iter().map(|&v| (v, x[self.ids[&Monomial::var(v)]])).collect()
    }

    /// Writes the Dirac moments of `point` (indexed by variable id) into `x`.
    pub fn write_dirac(&self, point: &[f64], x: &mut [f64]) {
        for (m, &id) in &self.ids {
            x[id] = m.evaluate(point).expect("point covers the layout");
        }
    }
}

/// Assembled relaxation plus the data needed to read its solution.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub program: ConicProgram,
    pub measures: Vec<MeasureLayout>,
    /// Reported bound = `sign ·` program optimum.
    pub sign: f64,
    pub hierarchy: Hierarchy,
    pub order: u32,
}

impl Relaxation {
    /// Bound in the sense of the original problem.
    pub fn bound(&self, res: &SolveResult) -> f64 {
        self.sign * res.objective
    }

    /// Moment vector of the Dirac measure at a full point over `(x, s)`.
    pub fn dirac_vector(&self, point: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.program.num_vars];
        for m in &self.measures {
            m.write_dirac(point, &mut x);
        }
        x
    }

    pub fn max_block_dim(&self) -> usize {
        self.program.max_block_dim()
    }
}
