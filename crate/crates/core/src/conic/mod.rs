//! Solver-agnostic conic programs over free scalar variables.
//!
//! A program minimizes a linear form over `x ∈ R^m` subject to
//! - PSD blocks whose entries are affine forms in `x`,
//! - linear equalities `a·x + c = 0`,
//! - linear inequalities `a·x + c ≥ 0`.
//!
//! Moment relaxations use one scalar per moment; Hankel and localizing
//! structure is expressed by letting several block entries depend on the
//! same scalar.

mod sdpa;
mod solve;

pub use sdpa::{parse_sdpa, write_sdpa, SdpaError};
pub use solve::{estimated_memory, solve, Backend, SolveOptions, SolveResult, SolveStatus};

use std::collections::HashSet;

use crate::poly::Monomial;

/// Sparse affine form `constant + Σ coeff·x[var]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearForm {
    pub constant: f64,
    /// Sorted by variable, no repeated variables, no zero coefficients.
    pub terms: Vec<(usize, f64)>,
}

impl LinearForm {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn var(v: usize) -> Self {
        Self { constant: 0.0, terms: vec![(v, 1.0)] }
    }

    /// Merges repeated variables and drops zero coefficients.
    pub fn from_terms<I: IntoIterator<Item = (usize, f64)>>(constant: f64, terms: I) -> Self {
        let mut t: Vec<(usize, f64)> = terms.into_iter().collect();
        t.sort_by_key(|&(v, _)| v);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(t.len());
        for (v, c) in t {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        Self { constant, terms: out }
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(v, c)| acc + c * x[v])
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_terms(self.constant * s, self.terms.iter().map(|&(v, c)| (v, c * s)))
    }

    pub fn sub(&self, other: &LinearForm) -> Self {
        Self::from_terms(
            self.constant - other.constant,
            self.terms.iter().copied().chain(other.terms.iter().map(|&(v, c)| (v, -c))),
        )
    }

    fn key(&self) -> Vec<u64> {
        let mut k = Vec::with_capacity(1 + 2 * self.terms.len());
        k.push(self.constant.to_bits());
        for &(v, c) in &self.terms {
            k.push(v as u64);
            k.push(c.to_bits());
        }
        k
    }
}

/// What a PSD block represents.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockKind {
    /// Moment matrix of measure `measure`, rows labeled by `basis`.
    Moment { measure: usize, basis: Vec<Monomial> },
    /// Localizing matrix of measure `measure`.
    Localizing { measure: usize },
    /// Block without moment structure (e.g. imported from a file).
    Generic,
}

/// Symmetric block given by its upper triangle in column-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdBlock {
    pub dim: usize,
    /// Entry `(i, j)` with `i ≤ j` lives at `j(j+1)/2 + i`.
    pub entries: Vec<LinearForm>,
    pub label: String,
    pub kind: BlockKind,
}

/// Position of the canonical entry for `(i, j)` in either order.
pub fn triangle_index(i: usize, j: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    c * (c + 1) / 2 + r
}

impl PsdBlock {
    pub fn new(dim: usize, label: impl Into<String>, kind: BlockKind) -> Self {
        Self { dim, entries: vec![LinearForm::default(); dim * (dim + 1) / 2], label: label.into(), kind }
    }

    pub fn entry(&self, i: usize, j: usize) -> &LinearForm {
        &self.entries[triangle_index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, f: LinearForm) {
        self.entries[triangle_index(i, j)] = f;
    }

    /// Dense symmetric matrix at `x`.
    pub fn eval(&self, x: &[f64]) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            for i in 0..=j {
                let v = self.entry(i, j).eval(x);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

/// Named group of equality rows, used for reporting counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintGroup {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    pub num_vars: usize,
    /// Minimized.
    pub objective: LinearForm,
    pub blocks: Vec<PsdBlock>,
    /// Rows `a·x + c = 0`.
    pub equalities: Vec<LinearForm>,
    /// Rows `a·x + c ≥ 0`.
    pub inequalities: Vec<LinearForm>,
    pub groups: Vec<ConstraintGroup>,
    seen: HashSet<Vec<u64>>,
    dropped: usize,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    /// Adds `row = 0` unless it is trivially zero or an exact duplicate.
    /// Returns whether the row was kept.
    pub fn add_equality(&mut self, row: LinearForm, group: &str) -> bool {
        if row.is_zero() || !self.seen.insert(row.key()) {
            self.dropped += 1;
            return false;
        }
        self.equalities.push(row);
        match self.groups.last_mut() {
            Some(g) if g.label == group => g.count += 1,
            _ => match self.groups.iter_mut().find(|g| g.label == group) {
                Some(g) => g.count += 1,
                None => self.groups.push(ConstraintGroup { label: group.to_string(), count: 1 }),
            },
        }
        true
    }

    pub fn add_inequality(&mut self, row: LinearForm) {
        self.inequalities.push(row);
    }

    pub fn add_block(&mut self, block: PsdBlock) -> usize {
        self.blocks.push(block);
        self.blocks.len() - 1
    }

    pub fn group_count(&self, label: &str) -> usize {
        self.groups.iter().filter(|g| g.label == label).map(|g| g.count).sum()
    }

    /// Rows removed as duplicates or zeros.
    pub fn dropped_rows(&self) -> usize {
        self.dropped
    }

    pub fn max_block_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).max().unwrap_or(0)
    }

    /// Number of linear constraint rows (equalities and inequalities).
    pub fn num_constraints(&self) -> usize {
        self.equalities.len() + self.inequalities.len()
    }

    /// Largest violation of the linear rows at `x`.
    pub fn linear_residual(&self, x: &[f64]) -> f64 {
        let eq = self.equalities.iter().map(|r| r.eval(x).abs());
        let ineq = self.inequalities.iter().map(|r| (-r.eval(x)).max(0.0));
        eq.chain(ineq).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue over all blocks at `x`; `+∞` without blocks.
    pub fn min_block_eigenvalue(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.dim > 0)
            .map(|b| b.eval(x).symmetric_eigenvalues().min())
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks that every variable reference is in range.
    pub fn validate(&self) -> Result<(), String> {
        let bad = |f: &LinearForm| f.terms.iter().any(|&(v, _)| v >= self.num_vars);
        if bad(&self.objective) {
            return Err("objective references an unknown variable".into());
        }
        for (b, blk) in self.blocks.iter().enumerate() {
            if blk.entries.len() != blk.dim * (blk.dim + 1) / 2 {
                return Err(format!("block {b} has the wrong number of entries"));
            }
            if blk.entries.iter().any(bad) {
                return Err(format!("block {b} references an unknown variable"));
            }
        }
        if self.equalities.iter().chain(&self.inequalities).any(bad) {
            return Err("constraint row references an unknown variable".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_entries_share_storage() {
        let mut b = PsdBlock::new(4, "b", BlockKind::Generic);
        for i in 0..4 {
            for j in 0..4 {
                b.set(i, j, LinearForm::var(10 * i.min(j) + i.max(j)));
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(b.entry(i, j), b.entry(j, i));
            }
        }
        assert_eq!(triangle_index(1, 2), 4);
        assert_eq!(triangle_index(2, 1), 4);
    }

    #[test]
    fn duplicate_rows_are_dropped() {
        let mut p = ConicProgram::new();
        let x = p.add_var();
        assert!(p.add_equality(LinearForm::from_terms(1.0, [(x, 2.0)]), "g"));
        assert!(!p.add_equality(LinearForm::from_terms(1.0, [(x, 2.0)]), "g"));
        assert!(!p.add_equality(LinearForm::from_terms(0.0, [(x, 0.0)]), "g"));
        assert_eq!(p.group_count("g"), 1);
        assert_eq!(p.dropped_rows(), 2);
    }

    #[test]
    fn forms_merge_terms() {
        let f = LinearForm::from_terms(0.0, [(2, 1.0), (1, 1.0), (2, -1.0)]);
        assert_eq!(f.terms, vec![(1, 1.0)]);
    }
}
