//! Composition chains `s_i = F_i(s_{i-1}, x_i)`, tensor-train cores, lifting
//! to a flat polynomial problem, and the dense-expansion oracle.

use std::collections::HashMap;
use std::sync::Arc;

use log::warn;
use thiserror::Error;

use crate::poly::{Interval, Monomial, PolyError, Polynomial, VarId, VarKind, VariableSpace};

/// Default cap on the number of terms produced by [`CompositionChain::expand_dense`].
pub const DEFAULT_TERM_CAP: usize = 1_000_000;

/// Inflation factor applied to derived state radii.
pub const STATE_BOUND_INFLATION: f64 = 1.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("invalid chain: {0}")]
    Invalid(String),
    #[error("tensor-train shape mismatch: {0}")]
    Shape(String),
    #[error("dense expansion exceeds the term cap ({terms} > {cap})")]
    TermCap { terms: usize, cap: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// Multiplier that turns the problem into a minimization.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ConstraintSense {
    /// `g ≥ 0`
    #[serde(rename = "ge")]
    NonNegative,
    /// `g = 0`
    #[serde(rename = "eq")]
    Zero,
}

/// Components `F_{i,1..r_i}` of one stage.
#[derive(Debug, Clone)]
pub struct StageMap {
    pub stage: usize,
    components: Vec<Polynomial>,
    degrees: Vec<u32>,
}

impl StageMap {
    pub fn new(stage: usize, components: Vec<Polynomial>) -> Self {
        let degrees = components.iter().map(Polynomial::degree).collect();
        Self { stage, components, degrees }
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn degree(&self) -> u32 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }
}

/// Constraint attached to stage `i`, supported on `(s_{i-1}, x_i)`.
#[derive(Debug, Clone)]
pub struct StageConstraint {
    pub stage: usize,
    pub poly: Polynomial,
    pub sense: ConstraintSense,
}

/// Plain data used to build a [`CompositionChain`]. Indices are 0-based
/// vectors over stages `1..=n`.
#[derive(Debug, Clone)]
pub struct ChainParts {
    pub space: Arc<VariableSpace>,
    pub ranks: Vec<usize>,
    pub local_widths: Vec<usize>,
    pub stages: Vec<Vec<Polynomial>>,
    pub constraints: Vec<StageConstraint>,
    pub box_radii: Vec<f64>,
    pub state_radii: Option<Vec<f64>>,
    pub sense: Sense,
}

impl ChainParts {
    /// Empty parts for the given shape, with unit boxes and minimization.
    pub fn new(ranks: Vec<usize>, local_widths: Vec<usize>) -> Self {
        let space = Arc::new(VariableSpace::for_chain(&local_widths, &ranks));
        let n = ranks.len();
        Self {
            space,
            ranks,
            local_widths,
            stages: vec![Vec::new(); n],
            constraints: Vec::new(),
            box_radii: vec![1.0; n],
            state_radii: None,
            sense: Sense::Minimize,
        }
    }

    pub fn x(&self, stage: usize, j: usize) -> Polynomial {
        Polynomial::var(&self.space, self.space.local_id(stage, j).expect("local variable exists"))
    }

    pub fn s(&self, stage: usize, l: usize) -> Polynomial {
        Polynomial::var(&self.space, self.space.state_id(stage, l).expect("state variable exists"))
    }
}

/// Validated chain `s_1 = F_1(x_1)`, `s_i = F_i(s_{i-1}, x_i)`, `p = s_{n,1}`.
#[derive(Debug, Clone)]
pub struct CompositionChain {
    space: Arc<VariableSpace>,
    ranks: Vec<usize>,
    local_widths: Vec<usize>,
    stages: Vec<StageMap>,
    constraints: Vec<StageConstraint>,
    box_radii: Vec<f64>,
    state_radii: Option<Vec<f64>>,
    sense: Sense,
}

impl CompositionChain {
    pub fn new(parts: ChainParts) -> Result<Self, ChainError> {
        let ChainParts { space, ranks, local_widths, stages, constraints, box_radii, state_radii, sense } = parts;
        let n = ranks.len();
        let bad = |m: String| Err(ChainError::Invalid(m));
        if n == 0 {
            return bad("chain needs at least one stage".into());
        }
        if local_widths.len() != n || stages.len() != n || box_radii.len() != n {
            return bad(format!(
                "expected {n} entries in local_widths, stages and box_radii, got {}, {}, {}",
                local_widths.len(),
                stages.len(),
                box_radii.len()
            ));
        }
        if ranks[n - 1] != 1 {
            return bad(format!("final rank must be 1, got {}", ranks[n - 1]));
        }
        if let Some(i) = ranks.iter().position(|&r| r == 0) {
            return bad(format!("ranks[{i}] must be positive"));
        }
        if let Some(i) = local_widths.iter().position(|&m| m == 0) {
            return bad(format!("local_widths[{i}] must be positive"));
        }
        if let Some(i) = box_radii.iter().position(|&m| !(m > 0.0 && m.is_finite())) {
            return bad(format!("box_radii[{i}] must be positive and finite"));
        }
        if let Some(r) = &state_radii {
            if r.len() != n {
                return bad(format!("expected {n} state_radii, got {}", r.len()));
            }
            if let Some(i) = r.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
                return bad(format!("state_radii[{i}] must be positive and finite"));
            }
        }
        if *space != VariableSpace::for_chain(&local_widths, &ranks) {
            return bad("variable space does not match ranks and local widths".into());
        }
        let mut maps = Vec::with_capacity(n);
        for (i, comps) in stages.into_iter().enumerate() {
            let stage = i + 1;
            if comps.len() != ranks[i] {
                return bad(format!("stage {stage} has {} components, rank is {}", comps.len(), ranks[i]));
            }
            for (l, f) in comps.iter().enumerate() {
                if !Arc::ptr_eq(f.space(), &space) && **f.space() != *space {
                    return Err(PolyError::SpaceMismatch.into());
                }
                if let Some(v) = f.support().into_iter().find(|&v| !stage_input(&space, stage, v)) {
                    return bad(format!("stage {stage} component {} references {}", l + 1, space.name(v)));
                }
            }
            maps.push(StageMap::new(stage, comps));
        }
        for c in &constraints {
            if c.stage == 0 || c.stage > n {
                return bad(format!("constraint attached to stage {} outside 1..={n}", c.stage));
            }
            if let Some(v) = c.poly.support().into_iter().find(|&v| !stage_input(&space, c.stage, v)) {
                return bad(format!("stage {} constraint references {}", c.stage, space.name(v)));
            }
        }
        Ok(Self { space, ranks, local_widths, stages: maps, constraints, box_radii, state_radii, sense })
    }

    pub fn into_parts(self) -> ChainParts {
        ChainParts {
            space: self.space,
            ranks: self.ranks,
            local_widths: self.local_widths,
            stages: self.stages.into_iter().map(|s| s.components).collect(),
            constraints: self.constraints,
            box_radii: self.box_radii,
            state_radii: self.state_radii,
            sense: self.sense,
        }
    }

    pub fn n(&self) -> usize {
        self.ranks.len()
    }

    pub fn space(&self) -> &Arc<VariableSpace> {
        &self.space
    }

    /// `r_1..r_n`; `r_0 = 1` is implicit.
    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// `r_{i}` with `r_0 = 0` meaning "no incoming state" for stage 1.
    pub fn incoming_rank(&self, stage: usize) -> usize {
        if stage == 1 { 0 } else { self.ranks[stage - 2] }
    }

    pub fn local_widths(&self) -> &[usize] {
        &self.local_widths
    }

    pub fn stage(&self, stage: usize) -> &StageMap {
        &self.stages[stage - 1]
    }

    pub fn stages(&self) -> &[StageMap] {
        &self.stages
    }

    pub fn constraints(&self) -> &[StageConstraint] {
        &self.constraints
    }

    pub fn stage_constraints(&self, stage: usize) -> impl Iterator<Item = &StageConstraint> {
        self.constraints.iter().filter(move |c| c.stage == stage)
    }

    pub fn box_radii(&self) -> &[f64] {
        &self.box_radii
    }

    pub fn state_radii(&self) -> Option<&[f64]> {
        self.state_radii.as_deref()
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn local_ids(&self, stage: usize) -> Vec<VarId> {
        (1..=self.local_widths[stage - 1]).map(|j| self.space.local_id(stage, j).unwrap()).collect()
    }

    pub fn state_ids(&self, stage: usize) -> Vec<VarId> {
        if stage == 0 {
            return Vec::new();
        }
        (1..=self.ranks[stage - 1]).map(|l| self.space.state_id(stage, l).unwrap()).collect()
    }

    /// Variables `(s_{i-1}, x_i)` of stage `i`, sorted by id.
    pub fn stage_inputs(&self, stage: usize) -> Vec<VarId> {
        let mut v = self.state_ids(stage - 1);
        v.extend(self.local_ids(stage));
        v
    }

    /// Degree of the final scalar output as a polynomial in the inputs.
    pub fn max_map_degree(&self) -> u32 {
        self.stages.iter().map(StageMap::degree).max().unwrap_or(0)
    }

    /// Writes local values into a dense point vector over the space.
    pub fn point_from_locals(&self, x: &[Vec<f64>]) -> Vec<f64> {
        let mut point = vec![0.0; self.space.len()];
        for (i, xi) in x.iter().enumerate() {
            for (j, &v) in xi.iter().enumerate() {
                point[self.space.local_id(i + 1, j + 1).unwrap()] = v;
            }
        }
        point
    }

    /// Evaluates the chain. Returns `s_{n,1}` and the trajectory `s_1..s_n`.
    ///
    /// `x[i]` holds the local values of stage `i+1`. Points outside the boxes
    /// are evaluated anyway, with a warning.
    pub fn eval(&self, x: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
        assert_eq!(x.len(), self.n(), "one local vector per stage");
        for (i, xi) in x.iter().enumerate() {
            assert_eq!(xi.len(), self.local_widths[i], "local width of stage {}", i + 1);
            if xi.iter().any(|v| v.abs() > self.box_radii[i] * (1.0 + 1e-12)) {
                warn!("stage {} local values {:?} lie outside the box", i + 1, xi);
            }
        }
        let mut point = self.point_from_locals(x);
        let mut traj = Vec::with_capacity(self.n());
        for (i, map) in self.stages.iter().enumerate() {
            let s: Vec<f64> = map
                .components
                .iter()
                .map(|f| f.evaluate(&point).expect("point covers the space"))
                .collect();
            for (l, &v) in s.iter().enumerate() {
                point[self.space.state_id(i + 1, l + 1).unwrap()] = v;
            }
            traj.push(s);
        }
        (traj[self.n() - 1][0], traj)
    }

    /// Applies stage `i`'s map to an explicit previous state and local vector.
    pub fn step(&self, stage: usize, prev: &[f64], x: &[f64]) -> Vec<f64> {
        let mut point = vec![0.0; self.space.len()];
        for (a, &v) in prev.iter().enumerate() {
            point[self.space.state_id(stage - 1, a + 1).unwrap()] = v;
        }
        for (j, &v) in x.iter().enumerate() {
            point[self.space.local_id(stage, j + 1).unwrap()] = v;
        }
        self.stages[stage - 1]
            .components
            .iter()
            .map(|f| f.evaluate(&point).expect("point covers the space"))
            .collect()
    }

    /// Composes the chain into one polynomial in the local variables.
    pub fn expand_dense(&self, cap: usize) -> Result<Polynomial, ChainError> {
        let mut prev: Vec<Polynomial> = Vec::new();
        for (i, map) in self.stages.iter().enumerate() {
            let stage = i + 1;
            let bindings: HashMap<VarId, Polynomial> = prev
                .iter()
                .enumerate()
                .map(|(a, p)| (self.space.state_id(stage - 1, a + 1).unwrap(), p.clone()))
                .collect();
            let mut next = Vec::with_capacity(map.components.len());
            for f in &map.components {
                let p = f.substitute(&bindings)?;
                if p.num_terms() > cap {
                    return Err(ChainError::TermCap { terms: p.num_terms(), cap });
                }
                next.push(p);
            }
            prev = next;
        }
        Ok(prev.swap_remove(0))
    }

    /// Ball radii `R_1..R_n` for the states. User-provided radii win; the
    /// rest come from interval propagation with 1% inflation.
    pub fn derive_state_bounds(&self) -> Vec<f64> {
        let mut boxes = vec![Interval::point(0.0); self.space.len()];
        for (i, &m) in self.box_radii.iter().enumerate() {
            for id in self.local_ids(i + 1) {
                boxes[id] = Interval::symmetric(m);
            }
        }
        let mut radii = Vec::with_capacity(self.n());
        for (i, map) in self.stages.iter().enumerate() {
            let stage = i + 1;
            let comps: Vec<Interval> = map
                .components
                .iter()
                .map(|f| f.evaluate_interval(&boxes).expect("boxes cover the space"))
                .collect();
            let user = self.state_radii.as_ref().map(|r| r[i]);
            let r = user.unwrap_or_else(|| {
                STATE_BOUND_INFLATION * comps.iter().map(|c| c.magnitude().powi(2)).sum::<f64>().sqrt()
            });
            for (l, c) in comps.iter().enumerate() {
                let id = self.space.state_id(stage, l + 1).unwrap();
                boxes[id] = if user.is_some() { Interval::symmetric(r) } else { *c };
            }
            radii.push(r);
        }
        radii
    }

    /// Flat problem over `(x, s)` with lifting equalities and redundant balls.
    pub fn lift(&self) -> LiftedPOP {
        let sp = &self.space;
        let radii = self.derive_state_bounds();
        let mut cons = Vec::new();
        for (i, map) in self.stages.iter().enumerate() {
            let stage = i + 1;
            for (l, f) in map.components.iter().enumerate() {
                let s = Polynomial::var(sp, sp.state_id(stage, l + 1).unwrap());
                cons.push(LiftedConstraint {
                    poly: s.sub(f).expect("same space"),
                    kind: ConstraintSense::Zero,
                    origin: Origin::Lifting { component: l + 1 },
                    stage,
                });
            }
            for c in self.stage_constraints(stage) {
                cons.push(LiftedConstraint { poly: c.poly.clone(), kind: c.sense, origin: Origin::Stage, stage });
            }
            let m = self.box_radii[i];
            let locals = self.local_ids(stage);
            cons.push(LiftedConstraint {
                poly: ball(sp, &locals, m * m * locals.len() as f64),
                kind: ConstraintSense::NonNegative,
                origin: Origin::LocalBall,
                stage,
            });
            if locals.len() > 1 {
                for (j, &id) in locals.iter().enumerate() {
                    cons.push(LiftedConstraint {
                        poly: ball(sp, &[id], m * m),
                        kind: ConstraintSense::NonNegative,
                        origin: Origin::LocalBox { component: j + 1 },
                        stage,
                    });
                }
            }
            let states = self.state_ids(stage);
            cons.push(LiftedConstraint {
                poly: ball(sp, &states, radii[i] * radii[i]),
                kind: ConstraintSense::NonNegative,
                origin: Origin::StateBall,
                stage,
            });
        }
        let out = sp.state_id(self.n(), 1).unwrap();
        LiftedPOP {
            space: sp.clone(),
            objective: Polynomial::var(sp, out).scale(self.sense.sign()),
            sign: self.sense.sign(),
            constraints: cons,
            state_radii: radii,
        }
    }
}

/// `r² − Σ v²` over the given variables.
pub fn ball(space: &Arc<VariableSpace>, vars: &[VarId], r2: f64) -> Polynomial {
    Polynomial::from_terms(
        space,
        std::iter::once((Monomial::one(), r2)).chain(vars.iter().map(|&v| (Monomial::var_pow(v, 2), -1.0))),
    )
}

fn stage_input(space: &VariableSpace, stage: usize, v: VarId) -> bool {
    let info = space.info(v);
    match info.kind {
        VarKind::Local => info.stage == stage,
        VarKind::State => info.stage + 1 == stage,
    }
}

/// Where a lifted constraint came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    /// `s_{i,l} − F_{i,l}`
    Lifting { component: usize },
    /// User stage constraint.
    Stage,
    /// `M_i² m_i − ‖x_i‖²`
    LocalBall,
    /// `M_i² − x_{i,j}²`, only for vector-valued locals.
    LocalBox { component: usize },
    /// `R_i² − ‖s_i‖²`
    StateBall,
}

#[derive(Debug, Clone)]
pub struct LiftedConstraint {
    pub poly: Polynomial,
    pub kind: ConstraintSense,
    pub origin: Origin,
    pub stage: usize,
}

/// Flat problem `min sign·s_{n,1}` subject to the lifted constraints.
#[derive(Debug, Clone)]
pub struct LiftedPOP {
    pub space: Arc<VariableSpace>,
    /// Objective in minimization form (already multiplied by `sign`).
    pub objective: Polynomial,
    /// `+1` for minimization, `−1` for maximization.
    pub sign: f64,
    pub constraints: Vec<LiftedConstraint>,
    pub state_radii: Vec<f64>,
}

impl LiftedPOP {
    pub fn equalities(&self) -> impl Iterator<Item = &LiftedConstraint> {
        self.constraints.iter().filter(|c| c.kind == ConstraintSense::Zero)
    }

    pub fn inequalities(&self) -> impl Iterator<Item = &LiftedConstraint> {
        self.constraints.iter().filter(|c| c.kind == ConstraintSense::NonNegative)
    }

    pub fn lifting_count(&self) -> usize {
        self.constraints.iter().filter(|c| matches!(c.origin, Origin::Lifting { .. })).count()
    }
}

/// Tensor-train cores with monomial entries: `cores[i][a][l][k]` is the
/// coefficient of `x_{i+1}^k` in entry `(a, l)` of `P_{i+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TTCores {
    pub cores: Vec<Vec<Vec<Vec<f64>>>>,
}

impl TTCores {
    pub fn new(cores: Vec<Vec<Vec<Vec<f64>>>>) -> Result<Self, ChainError> {
        if cores.is_empty() {
            return Err(ChainError::Shape("no cores".into()));
        }
        let mut prev_cols = 1;
        for (i, c) in cores.iter().enumerate() {
            if c.len() != prev_cols {
                return Err(ChainError::Shape(format!("core {} has {} rows, expected {prev_cols}", i + 1, c.len())));
            }
            let cols = c[0].len();
            if cols == 0 || c.iter().any(|row| row.len() != cols) {
                return Err(ChainError::Shape(format!("core {} has ragged or empty rows", i + 1)));
            }
            prev_cols = cols;
        }
        if prev_cols != 1 {
            return Err(ChainError::Shape(format!("last core has {prev_cols} columns, expected 1")));
        }
        Ok(Self { cores })
    }

    pub fn n(&self) -> usize {
        self.cores.len()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c[0].len()).collect()
    }

    /// Entry `(a, l)` of core `i` (1-based stage) at `x`.
    pub fn entry(&self, stage: usize, a: usize, l: usize, x: f64) -> f64 {
        self.cores[stage - 1][a][l].iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// `∏ P_i(x_i)` evaluated directly as a matrix product.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut row = vec![1.0];
        for (i, &xi) in x.iter().enumerate() {
            let r = self.cores[i][0].len();
            row = (0..r)
                .map(|l| row.iter().enumerate().map(|(a, &v)| v * self.entry(i + 1, a, l, xi)).sum())
                .collect();
        }
        row[0]
    }
}

/// Chain with `F_{i,l} = Σ_a s_{i−1,a} P_i[a][l](x_i)`, unit boxes, minimization.
pub fn chain_from_tt(tt: &TTCores) -> Result<CompositionChain, ChainError> {
    let ranks = tt.ranks();
    let parts = ChainParts::new(ranks.clone(), vec![1; tt.n()]);
    let sp = parts.space.clone();
    let mut stages = Vec::with_capacity(tt.n());
    for (i, core) in tt.cores.iter().enumerate() {
        let stage = i + 1;
        let x = sp.local_id(stage, 1).unwrap();
        let mut comps = Vec::with_capacity(ranks[i]);
        for l in 0..ranks[i] {
            let mut f = Polynomial::zero(&sp);
            for (a, row) in core.iter().enumerate() {
                let prev = (stage > 1).then(|| Monomial::var(sp.state_id(stage - 1, a + 1).unwrap()));
                for (k, &c) in row[l].iter().enumerate() {
                    let m = Monomial::var_pow(x, k as u32);
                    let m = match &prev {
                        Some(p) => m.mul(p),
                        None => m,
                    };
                    f.add_term(m, c);
                }
            }
            comps.push(f);
        }
        stages.push(comps);
    }
    CompositionChain::new(ChainParts { stages, ..parts })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `s_1 = x_1`, `s_i = s_{i-1}² + x_i`.
    fn squaring_chain(n: usize) -> CompositionChain {
        let mut p = ChainParts::new(vec![1; n], vec![1; n]);
        p.stages[0] = vec![p.x(1, 1)];
        for i in 2..=n {
            p.stages[i - 1] = vec![p.s(i - 1, 1).pow(2).add(&p.x(i, 1)).unwrap()];
        }
        CompositionChain::new(p).unwrap()
    }

    #[test]
    fn squaring_chain_expands() {
        let c = squaring_chain(3);
        let p = c.expand_dense(DEFAULT_TERM_CAP).unwrap();
        let sp = c.space();
        let x = |i| Polynomial::var(sp, sp.local_id(i, 1).unwrap());
        let expected = x(1)
            .pow(4)
            .add(&x(1).pow(2).mul(&x(2)).unwrap().scale(2.0))
            .unwrap()
            .add(&x(2).pow(2))
            .unwrap()
            .add(&x(3))
            .unwrap();
        assert_eq!(p, expected);
    }

    #[test]
    fn term_cap_is_enforced() {
        let c = squaring_chain(4);
        assert!(matches!(c.expand_dense(3), Err(ChainError::TermCap { .. })));
    }

    #[test]
    fn tt_two_stage_product() {
        let tt = TTCores::new(vec![vec![vec![vec![1.0], vec![0.0, 1.0]]], vec![vec![vec![1.0]], vec![vec![0.0, 1.0]]]])
            .unwrap();
        let c = chain_from_tt(&tt).unwrap();
        let p = c.expand_dense(DEFAULT_TERM_CAP).unwrap();
        let sp = c.space();
        let x1 = sp.local_id(1, 1).unwrap();
        let x2 = sp.local_id(2, 1).unwrap();
        let expected = Polynomial::from_terms(sp, [(Monomial::one(), 1.0), (Monomial::from_pairs([(x1, 1), (x2, 1)]), 1.0)]);
        assert_eq!(p, expected);
    }

    #[test]
    fn tt_shape_errors() {
        assert!(TTCores::new(vec![vec![vec![vec![1.0]], vec![vec![1.0]]]]).is_err());
        assert!(TTCores::new(vec![vec![vec![vec![1.0], vec![1.0]]]]).is_err());
    }

    #[test]
    fn single_stage_tt() {
        let tt = TTCores::new(vec![vec![vec![vec![1.0, -2.0, 3.0]]]]).unwrap();
        let c = chain_from_tt(&tt).unwrap();
        assert_eq!(c.eval(&[vec![0.5]]).0, 1.0 - 1.0 + 0.75);
        let pop = c.lift();
        assert_eq!(pop.lifting_count(), 1);
    }

    #[test]
    fn identity_bounds_inflate() {
        let mut p = ChainParts::new(vec![1, 1], vec![1, 1]);
        p.stages[0] = vec![p.x(1, 1)];
        p.stages[1] = vec![p.s(1, 1)];
        p.state_radii = None;
        let c = CompositionChain::new(p).unwrap();
        let r = c.derive_state_bounds();
        assert!((r[0] - 1.01).abs() < 1e-12);
        assert!((r[1] - 1.01).abs() < 1e-12);
    }

    #[test]
    fn squaring_bounds() {
        let c = squaring_chain(2);
        let r = c.derive_state_bounds();
        assert!((r[1] - 2.0 * 1.01).abs() < 1e-12);
    }

    #[test]
    fn user_radii_override() {
        let mut p = squaring_chain(2).into_parts();
        p.state_radii = Some(vec![1.0, 1.0]);
        let c = CompositionChain::new(p).unwrap();
        assert_eq!(c.derive_state_bounds(), vec![1.0, 1.0]);
    }

    #[test]
    fn lift_shapes() {
        let c = squaring_chain(3);
        let pop = c.lift();
        assert_eq!(pop.lifting_count(), 3);
        assert_eq!(pop.objective.support(), vec![c.space().state_id(3, 1).unwrap()]);
    }

    #[test]
    fn validation_rejects_bad_support() {
        let mut p = ChainParts::new(vec![1, 1], vec![1, 1]);
        p.stages[0] = vec![p.x(2, 1)];
        p.stages[1] = vec![p.s(1, 1)];
        assert!(CompositionChain::new(p).is_err());
        let mut p = ChainParts::new(vec![2, 2], vec![1, 1]);
        p.stages[0] = vec![p.x(1, 1), p.x(1, 1)];
        p.stages[1] = vec![p.s(1, 1), p.s(1, 2)];
        assert!(CompositionChain::new(p).is_err());
    }
}
