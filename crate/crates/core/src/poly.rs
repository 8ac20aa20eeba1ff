//! Sparse multivariate polynomials over a declared variable space.
//!
//! Every polynomial carries a shared [`VariableSpace`]; arithmetic between
//! polynomials over different spaces is rejected. Monomials are ordered
//! graded-lexicographically over the variable ids, which fixes the row and
//! column order of every moment matrix built from them.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;
use thiserror::Error;

/// Dense integer id of a variable inside a [`VariableSpace`].
pub type VarId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("polynomials live in different variable spaces")]
    SpaceMismatch,
    #[error("variable {0} has no value")]
    UnboundVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

/// Role of a variable in a composition chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    /// Local decision variable `x[i][j]`.
    Local,
    /// Lifted state variable `s[i][l]`.
    State,
}

/// Descriptor of one variable. Stage and component indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarInfo {
    pub stage: usize,
    pub kind: VarKind,
    pub component: usize,
}

impl VarInfo {
    pub fn name(&self) -> String {
        match self.kind {
            VarKind::Local => format!("x[{}][{}]", self.stage, self.component),
            VarKind::State => format!("s[{}][{}]", self.stage, self.component),
        }
    }
}

/// Ordered list of variables. Ids are the positions in the list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSpace {
    vars: Vec<VarInfo>,
    lookup: HashMap<(usize, VarKind, usize), VarId>,
}

impl VariableSpace {
    /// Space of a chain: stage-major, locals of stage `i` then states of stage `i`.
    ///
    /// `local_widths[i-1]` is `m_i`, `ranks[i-1]` is `r_i`.
    pub fn for_chain(local_widths: &[usize], ranks: &[usize]) -> Self {
        let mut vars = Vec::new();
        for (i, (&m, &r)) in local_widths.iter().zip(ranks).enumerate() {
            let stage = i + 1;
            for j in 1..=m {
                vars.push(VarInfo { stage, kind: VarKind::Local, component: j });
            }
            for l in 1..=r {
                vars.push(VarInfo { stage, kind: VarKind::State, component: l });
            }
        }
        Self::from_vars(vars).expect("chain variables are unique")
    }

    /// `n` scalar local variables `x[1][1] .. x[n][1]`.
    pub fn locals(n: usize) -> Self {
        let vars = (1..=n)
            .map(|stage| VarInfo { stage, kind: VarKind::Local, component: 1 })
            .collect();
        Self::from_vars(vars).expect("locals are unique")
    }

    /// Builds a space from descriptors; duplicated triples are rejected.
    pub fn from_vars(vars: Vec<VarInfo>) -> Option<Self> {
        let mut lookup = HashMap::with_capacity(vars.len());
        for (id, v) in vars.iter().enumerate() {
            if lookup.insert((v.stage, v.kind, v.component), id).is_some() {
                return None;
            }
        }
        Some(Self { vars, lookup })
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn info(&self, id: VarId) -> VarInfo {
        self.vars[id]
    }

    pub fn vars(&self) -> &[VarInfo] {
        &self.vars
    }

    pub fn id(&self, stage: usize, kind: VarKind, component: usize) -> Option<VarId> {
        self.lookup.get(&(stage, kind, component)).copied()
    }

    pub fn local_id(&self, stage: usize, component: usize) -> Option<VarId> {
        self.id(stage, VarKind::Local, component)
    }

    pub fn state_id(&self, stage: usize, component: usize) -> Option<VarId> {
        self.id(stage, VarKind::State, component)
    }

    pub fn name(&self, id: VarId) -> String {
        self.vars[id].name()
    }

    /// Parses a name of the form `x[i][j]` or `s[i][l]`.
    pub fn parse_name(&self, name: &str) -> Result<VarId, PolyError> {
        let unknown = || PolyError::UnknownVariable(name.to_string());
        let name = name.trim();
        let kind = match name.chars().next() {
            Some('x') => VarKind::Local,
            Some('s') => VarKind::State,
            _ => return Err(unknown()),
        };
        let rest = &name[1..];
        let rest = rest.strip_prefix('[').ok_or_else(unknown)?;
        let (a, rest) = rest.split_once(']').ok_or_else(unknown)?;
        let rest = rest.strip_prefix('[').ok_or_else(unknown)?;
        let b = rest.strip_suffix(']').ok_or_else(unknown)?;
        let stage: usize = a.trim().parse().map_err(|_| unknown())?;
        let comp: usize = b.trim().parse().map_err(|_| unknown())?;
        self.id(stage, kind, comp).ok_or_else(unknown)
    }
}

/// Sparse exponent vector: sorted `(variable, exponent)` pairs, exponents > 0.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(SmallVec<[(u32, u32); 4]>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(SmallVec::new())
    }

    pub fn var(v: VarId) -> Self {
        Self::var_pow(v, 1)
    }

    pub fn var_pow(v: VarId, e: u32) -> Self {
        let mut m = SmallVec::new();
        if e > 0 {
            m.push((v as u32, e));
        }
        Monomial(m)
    }

    /// Builds from arbitrary pairs; duplicates are summed, zeros dropped.
    pub fn from_pairs<I: IntoIterator<Item = (VarId, u32)>>(pairs: I) -> Self {
        let mut acc: BTreeMap<u32, u32> = BTreeMap::new();
        for (v, e) in pairs {
            *acc.entry(v as u32).or_default() += e;
        }
        Monomial(acc.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: VarId) -> u32 {
        self.0
            .iter()
            .find(|&&(w, _)| w as usize == v)
            .map_or(0, |&(_, e)| e)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, u32)> + '_ {
        self.0.iter().map(|&(v, e)| (v as usize, e))
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.iter().map(|&(v, _)| v as usize)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    pub fn pow(&self, e: u32) -> Monomial {
        if e == 0 {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|&(v, x)| (v, x * e)).collect())
    }

    /// True when every variable of the monomial is in `vars` (sorted).
    pub fn supported_on(&self, vars: &[VarId]) -> bool {
        self.vars().all(|v| vars.binary_search(&v).is_ok())
    }

    pub fn evaluate(&self, point: &[f64]) -> Option<f64> {
        let mut acc = 1.0;
        for (v, e) in self.iter() {
            acc *= point.get(v)?.powi(e as i32);
        }
        Some(acc)
    }

    /// Monomial with one factor of `v` removed, and the exponent it had.
    pub fn derivative(&self, v: VarId) -> Option<(u32, Monomial)> {
        let e = self.exponent(v);
        if e == 0 {
            return None;
        }
        let rest = self
            .0
            .iter()
            .filter_map(|&(w, x)| {
                if w as usize == v {
                    (x > 1).then_some((w, x - 1))
                } else {
                    Some((w, x))
                }
            })
            .collect();
        Some((e, Monomial(rest)))
    }
}

impl Ord for Monomial {
    /// Graded lexicographic: total degree first, then a larger exponent on a
    /// lower variable id comes first (`1 < x0 < x1 < x0^2 < x0 x1 < x1^2`).
    fn cmp(&self, other: &Self) -> Ordering {
        let d = self.degree().cmp(&other.degree());
        if d != Ordering::Equal {
            return d;
        }
        for (&(va, ea), &(vb, eb)) in self.0.iter().zip(other.0.iter()) {
            if va != vb {
                return va.cmp(&vb);
            }
            if ea != eb {
                return eb.cmp(&ea);
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .iter()
            .map(|(v, e)| if e == 1 { format!("v{v}") } else { format!("v{v}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// All monomials supported on `vars` with total degree at most `k`, in
/// graded-lex order. The length is `C(|vars| + k, k)`.
pub fn monomials_up_to(vars: &[VarId], k: u32) -> Vec<Monomial> {
    let mut sorted = vars.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut out = Vec::new();
    for d in 0..=k {
        let mut current = Vec::with_capacity(sorted.len());
        push_degree(&sorted, d, &mut current, &mut out);
    }
    out
}

fn push_degree(vars: &[VarId], d: u32, current: &mut Vec<(u32, u32)>, out: &mut Vec<Monomial>) {
    match vars.split_first() {
        None => {
            if d == 0 {
                out.push(Monomial(current.iter().copied().collect()));
            }
        }
        Some((&v, rest)) => {
            for e in (0..=d).rev() {
                if e > 0 {
                    current.push((v as u32, e));
                }
                push_degree(rest, d - e, current, out);
                if e > 0 {
                    current.pop();
                }
            }
        }
    }
}

/// `C(n, k)` as `u64`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Closed real interval used for bound propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo: lo.min(hi), hi: lo.max(hi) }
    }

    pub fn symmetric(r: f64) -> Self {
        Self::new(-r.abs(), r.abs())
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn magnitude(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn add(self, o: Interval) -> Interval {
        Interval { lo: self.lo + o.lo, hi: self.hi + o.hi }
    }

    pub fn mul(self, o: Interval) -> Interval {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        Interval {
            lo: c.iter().copied().fold(f64::INFINITY, f64::min),
            hi: c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn scale(self, c: f64) -> Interval {
        Interval::new(self.lo * c, self.hi * c)
    }

    /// Exact range of `t^e` for `t` in the interval.
    pub fn powi(self, e: u32) -> Interval {
        if e == 0 {
            return Interval::point(1.0);
        }
        let a = self.lo.powi(e as i32);
        let b = self.hi.powi(e as i32);
        if e % 2 == 1 {
            Interval::new(a, b)
        } else if self.lo <= 0.0 && self.hi >= 0.0 {
            Interval::new(0.0, a.max(b))
        } else {
            Interval::new(a.min(b), a.max(b))
        }
    }
}

/// Sparse polynomial with real coefficients over a shared variable space.
#[derive(Clone)]
pub struct Polynomial {
    space: Arc<VariableSpace>,
    terms: BTreeMap<Monomial, f64>,
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display())
    }
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.same_space(other) && self.terms == other.terms
    }
}

impl Polynomial {
    pub fn zero(space: &Arc<VariableSpace>) -> Self {
        Self { space: space.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(space: &Arc<VariableSpace>, c: f64) -> Self {
        Self::monomial(space, Monomial::one(), c)
    }

    pub fn var(space: &Arc<VariableSpace>, v: VarId) -> Self {
        Self::monomial(space, Monomial::var(v), 1.0)
    }

    pub fn monomial(space: &Arc<VariableSpace>, m: Monomial, c: f64) -> Self {
        let mut p = Self::zero(space);
        if c != 0.0 {
            p.terms.insert(m, c);
        }
        p
    }

    /// Builds from terms; repeated monomials are summed and exact zeros dropped.
    pub fn from_terms<I: IntoIterator<Item = (Monomial, f64)>>(space: &Arc<VariableSpace>, terms: I) -> Self {
        let mut p = Self::zero(space);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn space(&self) -> &Arc<VariableSpace> {
        &self.space
    }

    pub fn same_space(&self, other: &Polynomial) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space
    }

    fn check(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(PolyError::SpaceMismatch)
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficient(&Monomial::one())
    }

    /// Total degree; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Sorted list of variables that appear with a nonzero coefficient.
    pub fn support(&self) -> Vec<VarId> {
        let mut vars: Vec<VarId> = self.terms.keys().flat_map(|m| m.vars().collect::<Vec<_>>()).collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        if c == 0.0 {
            return Polynomial::zero(&self.space);
        }
        Polynomial {
            space: self.space.clone(),
            terms: self.terms.iter().map(|(m, &v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn add_constant(&self, c: f64) -> Polynomial {
        let mut out = self.clone();
        out.add_term(Monomial::one(), c);
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check(other)?;
        let mut acc: HashMap<Monomial, f64> = HashMap::with_capacity(self.terms.len() * other.terms.len());
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                *acc.entry(ma.mul(mb)).or_insert(0.0) += ca * cb;
            }
        }
        Ok(Polynomial::from_terms(&self.space, acc))
    }

    /// Multiplies by a single monomial.
    pub fn mul_monomial(&self, m: &Monomial, c: f64) -> Polynomial {
        Polynomial::from_terms(&self.space, self.terms.iter().map(|(t, &v)| (t.mul(m), v * c)))
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::constant(&self.space, 1.0);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&base).expect("same space");
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base).expect("same space");
            }
        }
        out
    }

    /// Drops coefficients with magnitude at or below `threshold`.
    pub fn pruned(&self, threshold: f64) -> Polynomial {
        Polynomial {
            space: self.space.clone(),
            terms: self.terms.iter().filter(|(_, c)| c.abs() > threshold).map(|(m, &c)| (m.clone(), c)).collect(),
        }
    }

    /// Evaluates at a dense point indexed by variable id.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, PolyError> {
        let mut acc = 0.0;
        for (m, &c) in &self.terms {
            let v = m
                .evaluate(point)
                .ok_or_else(|| PolyError::UnboundVariable(self.space.name(m.vars().max().unwrap_or(0))))?;
            acc += c * v;
        }
        Ok(acc)
    }

    /// Evaluates with values given as a map; unbound variables are an error.
    pub fn evaluate_map(&self, point: &HashMap<VarId, f64>) -> Result<f64, PolyError> {
        let mut acc = 0.0;
        for (m, &c) in &self.terms {
            let mut t = c;
            for (v, e) in m.iter() {
                let x = point.get(&v).ok_or_else(|| PolyError::UnboundVariable(self.space.name(v)))?;
                t *= x.powi(e as i32);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Range enclosure over a box given per variable id.
    pub fn evaluate_interval(&self, boxes: &[Interval]) -> Result<Interval, PolyError> {
        let mut acc = Interval::point(0.0);
        for (m, &c) in &self.terms {
            let mut t = Interval::point(1.0);
            for (v, e) in m.iter() {
                let b = boxes.get(v).ok_or_else(|| PolyError::UnboundVariable(self.space.name(v)))?;
                t = t.mul(b.powi(e));
            }
            acc = acc.add(t.scale(c));
        }
        Ok(acc)
    }

    pub fn derivative(&self, v: VarId) -> Polynomial {
        Polynomial::from_terms(
            &self.space,
            self.terms
                .iter()
                .filter_map(|(m, &c)| m.derivative(v).map(|(e, rest)| (rest, c * e as f64))),
        )
    }

    /// Composition: replaces each bound variable by its polynomial.
    pub fn substitute(&self, bindings: &HashMap<VarId, Polynomial>) -> Result<Polynomial, PolyError> {
        for b in bindings.values() {
            self.check(b)?;
        }
        let mut powers: HashMap<(VarId, u32), Polynomial> = HashMap::new();
        let mut out = Polynomial::zero(&self.space);
        for (m, &c) in &self.terms {
            let mut term = Polynomial::constant(&self.space, c);
            let mut passthrough = Vec::new();
            for (v, e) in m.iter() {
                match bindings.get(&v) {
                    Some(b) => {
                        let p = powers.entry((v, e)).or_insert_with(|| b.pow(e));
                        term = term.mul(p)?;
                    }
                    None => passthrough.push((v, e)),
                }
            }
            if !passthrough.is_empty() {
                term = term.mul_monomial(&Monomial::from_pairs(passthrough), 1.0);
            }
            for (tm, tc) in term.terms {
                out.add_term(tm, tc);
            }
        }
        Ok(out)
    }

    /// Human-readable form using the variable names of the space.
    pub fn display(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                if m.is_one() {
                    format!("{c}")
                } else {
                    let vars: Vec<String> = m
                        .iter()
                        .map(|(v, e)| {
                            let n = self.space.name(v);
                            if e == 1 { n } else { format!("{n}^{e}") }
                        })
                        .collect();
                    format!("{c}*{}", vars.join("*"))
                }
            })
            .collect();
        parts.join(" + ")
    }
}

/// `∏_l fs[l]^alpha[l]`; an empty or all-zero exponent gives the constant 1.
pub fn power_product(space: &Arc<VariableSpace>, fs: &[Polynomial], alpha: &[u32]) -> Result<Polynomial, PolyError> {
    assert_eq!(fs.len(), alpha.len(), "one exponent per factor");
    let mut out = Polynomial::constant(space, 1.0);
    for (f, &a) in fs.iter().zip(alpha) {
        if a > 0 {
            out = out.mul(&f.pow(a))?;
        }
    }
    Ok(out)
}
