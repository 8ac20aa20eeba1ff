//! Sparse SDPA (`.dat-s`) export and import.
//!
//! Programs are written in linear-matrix-inequality form: the scalar
//! variables become the SDPA vector `y`, the objective is `min c·y`, and every
//! block satisfies `Σ_i F_i y_i − F_0 ⪰ 0`. An affine block entry
//! `const + Σ a_i y_i` therefore stores `a_i` in matrix `i` and `−const` in
//! matrix 0.
//!
//! Linear rows share one trailing diagonal block (negative dimension in the
//! header). Each equality `a·y + c = 0` occupies two consecutive diagonal
//! slots holding `a·y + c ≥ 0` and `−a·y − c ≥ 0`; inequalities follow with
//! one slot each. The reader merges consecutive nonzero slots that are exact
//! negatives back into an equality.

//! A nonzero objective constant is carried in a leading `*offset <value>`
//! comment line, the only comment the writer emits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{BlockKind, ConicProgram, LinearForm, PsdBlock};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpaError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unexpected end of input: {0}")]
    Eof(&'static str),
}

/// Shortest representation that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_sdpa(p: &ConicProgram) -> String {
    let mut out = String::new();
    if p.objective.constant != 0.0 {
        let _ = writeln!(out, "*offset {}", num(p.objective.constant));
    }
    let psd: Vec<&PsdBlock> = p.blocks.iter().filter(|b| b.dim > 0).collect();
    let lp_dim = 2 * p.equalities.len() + p.inequalities.len();
    let nblocks = psd.len() + usize::from(lp_dim > 0);
    let _ = writeln!(out, "{}", p.num_vars);
    let _ = writeln!(out, "{nblocks}");
    let mut dims: Vec<String> = psd.iter().map(|b| b.dim.to_string()).collect();
    if lp_dim > 0 {
        dims.push(format!("-{lp_dim}"));
    }
    let _ = writeln!(out, "{}", dims.join(" "));
    let mut c = vec![0.0; p.num_vars];
    for &(v, a) in &p.objective.terms {
        c[v] += a;
    }
    let _ = writeln!(out, "{}", c.iter().map(|&v| num(v)).collect::<Vec<_>>().join(" "));
    // Entries grouped by matrix number, then block, then position.
    let mut entries: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
    let mut put = |mat: usize, blk: usize, i: usize, j: usize, v: f64| {
        if v != 0.0 {
            *entries.entry((mat, blk, i, j)).or_insert(0.0) += v;
        }
    };
    for (bi, b) in psd.iter().enumerate() {
        for j in 0..b.dim {
            for i in 0..=j {
                let f = b.entry(i, j);
                put(0, bi + 1, i + 1, j + 1, -f.constant);
                for &(v, a) in &f.terms {
                    put(v + 1, bi + 1, i + 1, j + 1, a);
                }
            }
        }
    }
    if lp_dim > 0 {
        let blk = psd.len() + 1;
        let mut slot = 1;
        for row in &p.equalities {
            for sign in [1.0, -1.0] {
                put(0, blk, slot, slot, -sign * row.constant);
                for &(v, a) in &row.terms {
                    put(v + 1, blk, slot, slot, sign * a);
                }
                slot += 1;
            }
        }
        for row in &p.inequalities {
            put(0, blk, slot, slot, -row.constant);
            for &(v, a) in &row.terms {
                put(v + 1, blk, slot, slot, a);
            }
            slot += 1;
        }
    }
    for ((mat, blk, i, j), v) in entries {
        if v != 0.0 {
            let _ = writeln!(out, "{mat} {blk} {i} {j} {}", num(v));
        }
    }
    out
}

struct Tokens<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

fn split(line: &str) -> Vec<&str> {
    line.split(|c: char| c.is_whitespace() || ",{}()".contains(c)).filter(|t| !t.is_empty()).collect()
}

fn perr(line: usize, message: impl Into<String>) -> SdpaError {
    SdpaError::Parse { line, message: message.into() }
}

impl<'a> Tokens<'a> {
    fn next_line(&mut self, what: &'static str) -> Result<(usize, Vec<&'a str>), SdpaError> {
        let l = self.lines.get(self.pos).cloned().ok_or(SdpaError::Eof(what))?;
        self.pos += 1;
        Ok(l)
    }

    /// Reads `count` numbers that may span several lines.
    fn numbers<T: std::str::FromStr>(&mut self, count: usize, what: &'static str) -> Result<Vec<T>, SdpaError> {
        let mut out = Vec::with_capacity(count.min(1 << 20));
        while out.len() < count {
            let (ln, toks) = self.next_line(what)?;
            for t in toks {
                if out.len() == count {
                    return Err(perr(ln, format!("too many values in {what}")));
                }
                out.push(t.parse::<T>().map_err(|_| perr(ln, format!("bad number `{t}` in {what}")))?);
            }
        }
        Ok(out)
    }
}

/// Parses a sparse SDPA document into a program with generic blocks.
pub fn parse_sdpa(text: &str) -> Result<ConicProgram, SdpaError> {
    let mut offset = 0.0;
    let mut lines = Vec::new();
    let mut header = true;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let t = raw.trim();
        if header && (t.starts_with('"') || t.starts_with('*')) {
            if let Some(v) = t.strip_prefix("*offset") {
                offset = v.trim().parse().map_err(|_| perr(ln, "bad offset value"))?;
            }
            continue;
        }
        let toks = split(t);
        if toks.is_empty() {
            continue;
        }
        header = false;
        lines.push((ln, toks));
    }
    let mut tk = Tokens { lines, pos: 0 };
    let m: usize = tk.numbers(1, "constraint count")?[0];
    let nb: usize = tk.numbers(1, "block count")?[0];
    const LIMIT: usize = 1 << 24;
    if m > LIMIT || nb > LIMIT {
        return Err(perr(1, "problem dimensions too large"));
    }
    let dims: Vec<i64> = tk.numbers(nb, "block sizes")?;
    if dims.iter().any(|&d| d == 0 || d.unsigned_abs() as usize > LIMIT) {
        return Err(perr(2, "block sizes must be nonzero and moderate"));
    }
    let total: u128 = dims.iter().map(|&d| {
        let d = d.unsigned_abs() as u128;
        if d > 0 { d * (d + 1) / 2 } else { 0 }
    }).sum();
    if total > LIMIT as u128 {
        return Err(perr(2, "block storage too large"));
    }
    let c: Vec<f64> = tk.numbers(m, "objective vector")?;

    let mut p = ConicProgram::new();
    p.num_vars = m;
    p.objective = LinearForm::from_terms(offset, c.iter().enumerate().map(|(i, &v)| (i, v)));
    // Per block: (i, j) → constant and coefficient lists.
    let mut psd: Vec<Option<PsdBlock>> = Vec::with_capacity(nb);
    let mut diag: Vec<Option<Vec<(f64, Vec<(usize, f64)>)>>> = Vec::with_capacity(nb);
    for &d in &dims {
        if d > 0 {
            psd.push(Some(PsdBlock::new(d as usize, "imported", BlockKind::Generic)));
            diag.push(None);
        } else {
            psd.push(None);
            diag.push(Some(vec![(0.0, Vec::new()); d.unsigned_abs() as usize]));
        }
    }
    let mut raw: Vec<Vec<(f64, Vec<(usize, f64)>)>> = psd
        .iter()
        .map(|b| b.as_ref().map_or(Vec::new(), |b| vec![(0.0, Vec::new()); b.entries.len()]))
        .collect();
    while tk.pos < tk.lines.len() {
        let (ln, toks) = tk.next_line("entries")?;
        if toks.len() != 5 {
            return Err(perr(ln, "entry lines need `matno blkno i j value`"));
        }
        let idx = |k: usize| toks[k].parse::<usize>().map_err(|_| perr(ln, format!("bad index `{}`", toks[k])));
        let (mat, blk, i, j) = (idx(0)?, idx(1)?, idx(2)?, idx(3)?);
        let v: f64 = toks[4].parse().map_err(|_| perr(ln, format!("bad value `{}`", toks[4])))?;
        if mat > m || blk == 0 || blk > nb || i == 0 || j == 0 {
            return Err(perr(ln, "entry index out of range"));
        }
        let (i, j) = (i.min(j) - 1, i.max(j) - 1);
        let slot = match (&psd[blk - 1], &mut diag[blk - 1]) {
            (Some(b), _) => {
                if j >= b.dim {
                    return Err(perr(ln, "entry outside its block"));
                }
                &mut raw[blk - 1][super::triangle_index(i, j)]
            }
            (None, Some(d)) => {
                if i != j || j >= d.len() {
                    return Err(perr(ln, "diagonal block entry must be on the diagonal"));
                }
                &mut d[i]
            }
            (None, None) => unreachable!(),
        };
        if mat == 0 {
            slot.0 -= v;
        } else {
            slot.1.push((mat - 1, v));
        }
    }
    for (bi, b) in psd.into_iter().enumerate() {
        if let Some(mut b) = b {
            for (e, (c, terms)) in raw[bi].drain(..).enumerate() {
                b.entries[e] = LinearForm::from_terms(c, terms);
            }
            p.add_block(b);
        }
    }
    for d in diag.into_iter().flatten() {
        let rows: Vec<LinearForm> = d.into_iter().map(|(c, t)| LinearForm::from_terms(c, t)).collect();
        let mut k = 0;
        while k < rows.len() {
            if k + 1 < rows.len() && !rows[k].is_zero() && rows[k + 1] == rows[k].scale(-1.0) {
                p.equalities.push(rows[k].clone());
                k += 2;
            } else {
                p.inequalities.push(rows[k].clone());
                k += 1;
            }
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConicProgram {
        let mut p = ConicProgram::new();
        let (a, b) = (p.add_var(), p.add_var());
        p.objective = LinearForm::from_terms(0.5, [(a, 1.0), (b, -2.0)]);
        let mut blk = PsdBlock::new(2, "m", BlockKind::Generic);
        blk.set(0, 0, LinearForm::constant(1.0));
        blk.set(0, 1, LinearForm::from_terms(0.25, [(a, 1.0)]));
        blk.set(1, 1, LinearForm::from_terms(0.0, [(b, 3.0)]));
        p.add_block(blk);
        p.add_equality(LinearForm::from_terms(-1.0, [(a, 1.0), (b, 1.0)]), "eq");
        p.add_inequality(LinearForm::from_terms(0.1, [(b, 1.0)]));
        p
    }

    #[test]
    fn empty_program_is_header_only() {
        let text = write_sdpa(&ConicProgram::new());
        assert_eq!(text, "0\n0\n\n\n");
        let p = parse_sdpa(&text).unwrap();
        assert_eq!(p.num_vars, 0);
        assert!(p.blocks.is_empty());
    }

    #[test]
    fn round_trip_preserves_structure() {
        let p = sample();
        let text = write_sdpa(&p);
        let q = parse_sdpa(&text).unwrap();
        assert_eq!(q.num_vars, p.num_vars);
        assert_eq!(q.objective, p.objective);
        assert_eq!(q.blocks[0].entries, p.blocks[0].entries);
        assert_eq!(q.equalities, p.equalities);
        assert_eq!(q.inequalities, p.inequalities);
        assert_eq!(write_sdpa(&q), text);
    }

    #[test]
    fn accepts_comments_and_punctuation() {
        let text = "\"a comment\n* another\n1\n1\n{2}\n(1.0)\n0 1 1 1 -1\n1 1 1 2 1.0\n0 1 2 2 -1\n";
        let p = parse_sdpa(text).unwrap();
        assert_eq!(p.blocks[0].entry(0, 1), &LinearForm::var(0));
        assert_eq!(p.blocks[0].entry(0, 0), &LinearForm::constant(1.0));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_sdpa("1\n1\n2\n1.0\n0 3 1 1 1\n").is_err());
        assert!(parse_sdpa("x\n").is_err());
        assert!(parse_sdpa("1\n").is_err());
    }
}
