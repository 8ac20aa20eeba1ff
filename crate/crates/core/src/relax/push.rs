use std::collections::HashMap;

use super::{Hierarchy, MeasureLayout, RelaxError, Relaxation};
use crate::chain::{ball, CompositionChain, ConstraintSense};
use crate::conic::ConicProgram;
use crate::poly::{binomial, Monomial, Polynomial};

/// Nonzero exponents `α` over the components of a stage map with
/// `Σ α_ℓ deg F_ℓ ≤ 2k` and `|α| ≤ 2k`, in graded-lex order.
pub fn pushforward_alphas(degrees: &[u32], k: u32) -> Vec<Vec<u32>> {
    let cap = 2 * k;
    let mut out = Vec::new();
    let mut cur = vec![0u32; degrees.len()];
    fn rec(degrees: &[u32], pos: usize, weight: u32, total: u32, cap: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == degrees.len() {
            if total > 0 {
                out.push(cur.clone());
            }
            return;
        }
        let mut a = 0;
        loop {
            let w = weight + a * degrees[pos];
            if w > cap || total + a > cap {
                break;
            }
            cur[pos] = a;
            rec(degrees, pos + 1, w, total + a, cap, cur, out);
            a += 1;
        }
        cur[pos] = 0;
    }
    rec(degrees, 0, 0, 0, cap, &mut cur, &mut out);
    out.sort_by(|a, b| {
        let (sa, sb): (u32, u32) = (a.iter().sum(), b.iter().sum());
        sa.cmp(&sb).then_with(|| b.cmp(a))
    });
    out
}

/// Push-forward relaxation: one measure per stage on `(s_{i-1}, x_i)`,
/// coupled by `L_{i+1}(s_i^α) = L_i(F_i^α)`.
pub fn assemble_push(chain: &CompositionChain, k: u32) -> Result<Relaxation, RelaxError> {
    let n = chain.n();
    let sp = chain.space();
    let radii = chain.derive_state_bounds();
    let mut program = ConicProgram::new();
    let mut measures = Vec::with_capacity(n);
    for i in 1..=n {
        let mut lay = MeasureLayout::new(&mut program, &chain.stage_inputs(i), k, None);
        lay.add_normalization(&mut program);
        lay.moment_block = program.add_block(lay.moment_matrix(i - 1, format!("stage {i} moment")));
        let locals = chain.local_ids(i);
        let m = chain.box_radii()[i - 1];
        lay.add_localizer(&mut program, &ball(sp, &locals, m * m * locals.len() as f64), i - 1, format!("stage {i} local ball"))?;
        if locals.len() > 1 {
            for &v in &locals {
                lay.add_localizer(&mut program, &ball(sp, &[v], m * m), i - 1, format!("stage {i} local box"))?;
            }
        }
        if i >= 2 {
            let r = radii[i - 2];
            lay.add_localizer(&mut program, &ball(sp, &chain.state_ids(i - 1), r * r), i - 1, format!("stage {i} state ball"))?;
        }
        for c in chain.stage_constraints(i) {
            let what = format!("stage {i} constraint");
            match c.sense {
                ConstraintSense::NonNegative => lay.add_localizer(&mut program, &c.poly, i - 1, what)?,
                ConstraintSense::Zero => lay.add_ideal(&mut program, &c.poly, "stage-equality", &what)?,
            }
        }
        measures.push(lay);
    }
    for i in 1..n {
        let map = chain.stage(i);
        let states = chain.state_ids(i);
        let mut powers: HashMap<(usize, u32), Polynomial> = HashMap::new();
        for alpha in pushforward_alphas(map.degrees(), k) {
            let mut rhs = Polynomial::constant(sp, 1.0);
            for (l, &a) in alpha.iter().enumerate() {
                if a > 0 {
                    let f = powers.entry((l, a)).or_insert_with(|| map.components()[l].pow(a));
                    rhs = rhs.mul(f).expect("same space");
                }
            }
            let lhs = Monomial::from_pairs(states.iter().copied().zip(alpha.iter().copied()));
            let left = measures[i].riesz(&Polynomial::monomial(sp, lhs, 1.0))?;
            let right = measures[i - 1].riesz(&rhs)?;
            program.add_equality(left.sub(&right), "push");
        }
    }
    let sign = chain.sense().sign();
    let f_n = &chain.stage(n).components()[0];
    if f_n.degree() > 2 * k {
        return Err(RelaxError::OrderTooSmall { order: k, what: "final stage map".into(), degree: f_n.degree() });
    }
    program.objective = measures[n - 1].riesz(&f_n.scale(sign))?;
    Ok(Relaxation { program, measures, sign, hierarchy: Hierarchy::Push, order: k })
}

/// `(largest block, push rows)` for uniform rank `r`, order `k`, degree `d`.
pub fn predicted_push_counts(r: u64, k: u64, d: u64, n: u64) -> (u64, u64) {
    let block = binomial(r + 1 + k, k);
    let t = (2 * k) / d.max(1);
    (block, n.saturating_sub(1) * binomial(r + t, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_counts() {
        assert_eq!(pushforward_alphas(&[2, 2], 3).len(), 9);
        assert_eq!(pushforward_alphas(&[1], 1), vec![vec![1], vec![2]]);
        let a = pushforward_alphas(&[1, 3], 2);
        assert_eq!(a.len(), 6);
        assert!(a.contains(&vec![1, 1]));
        assert!(a.contains(&vec![4, 0]));
    }

    #[test]
    fn predicted() {
        assert_eq!(predicted_push_counts(2, 4, 2, 3).0, 35);
        assert_eq!(predicted_push_counts(2, 3, 2, 2), (20, 10));
        assert_eq!(predicted_push_counts(2, 10, 4, 2).0, 286);
    }
}
