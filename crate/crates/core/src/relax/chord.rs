use std::collections::HashMap;

use super::{Hierarchy, MeasureLayout, RelaxError, Relaxation};
use crate::chain::{ConstraintSense, LiftedPOP, Origin};
use crate::conic::{ConicProgram, LinearForm};
use crate::poly::{binomial, monomials_up_to};
use crate::sparsity::CliqueDecomposition;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChordOptions {
    /// Give separator monomials one shared scalar instead of equating copies.
    pub share_moments: bool,
}

/// Clique-wise moment relaxation of a lifted problem.
///
/// Each clique carries its own moment sequence; assigned inequalities become
/// localizers, equalities become ideal rows, and adjacent cliques agree on
/// every separator monomial of degree ≤ 2k.
pub fn assemble_chord(pop: &LiftedPOP, dec: &CliqueDecomposition, k: u32, opts: ChordOptions) -> Result<Relaxation, RelaxError> {
    let mut program = ConicProgram::new();
    let mut shared = opts.share_moments.then(HashMap::new);
    let mut measures: Vec<MeasureLayout> = dec
        .cliques
        .iter()
        .map(|c| MeasureLayout::new(&mut program, c, k, shared.as_mut()))
        .collect();
    for (i, lay) in measures.iter_mut().enumerate() {
        lay.add_normalization(&mut program);
        lay.moment_block = program.add_block(lay.moment_matrix(i, format!("clique {} moment", i + 1)));
    }
    for (c, con) in pop.constraints.iter().enumerate() {
        let i = dec.assignment[c];
        let lay = &measures[i];
        let what = format!("{:?} constraint of stage {}", con.origin, con.stage);
        match con.kind {
            ConstraintSense::NonNegative => lay.add_localizer(&mut program, &con.poly, i, what)?,
            ConstraintSense::Zero => {
                let group = match con.origin {
                    Origin::Lifting { .. } => "lifting",
                    _ => "stage-equality",
                };
                lay.add_ideal(&mut program, &con.poly, group, &what)?
            }
        }
    }
    if !opts.share_moments {
        for (&(a, b), sep) in dec.tree_edges.iter().zip(&dec.separators) {
            for m in monomials_up_to(sep, 2 * k) {
                let (ya, yb) = (measures[a].id(&m).unwrap(), measures[b].id(&m).unwrap());
                program.add_equality(LinearForm::from_terms(0.0, [(ya, 1.0), (yb, -1.0)]), "separator");
            }
        }
    }
    let obj = &measures[dec.objective_clique];
    if pop.objective.degree() > 2 * k {
        return Err(RelaxError::OrderTooSmall { order: k, what: "objective".into(), degree: pop.objective.degree() });
    }
    program.objective = obj.riesz(&pop.objective)?;
    Ok(Relaxation { program, measures, sign: pop.sign, hierarchy: Hierarchy::Chord, order: k })
}

/// `(largest block, separator rows, lifting rows)` for uniform rank `r`,
/// map degree `d`, order `k` and `n` stages.
pub fn predicted_chord_counts(r: u64, k: u64, d: u64, n: u64) -> (u64, u64, u64) {
    let block = binomial(2 * r + 1 + k, k);
    let sep = n.saturating_sub(1) * binomial(r + 2 * k, 2 * k);
    let lift = if d <= 2 * k { n * r * binomial(2 * r + 1 + 2 * k - d, 2 * k - d) } else { 0 };
    (block, sep, lift)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicted_counts() {
        assert_eq!(predicted_chord_counts(2, 3, 2, 5).0, 56);
        assert_eq!(predicted_chord_counts(2, 3, 2, 2).1, 28);
        assert_eq!(predicted_chord_counts(2, 4, 4, 2).0, 126);
        assert_eq!(predicted_chord_counts(4, 3, 2, 2).0, 220);
    }
}
