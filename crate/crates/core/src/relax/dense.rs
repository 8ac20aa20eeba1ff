use super::{Hierarchy, MeasureLayout, RelaxError, Relaxation};
use crate::conic::ConicProgram;
use crate::poly::{Polynomial, VarId};

/// Dense moment relaxation of `min objective` s.t. `ineqs ≥ 0`, `eqs = 0`
/// with a single measure over every variable that appears.
pub fn assemble_dense(objective: &Polynomial, ineqs: &[Polynomial], eqs: &[Polynomial], k: u32) -> Result<Relaxation, RelaxError> {
    let mut vars: Vec<VarId> = objective.support();
    for p in ineqs.iter().chain(eqs) {
        vars.extend(p.support());
    }
    vars.sort_unstable();
    vars.dedup();
    if objective.degree() > 2 * k {
        return Err(RelaxError::OrderTooSmall { order: k, what: "objective".into(), degree: objective.degree() });
    }
    let mut program = ConicProgram::new();
    let mut lay = MeasureLayout::new(&mut program, &vars, k, None);
    lay.add_normalization(&mut program);
    lay.moment_block = program.add_block(lay.moment_matrix(0, "moment".into()));
    for (j, g) in ineqs.iter().enumerate() {
        lay.add_localizer(&mut program, g, 0, format!("localizer {j}"))?;
    }
    for (j, h) in eqs.iter().enumerate() {
        lay.add_ideal(&mut program, h, "equality", &format!("equality {j}"))?;
    }
    program.objective = lay.riesz(objective)?;
    Ok(Relaxation { program, measures: vec![lay], sign: 1.0, hierarchy: Hierarchy::Dense, order: k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{solve, SolveOptions};
    use crate::poly::VariableSpace;
    use std::sync::Arc;

    #[test]
    fn square_on_interval() {
        let sp = Arc::new(VariableSpace::locals(1));
        let x = Polynomial::var(&sp, 0);
        let ball = Polynomial::constant(&sp, 1.0).sub(&x.pow(2)).unwrap();
        let r = assemble_dense(&x.pow(2), &[ball.clone()], &[], 1).unwrap();
        let res = solve(&r.program, &SolveOptions::default());
        assert!(res.status.is_solved());
        assert!(r.bound(&res).abs() < 1e-6);
        let r = assemble_dense(&x, &[ball], &[], 1).unwrap();
        let res = solve(&r.program, &SolveOptions::default());
        assert!((r.bound(&res) + 1.0).abs() < 1e-6);
    }

    #[test]
    fn order_too_small() {
        let sp = Arc::new(VariableSpace::locals(1));
        let x = Polynomial::var(&sp, 0);
        assert!(assemble_dense(&x.pow(4), &[], &[], 1).is_err());
    }
}
