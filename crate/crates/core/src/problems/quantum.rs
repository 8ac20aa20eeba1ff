use super::GeneratorError;
use crate::chain::{ChainParts, CompositionChain, ConstraintSense, Sense, StageConstraint};
use crate::poly::Polynomial;

/// Rotation matrix of stage `k` as polynomials in `(x, y) = (sin θ, cos θ)`:
/// about the y axis on odd stages, about the z axis on even ones.
fn rotation(k: usize, x: &Polynomial, y: &Polynomial) -> [[Polynomial; 3]; 3] {
    let sp = x.space();
    let z = Polynomial::zero(sp);
    let one = Polynomial::constant(sp, 1.0);
    let nx = x.scale(-1.0);
    if k % 2 == 1 {
        [[y.clone(), z.clone(), x.clone()], [z.clone(), one, z.clone()], [nx, z, y.clone()]]
    } else {
        [[y.clone(), nx, z.clone()], [x.clone(), y.clone(), z.clone()], [z.clone(), z, one]]
    }
}

/// Single-qubit steering: `s_k = P_k s_{k−1}` on the unit sphere, maximize
/// `s_N · target`.
///
/// Locals of stage `k` are `x[k][1] = sin θ_k` and `x[k][2] = cos θ_k` with
/// `x² + y² = 1`, plus `y ≥ cos θ_max` when `theta_max` is given. States
/// `k ≥ 1` of intermediate stages are 3-vectors with `‖s_{k−1}‖² = 1`
/// imposed at stage `k`. `s_0` is folded into stage 1 and the last stage
/// outputs the overlap directly.
pub fn quantum_problem(n: usize, theta_max: Option<f64>, s0: [f64; 3], target: [f64; 3]) -> Result<CompositionChain, GeneratorError> {
    if n == 0 {
        return Err(GeneratorError::Param("need at least one rotation".into()));
    }
    if let Some(t) = theta_max {
        if !(t > 0.0 && t <= std::f64::consts::FRAC_PI_2) {
            return Err(GeneratorError::Param(format!("theta_max must lie in (0, π/2], got {t}")));
        }
    }
    let mut ranks = vec![3; n];
    ranks[n - 1] = 1;
    let mut parts = ChainParts::new(ranks, vec![2; n]);
    let sp = parts.space.clone();
    for k in 1..=n {
        let (x, y) = (parts.x(k, 1), parts.x(k, 2));
        let p = rotation(k, &x, &y);
        let prev: Vec<Polynomial> = if k == 1 {
            s0.iter().map(|&v| Polynomial::constant(&sp, v)).collect()
        } else {
            (1..=3).map(|a| parts.s(k - 1, a)).collect()
        };
        let rows: Vec<Polynomial> = (0..3)
            .map(|l| {
                (0..3).fold(Polynomial::zero(&sp), |acc, a| acc.add(&p[l][a].mul(&prev[a]).unwrap()).unwrap())
            })
            .collect();
        parts.stages[k - 1] = if k == n {
            let overlap = rows
                .iter()
                .zip(target)
                .fold(Polynomial::zero(&sp), |acc, (r, t)| acc.add(&r.scale(t)).unwrap());
            vec![overlap]
        } else {
            rows
        };
        let circle = x.pow(2).add(&y.pow(2)).unwrap().add_constant(-1.0);
        parts.constraints.push(StageConstraint { stage: k, poly: circle, sense: ConstraintSense::Zero });
        if let Some(t) = theta_max {
            parts.constraints.push(StageConstraint {
                stage: k,
                poly: y.add_constant(-t.cos()),
                sense: ConstraintSense::NonNegative,
            });
        }
        if k >= 2 {
            let norm = prev.iter().fold(Polynomial::constant(&sp, -1.0), |acc, s| acc.add(&s.pow(2)).unwrap());
            parts.constraints.push(StageConstraint { stage: k, poly: norm, sense: ConstraintSense::Zero });
        }
    }
    parts.box_radii = vec![1.0; n];
    parts.state_radii = Some(vec![1.0; n]);
    parts.sense = Sense::Maximize;
    Ok(CompositionChain::new(parts)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_rotations_keep_the_start() {
        let c = quantum_problem(5, Some(0.1), [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]).unwrap();
        let (v, traj) = c.eval(&vec![vec![0.0, 1.0]; 5]);
        assert_eq!(v, 1.0);
        assert_eq!(traj[3], vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn rotations_preserve_norm() {
        let c = quantum_problem(4, None, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]).unwrap();
        let th: [f64; 4] = [0.3, -1.1, 2.0, 0.7];
        let x: Vec<Vec<f64>> = th.iter().map(|t| vec![t.sin(), t.cos()]).collect();
        let (_, traj) = c.eval(&x);
        for s in &traj[..3] {
            assert!((s.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // Quarter turn about y maps the z axis onto x.
        let h = std::f64::consts::FRAC_PI_2;
        let (v, _) = c.eval(&[vec![h.sin(), h.cos()], vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]]);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_theta() {
        assert!(quantum_problem(3, Some(2.0), [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]).is_err());
    }
}
