use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::CompositionChain;

/// Best point found by [`projected_gradient`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientResult {
    pub x: Vec<Vec<f64>>,
    pub value: f64,
}

/// Value of the chain and its gradient with respect to every local, by a
/// backward sweep through the stage Jacobians.
pub fn chain_gradient(chain: &CompositionChain, x: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
    let (value, traj) = chain.eval(x);
    let sp = chain.space();
    let mut point = chain.point_from_locals(x);
    for (i, s) in traj.iter().enumerate() {
        for (l, &v) in s.iter().enumerate() {
            point[sp.state_id(i + 1, l + 1).unwrap()] = v;
        }
    }
    let n = chain.n();
    let mut grads = vec![Vec::new(); n];
    // Adjoint of s_i; starts as ∂p/∂s_n = e_1.
    let mut lambda = vec![1.0];
    for i in (1..=n).rev() {
        let comps = chain.stage(i).components();
        grads[i - 1] = chain
            .local_ids(i)
            .iter()
            .map(|&v| comps.iter().zip(&lambda).map(|(f, &w)| w * f.derivative(v).evaluate(&point).unwrap()).sum())
            .collect();
        lambda = chain
            .state_ids(i - 1)
            .iter()
            .map(|&v| comps.iter().zip(&lambda).map(|(f, &w)| w * f.derivative(v).evaluate(&point).unwrap()).sum())
            .collect();
    }
    (value, grads)
}

/// Multi-start projected gradient on the box constraints, moving in the
/// direction of the chain's sense with step `M / √(t+1)`.
pub fn projected_gradient(chain: &CompositionChain, seed: u64, steps: usize, starts: usize) -> GradientResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = -chain.sense().sign();
    let radii = chain.box_radii();
    let mut best: Option<GradientResult> = None;
    for _ in 0..starts.max(1) {
        let mut x: Vec<Vec<f64>> = (0..chain.n())
            .map(|i| (0..chain.local_widths()[i]).map(|_| rng.random_range(-radii[i]..=radii[i])).collect())
            .collect();
        let mut cur = chain.eval(&x).0;
        let mut local_best = (x.clone(), cur);
        for t in 0..steps {
            let (_, g) = chain_gradient(chain, &x);
            let eta = 1.0 / ((t + 1) as f64).sqrt();
            for (i, (xi, gi)) in x.iter_mut().zip(&g).enumerate() {
                for (v, d) in xi.iter_mut().zip(gi) {
                    *v = (*v + dir * eta * radii[i] * d).clamp(-radii[i], radii[i]);
                }
            }
            cur = chain.eval(&x).0;
            if dir * cur > dir * local_best.1 {
                local_best = (x.clone(), cur);
            }
        }
        if best.as_ref().is_none_or(|b| dir * local_best.1 > dir * b.value) {
            best = Some(GradientResult { x: local_best.0, value: local_best.1 });
        }
    }
    best.unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gen_random_quadratic_composition, markov_oracle, markov_quadratic};

    #[test]
    fn gradient_matches_finite_differences() {
        let c = gen_random_quadratic_composition(4, 3).unwrap();
        let x = vec![vec![0.3], vec![-0.2], vec![0.7], vec![0.1]];
        let (_, g) = chain_gradient(&c, &x);
        for i in 0..4 {
            let h = 1e-6;
            let mut xp = x.clone();
            xp[i][0] += h;
            let mut xm = x.clone();
            xm[i][0] -= h;
            let fd = (c.eval(&xp).0 - c.eval(&xm).0) / (2.0 * h);
            assert!((fd - g[i][0]).abs() < 1e-7, "stage {i}: {fd} vs {}", g[i][0]);
        }
    }

    #[test]
    fn finds_markov_optimum() {
        let c = markov_quadratic(3).unwrap();
        let r = projected_gradient(&c, 1, 200, 3);
        assert!((r.value - markov_oracle(3)).abs() < 1e-4);
    }
}
