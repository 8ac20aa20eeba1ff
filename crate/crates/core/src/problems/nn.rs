use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::GeneratorError;
use crate::chain::{ChainParts, CompositionChain, Sense};
use crate::poly::Polynomial;

/// Weights of a feed-forward network `u_i = A_i s_{i−1} + b_i x_i + c_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NnParameters {
    pub a: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl NnParameters {
    pub fn stages(&self) -> usize {
        self.a.len()
    }

    pub fn width(&self) -> usize {
        self.b.first().map_or(0, Vec::len)
    }

    /// Direct forward pass; returns every state `s_1..s_m` for `m = x.len()`.
    pub fn forward(&self, alpha: f64, x: &[f64]) -> Vec<Vec<f64>> {
        let r = self.width();
        let mut s = vec![0.0; r];
        let mut out = Vec::with_capacity(x.len());
        for (i, &xi) in x.iter().enumerate() {
            s = (0..r)
                .map(|l| {
                    let u: f64 = (0..r).map(|a| self.a[i][l][a] * s[a]).sum::<f64>() + self.b[i][l] * xi + self.c[i][l];
                    u + alpha * u.powi(3)
                })
                .collect();
            out.push(s.clone());
        }
        out
    }
}

/// Draws `A ~ 0.1 N`, `b ~ 0.3 N`, `c ~ 0.05 N` for `stages` layers of width `r`.
pub fn nn_parameters(stages: usize, r: usize, seed: u64) -> NnParameters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = |s: f64| s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
    let mut p = NnParameters { a: Vec::new(), b: Vec::new(), c: Vec::new() };
    for _ in 0..stages {
        p.a.push((0..r).map(|_| (0..r).map(|_| g(0.1)).collect()).collect());
        p.b.push((0..r).map(|_| g(0.3)).collect());
        p.c.push((0..r).map(|_| g(0.05)).collect());
    }
    p
}

/// Network truncated after `stage` layers with objective `s_{stage,1}` and
/// activation `t + α t³`. `s_0 = 0` is substituted into the first layer.
pub fn nn_problem(params: &NnParameters, alpha: f64, stage: usize, sense: Sense) -> Result<CompositionChain, GeneratorError> {
    if stage == 0 || stage > params.stages() {
        return Err(GeneratorError::Param(format!("stage must lie in 1..={}", params.stages())));
    }
    let r = params.width();
    let mut ranks = vec![r; stage];
    ranks[stage - 1] = 1;
    let mut parts = ChainParts::new(ranks, vec![1; stage]);
    let sp = parts.space.clone();
    for i in 1..=stage {
        let x = parts.x(i, 1);
        let outputs = if i == stage { 1 } else { r };
        let comps = (0..outputs)
            .map(|l| {
                let mut u = x.scale(params.b[i - 1][l]).add_constant(params.c[i - 1][l]);
                if i > 1 {
                    for a in 0..r {
                        u = u.add(&parts.s(i - 1, a + 1).scale(params.a[i - 1][l][a])).unwrap();
                    }
                }
                let cube = if alpha == 0.0 { Polynomial::zero(&sp) } else { u.pow(3).scale(alpha) };
                u.add(&cube).unwrap()
            })
            .collect();
        parts.stages[i - 1] = comps;
    }
    parts.sense = sense;
    Ok(CompositionChain::new(parts)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_matches_forward_pass() {
        let p = nn_parameters(6, 3, 2);
        let x = [0.3, -0.9, 0.5, 0.1, -0.2, 1.0];
        let direct = p.forward(0.2, &x);
        for m in 1..=6 {
            let c = nn_problem(&p, 0.2, m, Sense::Maximize).unwrap();
            let xs: Vec<Vec<f64>> = x[..m].iter().map(|&v| vec![v]).collect();
            let (v, _) = c.eval(&xs);
            assert!((v - direct[m - 1][0]).abs() < 1e-12);
        }
    }
}
