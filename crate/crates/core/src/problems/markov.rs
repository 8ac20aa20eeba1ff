use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::GeneratorError;
use crate::chain::{ChainParts, CompositionChain, Sense};
use crate::poly::{Monomial, Polynomial, VariableSpace};
use std::sync::Arc;

/// Univariate polynomial with coefficients in increasing degree.
fn univariate(space: &Arc<VariableSpace>, x: usize, coeffs: &[f64]) -> Polynomial {
    Polynomial::from_terms(space, coeffs.iter().enumerate().map(|(k, &c)| (Monomial::var_pow(x, k as u32), c)))
}

/// Whether the univariate polynomial stays in `[0, 1]` on a fine grid of
/// `[-1, 1]`; warns otherwise.
fn check_probability(coeffs: &[f64], name: &str, stage: usize) -> bool {
    let (lo, hi) = (0..=2000).map(|t| -1.0 + t as f64 / 1000.0).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        let v = coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c);
        (lo.min(v), hi.max(v))
    });
    let ok = lo >= 0.0 && hi <= 1.0;
    if !ok {
        warn!("{name} at stage {stage} leaves [0, 1] on the box: sampled range [{lo}, {hi}]");
    }
    ok
}

/// Two-state chain maximizing `v_0 ∏ P_i(x_i) v_0ᵀ` with
/// `P_i = [[a_i, 1 − a_i], [b_i, 1 − b_i]]`, `v_0 = (1, 0)` and controls in
/// `[-1, 1]`. `a[i]`, `b[i]` are the coefficient lists of stage `i + 1`.
pub fn markov_problem(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<CompositionChain, GeneratorError> {
    let n = a.len();
    if n == 0 || b.len() != n {
        return Err(GeneratorError::Param("need one (a, b) pair per stage".into()));
    }
    let mut ranks = vec![2; n];
    ranks[n - 1] = 1;
    let mut parts = ChainParts::new(ranks, vec![1; n]);
    let sp = parts.space.clone();
    let one = Polynomial::constant(&sp, 1.0);
    let mut probabilities = true;
    for i in 1..=n {
        probabilities &= check_probability(&a[i - 1], "a", i);
        probabilities &= check_probability(&b[i - 1], "b", i);
        let x = sp.local_id(i, 1).unwrap();
        let pa = univariate(&sp, x, &a[i - 1]);
        let pb = univariate(&sp, x, &b[i - 1]);
        let col0 = [pa.clone(), pb.clone()];
        let col1 = [one.sub(&pa).unwrap(), one.sub(&pb).unwrap()];
        let last = i == n;
        let comps = if i == 1 {
            if last { vec![col0[0].clone()] } else { vec![col0[0].clone(), col1[0].clone()] }
        } else {
            let s = [parts.s(i - 1, 1), parts.s(i - 1, 2)];
            let apply = |col: &[Polynomial; 2]| s[0].mul(&col[0]).unwrap().add(&s[1].mul(&col[1]).unwrap()).unwrap();
            if last { vec![apply(&col0)] } else { vec![apply(&col0), apply(&col1)] }
        };
        parts.stages[i - 1] = comps;
    }
    parts.sense = Sense::Maximize;
    // States are probability vectors, so unit balls contain them; interval
    // propagation through the monomial form overestimates badly.
    if probabilities {
        parts.state_radii = Some(vec![1.0; n]);
    }
    Ok(CompositionChain::new(parts)?)
}

/// `a(x) = 0.95 − 0.2x²`, `b(x) = 0.05 − 0.05x²` at every stage.
pub fn markov_quadratic(n: usize) -> Result<CompositionChain, GeneratorError> {
    let a = vec![vec![0.95, 0.0, -0.2]; n];
    let b = vec![vec![0.05, 0.0, -0.05]; n];
    markov_problem(&a, &b)
}

/// Optimal value of [`markov_quadratic`]: `½ + ½·0.9ⁿ`.
pub fn markov_oracle(n: usize) -> f64 {
    0.5 + 0.5 * 0.9f64.powi(n as i32)
}

/// Chebyshev coefficients of `T_0..T_4` in the monomial basis.
const CHEBYSHEV: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0, 0.0],
    [-1.0, 0.0, 2.0, 0.0, 0.0],
    [0.0, -3.0, 0.0, 4.0, 0.0],
    [1.0, 0.0, -8.0, 0.0, 8.0],
];

/// `0.5 + 0.45 Σ_j c_j T_j(x) / Σ_j |c_j|` for random `c_1..c_4`; stays
/// inside `[0.05, 0.95]` on the box because `|T_j| ≤ 1` there.
fn chebyshev_mix(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let c: Vec<f64> = (0..4).map(|_| StandardNormal.sample(rng)).collect();
    let norm: f64 = c.iter().map(|v: &f64| v.abs()).sum();
    let mut out = vec![0.0; 5];
    out[0] = 0.5;
    for (j, &cj) in c.iter().enumerate() {
        for (k, &t) in CHEBYSHEV[j + 1].iter().enumerate() {
            out[k] += 0.45 * cj / norm * t;
        }
    }
    out
}

/// Stage-varying degree-4 transitions built from random Chebyshev mixes.
/// `a` and `b` use independent mixes, so the controls that favour staying in
/// the working state differ from those that favour recovery.
pub fn markov_chebyshev_problem(n: usize, seed: u64) -> Result<CompositionChain, GeneratorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        a.push(chebyshev_mix(&mut rng));
        b.push(chebyshev_mix(&mut rng));
    }
    markov_problem(&a, &b)
}
