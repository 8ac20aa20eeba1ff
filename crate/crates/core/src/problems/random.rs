use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::GeneratorError;
use crate::chain::{ChainParts, CompositionChain, TTCores};
use crate::poly::{binomial, Monomial, Polynomial};

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Rank-2 chain with quadratic stage maps.
///
/// Stage 1 is affine in `x_1`; later stages sum every monomial
/// `s_{i-1,1}^{p1} s_{i-1,2}^{p2} x_i^a` with `p1 + p2 + a ≤ 2`. Each
/// coefficient is `½ N(0,1) 0.7^{p1+p2+a+1}`. The expanded polynomial has
/// degree `2^{n-1}`. Boxes are `[-1, 1]`, minimization.
pub fn gen_random_quadratic_composition(n: usize, seed: u64) -> Result<CompositionChain, GeneratorError> {
    if n < 1 {
        return Err(GeneratorError::Param("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranks = vec![2; n];
    ranks[n - 1] = 1;
    let mut parts = ChainParts::new(ranks.clone(), vec![1; n]);
    let sp = parts.space.clone();
    let coeff = |rng: &mut ChaCha8Rng, e: u32| 0.5 * gauss(rng) * 0.7f64.powi(e as i32 + 1);
    for i in 1..=n {
        let x = sp.local_id(i, 1).unwrap();
        let mut comps = Vec::with_capacity(ranks[i - 1]);
        for _ in 0..ranks[i - 1] {
            let mut f = Polynomial::zero(&sp);
            if i == 1 {
                for a in 0..=1 {
                    f.add_term(Monomial::var_pow(x, a), coeff(&mut rng, a));
                }
            } else {
                let (s1, s2) = (sp.state_id(i - 1, 1).unwrap(), sp.state_id(i - 1, 2).unwrap());
                for p1 in 0..=2u32 {
                    for p2 in 0..=2 - p1 {
                        for a in 0..=2 - p1 - p2 {
                            let m = Monomial::from_pairs([(s1, p1), (s2, p2), (x, a)]);
                            f.add_term(m, coeff(&mut rng, p1 + p2 + a));
                        }
                    }
                }
            }
            comps.push(f);
        }
        parts.stages[i - 1] = comps;
    }
    Ok(CompositionChain::new(parts)?)
}

/// Tensor train with dense rank-`r` cores of local degree `d`; the
/// coefficient of `x^k` in every entry is `N(0,1) 0.7^k / √r_{i-1}`.
pub fn gen_random_tt(n: usize, r: usize, d: u32, seed: u64) -> Result<TTCores, GeneratorError> {
    if r == 0 {
        return Err(GeneratorError::Param("rank must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prev = 1;
    let mut cores = Vec::with_capacity(n);
    for i in 0..n {
        let cols = if i + 1 == n { 1 } else { r };
        let scale = 1.0 / (prev as f64).sqrt();
        let core = (0..prev)
            .map(|_| {
                (0..cols)
                    .map(|_| (0..=d).map(|k| scale * gauss(&mut rng) * 0.7f64.powi(k as i32)).collect())
                    .collect()
            })
            .collect();
        cores.push(core);
        prev = cols;
    }
    Ok(TTCores::new(cores).map_err(|e| GeneratorError::Param(e.to_string()))?)
}

/// Perturbed-identity train and its boundary vectors.
#[derive(Debug, Clone)]
pub struct PerturbedTT {
    /// Cores with `u` folded into the first and `v` into the last.
    pub cores: TTCores,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Unfolded `P_i` as `[stage][a][l][power]`.
    pub matrices: Vec<Vec<Vec<Vec<f64>>>>,
}

/// `P_i(x) = I + Σ_{k=1}^{d} (τ/n) w_k B_{i,k} ((x+1)/2)^k` with
/// `w_k = (1/k) / Σ_j 1/j` and `B_{i,k}` uniform on `[0,1]` scaled to unit
/// Frobenius norm; objective `uᵀ ∏ P_i v` with `u = v = 1`.
pub fn gen_perturbed_identity_tt(n: usize, r: usize, d: u32, tau: f64, seed: u64) -> Result<PerturbedTT, GeneratorError> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(GeneratorError::Param("tau must be finite and nonnegative".into()));
    }
    if r == 0 || n == 0 {
        return Err(GeneratorError::Param("rank and n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h: f64 = (1..=d).map(|j| 1.0 / j as f64).sum();
    let mut matrices = Vec::with_capacity(n);
    for _ in 0..n {
        let mut p = vec![vec![vec![0.0; d as usize + 1]; r]; r];
        for (a, row) in p.iter_mut().enumerate() {
            row[a][0] = 1.0;
        }
        for k in 1..=d {
            let mut b: Vec<Vec<f64>> = (0..r).map(|_| (0..r).map(|_| rng.random::<f64>()).collect()).collect();
            let norm = b.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
            b.iter_mut().flatten().for_each(|v| *v /= norm);
            let w = (1.0 / k as f64) / h;
            let scale = tau / n as f64 * w;
            // ((x+1)/2)^k = 2^{-k} Σ_j C(k,j) x^j
            for j in 0..=k {
                let c = scale * binomial(k as u64, j as u64) as f64 / 2f64.powi(k as i32);
                for a in 0..r {
                    for l in 0..r {
                        p[a][l][j as usize] += c * b[a][l];
                    }
                }
            }
        }
        matrices.push(p);
    }
    let u = vec![1.0; r];
    let v = vec![1.0; r];
    let fold_row = |p: &Vec<Vec<Vec<f64>>>| -> Vec<Vec<Vec<f64>>> {
        vec![(0..r)
            .map(|l| (0..=d as usize).map(|j| (0..r).map(|a| u[a] * p[a][l][j]).sum()).collect())
            .collect()]
    };
    let fold_col = |p: &Vec<Vec<Vec<f64>>>| -> Vec<Vec<Vec<f64>>> {
        (0..r)
            .map(|a| vec![(0..=d as usize).map(|j| (0..r).map(|l| p[a][l][j] * v[l]).sum()).collect()])
            .collect()
    };
    let cores = if n == 1 {
        let p = &matrices[0];
        vec![vec![vec![(0..=d as usize)
            .map(|j| (0..r).flat_map(|a| (0..r).map(move |l| (a, l))).map(|(a, l)| u[a] * p[a][l][j] * v[l]).sum())
            .collect()]]]
    } else {
        let mut c = Vec::with_capacity(n);
        c.push(fold_row(&matrices[0]));
        for p in &matrices[1..n - 1] {
            c.push(p.clone());
        }
        c.push(fold_col(&matrices[n - 1]));
        c
    };
    let cores = TTCores::new(cores).map_err(|e| GeneratorError::Param(e.to_string()))?;
    Ok(PerturbedTT { cores, u, v, matrices })
}
