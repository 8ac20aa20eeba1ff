#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use statelift::chain::{ChainParts, CompositionChain};
use statelift::poly::Polynomial;

/// Point over all variables with the states of the trajectory at `x`.
pub fn full_point(chain: &CompositionChain, x: &[Vec<f64>]) -> Vec<f64> {
    let (_, traj) = chain.eval(x);
    let sp = chain.space();
    let mut point = chain.point_from_locals(x);
    for (i, s) in traj.iter().enumerate() {
        for (l, &v) in s.iter().enumerate() {
            point[sp.state_id(i + 1, l + 1).unwrap()] = v;
        }
    }
    point
}

/// Uniform controls in the boxes of `chain`.
pub fn box_controls(chain: &CompositionChain, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..chain.n())
        .map(|i| {
            let m = chain.box_radii()[i];
            (0..chain.local_widths()[i]).map(|_| rng.random_range(-m..=m)).collect()
        })
        .collect()
}

/// Chain with interface ranks `r_1..r_{n-1}` (the output rank is 1) and
/// scalar locals whose stage maps are bilinear in `(s_{i-1}, (1, x_i, x_i²))`
/// with random coefficients.
pub fn dense_chain(interface: &[usize], seed: u64) -> CompositionChain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ranks: Vec<usize> = interface.iter().copied().chain([1]).collect();
    let n = ranks.len();
    let mut parts = ChainParts::new(ranks.clone(), vec![1; n]);
    for i in 1..=n {
        let x = parts.x(i, 1);
        let powers = [Polynomial::constant(&parts.space, 1.0), x.clone(), x.pow(2)];
        let inputs: Vec<Polynomial> =
            if i == 1 { vec![Polynomial::constant(&parts.space, 1.0)] } else { (1..=ranks[i - 2]).map(|a| parts.s(i - 1, a)).collect() };
        parts.stages[i - 1] = (0..ranks[i - 1])
            .map(|_| {
                let mut f = Polynomial::zero(&parts.space);
                for s in &inputs {
                    for p in &powers {
                        let c: f64 = rng.random_range(-0.5..=0.5);
                        f = f.add(&s.mul(p).unwrap().scale(c)).unwrap();
                    }
                }
                f
            })
            .collect();
    }
    CompositionChain::new(parts).unwrap()
}
