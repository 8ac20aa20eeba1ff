//! Instance generators for the benchmark families, analytic oracles, and a
//! projected-gradient baseline.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)` so instances
//! are reproducible across platforms.

mod gradient;
mod markov;
mod nn;
mod quantum;
mod random;

pub use gradient::{chain_gradient, projected_gradient, GradientResult};
pub use markov::{markov_chebyshev_problem, markov_oracle, markov_problem, markov_quadratic};
pub use nn::{nn_parameters, nn_problem, NnParameters};
pub use quantum::quantum_problem;
pub use random::{gen_perturbed_identity_tt, gen_random_quadratic_composition, gen_random_tt, PerturbedTT};

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chain::{chain_from_tt, ChainError, CompositionChain, Sense};
use crate::extraction::Projection;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid generator parameter: {0}")]
    Param(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Generator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    RandomQuadraticComposition,
    RandomTt,
    PerturbedTt,
    MarkovQuadratic,
    MarkovChebyshev,
    Quantum,
    Nn,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::RandomQuadraticComposition,
        Family::RandomTt,
        Family::PerturbedTt,
        Family::MarkovQuadratic,
        Family::MarkovChebyshev,
        Family::Quantum,
        Family::Nn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::RandomQuadraticComposition => "random-quadratic",
            Family::RandomTt => "random-tt",
            Family::PerturbedTt => "perturbed-tt",
            Family::MarkovQuadratic => "markov-quadratic",
            Family::MarkovChebyshev => "markov-chebyshev",
            Family::Quantum => "quantum",
            Family::Nn => "nn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.as_str() == s)
    }
}

/// Parameters shared by all families; each family reads the ones it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: usize,
    pub rank: usize,
    pub degree: u32,
    pub seed: u64,
    /// Perturbation size of the perturbed-identity family.
    pub tau: f64,
    /// Rotation bound of the quantum family; `None` leaves angles free.
    pub theta_max: Option<f64>,
    /// Cubic activation weight of the network family.
    pub alpha: f64,
    /// Stage whose first state component the network objective reads.
    pub stage: Option<usize>,
    pub sense: Option<Sense>,
    pub s0: Vec<f64>,
    pub target: Vec<f64>,
}

impl GeneratorSpec {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        let (s0, target) = match family {
            Family::Quantum => (vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]),
            _ => (Vec::new(), Vec::new()),
        };
        Self {
            family,
            n,
            rank: match family {
                Family::Nn => 3,
                _ => 2,
            },
            degree: match family {
                Family::MarkovChebyshev => 4,
                _ => 2,
            },
            seed,
            tau: 0.1,
            theta_max: None,
            alpha: 0.2,
            stage: None,
            sense: None,
            s0,
            target,
        }
    }
}

/// Generated chain plus what extraction and sampling need to know about it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub chain: CompositionChain,
    pub family: Family,
    pub projection: Projection,
    pub target: Option<Vec<f64>>,
    /// Construction choices worth recording next to results.
    pub metadata: BTreeMap<String, String>,
}

impl Instance {
    fn plain(chain: CompositionChain, family: Family) -> Self {
        Self { chain, family, projection: Projection::BoxClamp, target: None, metadata: BTreeMap::new() }
    }

    /// Uniformly random feasible controls.
    pub fn sample_controls(&self, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let c = &self.chain;
        (1..=c.n())
            .map(|i| match self.projection {
                Projection::Rotation { theta_max } => {
                    let t: f64 = rng.random_range(-theta_max..=theta_max);
                    vec![t.sin(), t.cos()]
                }
                Projection::BoxClamp => {
                    let m = c.box_radii()[i - 1];
                    (0..c.local_widths()[i - 1]).map(|_| rng.random_range(-m..=m)).collect()
                }
            })
            .collect()
    }
}

/// Builds the instance described by `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<Instance, GeneratorError> {
    if spec.n == 0 {
        return Err(GeneratorError::Param("n must be at least 1".into()));
    }
    let inst = match spec.family {
        Family::RandomQuadraticComposition => {
            Instance::plain(gen_random_quadratic_composition(spec.n, spec.seed)?, spec.family)
        }
        Family::RandomTt => {
            let tt = gen_random_tt(spec.n, spec.rank, spec.degree, spec.seed)?;
            Instance::plain(chain_from_tt(&tt)?, spec.family)
        }
        Family::PerturbedTt => {
            if !(spec.tau > 0.0) {
                return Err(GeneratorError::Param("tau must be positive".into()));
            }
            let p = gen_perturbed_identity_tt(spec.n, spec.rank, spec.degree, spec.tau, spec.seed)?;
            let mut inst = Instance::plain(chain_from_tt(&p.cores)?, spec.family);
            inst.metadata.insert("b_normalization".into(), "frobenius".into());
            inst.metadata.insert("w_k".into(), "(1/k)/H_d".into());
            inst
        }
        Family::MarkovQuadratic => {
            let mut inst = Instance::plain(markov_quadratic(spec.n)?, spec.family);
            inst.metadata.insert("oracle".into(), format!("{:?}", markov_oracle(spec.n)));
            inst
        }
        Family::MarkovChebyshev => {
            let mut inst = Instance::plain(markov_chebyshev_problem(spec.n, spec.seed)?, spec.family);
            inst.metadata.insert("construction".into(), "0.5+0.45*normalized Chebyshev T1..T4 mix".into());
            inst
        }
        Family::Quantum => {
            let theta = spec.theta_max.unwrap_or(std::f64::consts::PI);
            let s0: [f64; 3] = spec.s0.clone().try_into().map_err(|_| GeneratorError::Param("s0 needs 3 entries".into()))?;
            let t: [f64; 3] = spec.target.clone().try_into().map_err(|_| GeneratorError::Param("target needs 3 entries".into()))?;
            let chain = quantum_problem(spec.n, spec.theta_max, s0, t)?;
            let mut inst = Instance::plain(chain, spec.family);
            inst.projection = Projection::Rotation { theta_max: theta };
            inst.target = Some(t.to_vec());
            let c_min = spec.theta_max.map_or(-1.0, f64::cos);
            inst.metadata.insert("c_min".into(), format!("{c_min:?}"));
            inst
        }
        Family::Nn => {
            let params = nn_parameters(spec.n, spec.rank, spec.seed);
            let stage = spec.stage.unwrap_or(spec.n);
            let chain = nn_problem(&params, spec.alpha, stage, spec.sense.unwrap_or(Sense::Maximize))?;
            let mut inst = Instance::plain(chain, spec.family);
            inst.metadata.insert("alpha".into(), format!("{:?}", spec.alpha));
            inst
        }
    };
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_round_trip_names() {
        for f in Family::ALL {
            assert_eq!(Family::parse(f.as_str()), Some(f));
        }
    }

    #[test]
    fn every_family_generates() {
        for f in Family::ALL {
            let spec = GeneratorSpec::new(f, 3, 5);
            let inst = generate(&spec).unwrap();
            assert_eq!(inst.chain.n(), 3, "{f:?}");
        }
    }
}
