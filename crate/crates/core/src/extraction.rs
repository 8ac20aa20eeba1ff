//! Candidate minimizers from moment solutions: first-moment readout and
//! sequential randomized extraction along a chain.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::chain::CompositionChain;
use crate::conic::SolveResult;
use crate::poly::{Monomial, VarId};
use crate::relax::{Hierarchy, Relaxation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractionError {
    #[error("sampling budget of {0} draws exhausted at stage {1}")]
    Budget(usize, usize),
    #[error("extraction needs a solved push-forward relaxation")]
    NotPush,
    #[error("invalid extraction settings: {0}")]
    Config(String),
}

/// Feasibility projection applied to sampled locals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Clamp each local into its box.
    BoxClamp,
    /// Locals are `(sin θ, cos θ)`: normalize, clamp `θ` to `±theta_max`.
    Rotation { theta_max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionConfig {
    /// Accepted distance between a sampled previous state and the propagated one.
    pub tau: f64,
    pub samples: usize,
    /// Samples with `|ω_1|` below this are discarded.
    pub threshold: f64,
    pub seed: u64,
    pub seeds: usize,
    pub projection: Projection,
    /// Overlap target for intermediate states, if the family has one.
    pub target: Option<Vec<f64>>,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            tau: 0.1,
            samples: 200,
            threshold: 1e-6,
            seed: 0,
            seeds: 20,
            projection: Projection::BoxClamp,
            target: None,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<(), ExtractionError> {
        if !(self.tau > 0.0) {
            return Err(ExtractionError::Config("tau must be positive".into()));
        }
        if self.samples == 0 || self.seeds == 0 {
            return Err(ExtractionError::Config("samples and seeds must be at least 1".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(ExtractionError::Config("threshold must be positive".into()));
        }
        Ok(())
    }
}

/// Point read from first-order moments.
#[derive(Debug, Clone)]
pub struct MomentPoint {
    /// Value per variable id; `NaN` where no measure carries the variable.
    pub values: Vec<f64>,
    /// Locals per stage, clamped into the boxes.
    pub controls: Vec<Vec<f64>>,
    /// Chain value at the controls.
    pub value: f64,
    /// Largest gap between the read states and the states propagated from the controls.
    pub state_residual: f64,
}

/// Averages the degree-one moments of every measure holding each variable.
pub fn first_moments(relax: &Relaxation, res: &SolveResult, chain: &CompositionChain) -> MomentPoint {
    let nv = chain.space().len();
    let mut sum = vec![0.0; nv];
    let mut count = vec![0usize; nv];
    for m in &relax.measures {
        for (v, val) in m.first_moments(&res.x) {
            sum[v] += val;
            count[v] += 1;
        }
    }
    let values: Vec<f64> = sum.iter().zip(&count).map(|(&s, &c)| if c > 0 { s / c as f64 } else { f64::NAN }).collect();
    let controls: Vec<Vec<f64>> = (1..=chain.n())
        .map(|i| {
            let m = chain.box_radii()[i - 1];
            chain.local_ids(i).iter().map(|&v| values[v].clamp(-m, m)).collect()
        })
        .collect();
    let (value, traj) = chain.eval(&controls);
    let mut state_residual: f64 = 0.0;
    for (i, s) in traj.iter().enumerate() {
        for (l, &v) in s.iter().enumerate() {
            let read = values[chain.space().state_id(i + 1, l + 1).unwrap()];
            if read.is_finite() {
                state_residual = state_residual.max((read - v).abs());
            }
        }
    }
    MomentPoint { values, controls, value, state_residual }
}

/// Gaussian sampler with covariance equal to a moment matrix.
#[derive(Debug, Clone)]
pub struct MomentSampler {
    factor: DMatrix<f64>,
    constant_row: usize,
    /// `(variable, row)` for every degree-one label.
    linear_rows: Vec<(VarId, usize)>,
}

impl MomentSampler {
    /// Factors `M = V Vᵀ` by eigendecomposition. Eigenvalues below
    /// `1e-12·λ_max` are round-off and are clipped to zero.
    pub fn new(m: &DMatrix<f64>, labels: &[Monomial]) -> Self {
        let eig = m.clone().symmetric_eigen();
        let cut = 1e-12 * eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l));
        let d = DVector::from_iterator(
            eig.eigenvalues.len(),
            eig.eigenvalues.iter().map(|&l| if l > cut { l.sqrt() } else { 0.0 }),
        );
        let factor = eig.eigenvectors * DMatrix::from_diagonal(&d);
        let constant_row = labels.iter().position(Monomial::is_one).expect("basis contains the constant monomial");
        let linear_rows = labels
            .iter()
            .enumerate()
            .filter(|(_, b)| b.degree() == 1)
            .map(|(r, b)| (b.vars().next().unwrap(), r))
            .collect();
        Self { factor, constant_row, linear_rows }
    }

    /// One draw `ω = V g`.
    pub fn omega(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let g = DVector::from_iterator(self.factor.ncols(), (0..self.factor.ncols()).map(|_| StandardNormal.sample(rng)));
        &self.factor * g
    }

    /// Linear entries divided by the constant entry, resampling when the
    /// constant entry is below `threshold`. Fails after `max_draws` draws.
    pub fn candidate(&self, rng: &mut ChaCha8Rng, threshold: f64, max_draws: usize) -> Option<Vec<(VarId, f64)>> {
        for _ in 0..max_draws {
            let w = self.omega(rng);
            let w1 = w[self.constant_row];
            if w1.abs() >= threshold {
                return Some(self.linear_rows.iter().map(|&(v, r)| (v, w[r] / w1)).collect());
            }
        }
        None
    }
}

/// Controls and the trajectory they generate.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub controls: Vec<Vec<f64>>,
    pub states: Vec<Vec<f64>>,
    /// `s_{n,1}` at the controls.
    pub objective: f64,
    pub seed: u64,
}

impl Trajectory {
    pub fn from_controls(chain: &CompositionChain, controls: Vec<Vec<f64>>, seed: u64) -> Self {
        let (objective, states) = chain.eval(&controls);
        Self { controls, states, objective, seed }
    }

    /// `stage,x1..,s1..` rows; widths are padded to the widest stage.
    pub fn to_csv(&self) -> String {
        let mx = self.controls.iter().map(Vec::len).max().unwrap_or(0);
        let ms = self.states.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = String::from("stage");
        for j in 1..=mx {
            let _ = write!(out, ",x{j}");
        }
        for l in 1..=ms {
            let _ = write!(out, ",s{l}");
        }
        out.push('\n');
        for (i, (x, s)) in self.controls.iter().zip(&self.states).enumerate() {
            let _ = write!(out, "{}", i + 1);
            for j in 0..mx {
                let _ = write!(out, ",{}", x.get(j).map_or(String::new(), |v| format!("{v:?}")));
            }
            for l in 0..ms {
                let _ = write!(out, ",{}", s.get(l).map_or(String::new(), |v| format!("{v:?}")));
            }
            out.push('\n');
        }
        out
    }
}

fn project(p: Projection, x: &mut [f64], radius: f64) {
    match p {
        Projection::BoxClamp => x.iter_mut().for_each(|v| *v = v.clamp(-radius, radius)),
        Projection::Rotation { theta_max } => {
            let theta = if x[0] == 0.0 && x[1] == 0.0 { 0.0 } else { x[0].atan2(x[1]) };
            let theta = theta.clamp(-theta_max, theta_max);
            x[0] = theta.sin();
            x[1] = theta.cos();
        }
    }
}

fn run_seed(relax: &Relaxation, res: &SolveResult, chain: &CompositionChain, cfg: &ExtractionConfig, seed: u64) -> Result<Trajectory, ExtractionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = chain.n();
    let maximize = chain.sense().sign() < 0.0;
    let budget = 100 * cfg.samples;
    let mut prev: Vec<f64> = Vec::new();
    let mut controls = Vec::with_capacity(n);
    for k in 1..=n {
        let lay = &relax.measures[k - 1];
        let (m, labels) = res.moment_matrix(&relax.program, lay.moment_block).map_err(|_| ExtractionError::NotPush)?;
        let sampler = MomentSampler::new(m, labels);
        let prev_ids = chain.state_ids(k - 1);
        let local_ids = chain.local_ids(k);
        let radius = chain.box_radii()[k - 1];
        let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
        let mut draws = 0;
        while draws < cfg.samples || (best.is_none() && draws < budget) {
            draws += 1;
            let Some(cand) = sampler.candidate(&mut rng, cfg.threshold, budget) else {
                return Err(ExtractionError::Budget(budget, k));
            };
            let value = |v: VarId| cand.iter().find(|&&(w, _)| w == v).map_or(0.0, |&(_, x)| x);
            let dist = prev_ids.iter().zip(&prev).map(|(&v, &p)| (value(v) - p).powi(2)).sum::<f64>().sqrt();
            if dist > cfg.tau {
                continue;
            }
            let mut x: Vec<f64> = local_ids.iter().map(|&v| value(v)).collect();
            project(cfg.projection, &mut x, radius);
            let next = chain.step(k, &prev, &x);
            let score = if k == n {
                if maximize { next[0] } else { -next[0] }
            } else if let Some(t) = &cfg.target {
                next.iter().zip(t).map(|(a, b)| a * b).sum()
            } else {
                -dist
            };
            if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
                best = Some((score, x, next));
            }
        }
        let Some((_, x, next)) = best else {
            return Err(ExtractionError::Budget(budget, k));
        };
        controls.push(x);
        prev = next;
    }
    Ok(Trajectory::from_controls(chain, controls, seed))
}

/// Sequential randomized extraction over `cfg.seeds` independent seeds; the
/// best trajectory in the problem's sense wins, earliest seed on ties.
pub fn extract_sequential(relax: &Relaxation, res: &SolveResult, chain: &CompositionChain, cfg: &ExtractionConfig) -> Result<Trajectory, ExtractionError> {
    cfg.validate()?;
    if relax.hierarchy != Hierarchy::Push || relax.measures.len() != chain.n() || !res.status.is_solved() {
        return Err(ExtractionError::NotPush);
    }
    let runs: Vec<Result<Trajectory, ExtractionError>> = (0..cfg.seeds as u64)
        .into_par_iter()
        .map(|s| run_seed(relax, res, chain, cfg, cfg.seed.wrapping_add(s)))
        .collect();
    let sign = chain.sense().sign();
    let mut best: Option<Trajectory> = None;
    let mut last_err = None;
    for r in runs {
        match r {
            Ok(t) => {
                if best.as_ref().is_none_or(|b| sign * t.objective < sign * b.objective) {
                    best = Some(t);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap())
}
