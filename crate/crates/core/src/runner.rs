//! Assemble, solve and report: relaxation dispatch, default orders and the
//! CSV run report shared by the CLI and the benchmark suites.

use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainError, CompositionChain, Sense};
use crate::conic::{solve, SolveOptions, SolveResult};
use crate::extraction::ExtractionError;
use crate::poly::{Polynomial, VarKind};
use crate::problems::{Family, GeneratorError};
use crate::relax::{assemble_chord, assemble_dense, assemble_push, ChordOptions, Hierarchy, RelaxError, Relaxation};
use crate::sparsity::{chordal_cliques, CSPGraph};

/// Largest number of terms the dense expansion may produce.
pub const DENSE_TERM_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Relax(#[from] RelaxError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn half_up(d: u32) -> u32 {
    d.div_ceil(2)
}

/// Objective and constraints of the chain in the locals only, for the dense
/// hierarchy. Stage constraints that touch states are rejected.
fn dense_problem(chain: &CompositionChain) -> Result<(Polynomial, Vec<Polynomial>, Vec<Polynomial>), RunError> {
    let sp = chain.space();
    let p = chain.expand_dense(DENSE_TERM_CAP)?;
    let mut ineqs = Vec::new();
    for i in 1..=chain.n() {
        let m = chain.box_radii()[i - 1];
        for v in chain.local_ids(i) {
            ineqs.push(Polynomial::constant(sp, m * m).sub(&Polynomial::var(sp, v).pow(2)).expect("same space"));
        }
    }
    let mut eqs = Vec::new();
    for c in chain.constraints() {
        if c.poly.support().iter().any(|&v| sp.info(v).kind == VarKind::State) {
            return Err(RunError::Unsupported(format!(
                "the dense hierarchy needs constraints in the locals only; stage {} constrains a state",
                c.stage
            )));
        }
        match c.sense {
            crate::chain::ConstraintSense::NonNegative => ineqs.push(c.poly.clone()),
            crate::chain::ConstraintSense::Zero => eqs.push(c.poly.clone()),
        }
    }
    Ok((p.scale(chain.sense().sign()), ineqs, eqs))
}

/// Smallest order the hierarchy accepts for this chain.
pub fn min_order(chain: &CompositionChain, hierarchy: Hierarchy) -> Result<u32, RunError> {
    let cons = chain.constraints().iter().map(|c| c.poly.degree()).max().unwrap_or(0);
    Ok(match hierarchy {
        Hierarchy::Dense => {
            let (p, _, _) = dense_problem(chain)?;
            half_up(p.degree().max(2).max(cons))
        }
        Hierarchy::Chord => {
            let pop = chain.lift();
            let d = pop.constraints.iter().map(|c| c.poly.degree()).max().unwrap_or(1);
            half_up(d).max(1)
        }
        Hierarchy::Push => half_up(chain.max_map_degree().max(cons).max(2)),
    })
}

/// Default order: minimal for dense, family-specific for the sparse
/// hierarchies, raised to the minimum admissible order when needed.
pub fn default_order(chain: &CompositionChain, family: Option<Family>, degree: u32, hierarchy: Hierarchy) -> Result<u32, RunError> {
    let min = min_order(chain, hierarchy)?;
    let preferred = match (hierarchy, family) {
        (Hierarchy::Dense, _) => min,
        (Hierarchy::Chord, Some(Family::Quantum | Family::Nn)) => 2,
        (Hierarchy::Chord, _) => 3,
        (Hierarchy::Push, Some(Family::RandomQuadraticComposition)) => 4,
        (Hierarchy::Push, Some(Family::RandomTt)) if degree >= 4 => 10,
        (Hierarchy::Push, Some(Family::MarkovChebyshev)) => 5,
        (Hierarchy::Push, Some(Family::Quantum)) => 2,
        (Hierarchy::Push, _) => 3,
    };
    Ok(preferred.max(min))
}

/// Builds the relaxation of `chain` at order `k`.
pub fn assemble(chain: &CompositionChain, hierarchy: Hierarchy, k: u32) -> Result<Relaxation, RunError> {
    Ok(match hierarchy {
        Hierarchy::Dense => {
            let (obj, ineqs, eqs) = dense_problem(chain)?;
            let mut r = assemble_dense(&obj, &ineqs, &eqs, k)?;
            r.sign = chain.sense().sign();
            r
        }
        Hierarchy::Chord => {
            let pop = chain.lift();
            let dec = chordal_cliques(&CSPGraph::build(&pop), &pop);
            assemble_chord(&pop, &dec, k, ChordOptions::default())?
        }
        Hierarchy::Push => assemble_push(chain, k)?,
    })
}

/// One row of a run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub family: String,
    pub n: usize,
    pub seed: Option<u64>,
    pub hierarchy: String,
    pub order: u32,
    pub bound: f64,
    pub status: String,
    /// Wall time of assembly plus solve, in seconds.
    pub time: f64,
    pub max_block: usize,
    pub constraints: usize,
    pub extraction: String,
}

/// Column names of [`RunReport`], in order.
pub const REPORT_HEADER: [&str; 11] =
    ["family", "n", "seed", "hierarchy", "order", "bound", "status", "time", "max_block", "constraints", "extraction"];

/// What a run is about, for the report.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLabel {
    pub family: String,
    pub seed: Option<u64>,
}

impl RunLabel {
    pub fn new(family: impl Into<String>, seed: Option<u64>) -> Self {
        Self { family: family.into(), seed }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub relaxation: Relaxation,
    pub result: SolveResult,
    pub report: RunReport,
}

impl RunOutcome {
    pub fn bound(&self) -> f64 {
        self.relaxation.bound(&self.result)
    }

    pub fn solved(&self) -> bool {
        self.result.status.is_solved()
    }
}

/// Assembles and solves; the report's block size and constraint count are
/// read from the assembled program.
pub fn run(chain: &CompositionChain, label: &RunLabel, hierarchy: Hierarchy, k: u32, opts: &SolveOptions) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let relaxation = assemble(chain, hierarchy, k)?;
    let result = solve(&relaxation.program, opts);
    let bound = if result.status.is_solved() { relaxation.bound(&result) } else { f64::NAN };
    let report = RunReport {
        family: label.family.clone(),
        n: chain.n(),
        seed: label.seed,
        hierarchy: hierarchy.as_str().into(),
        order: k,
        bound,
        status: result.status.as_str().into(),
        time: start.elapsed().as_secs_f64(),
        max_block: relaxation.max_block_dim(),
        constraints: relaxation.program.num_constraints(),
        extraction: String::new(),
    };
    Ok(RunOutcome { relaxation, result, report })
}

/// Writes the header and one row per report.
pub fn write_reports<W: Write>(w: W, reports: &[RunReport]) -> Result<(), RunError> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(REPORT_HEADER)?;
    for r in reports {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn reports_to_csv(reports: &[RunReport]) -> String {
    let mut buf = Vec::new();
    write_reports(&mut buf, reports).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Reads a report written by [`write_reports`]; the header must match.
pub fn read_reports<R: Read>(r: R) -> Result<Vec<RunReport>, RunError> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    if header.iter().ne(REPORT_HEADER) {
        return Err(RunError::Unsupported(format!("unexpected report header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    rd.deserialize().map(|r| r.map_err(RunError::from)).collect()
}

/// Report CSV with the time column blanked, for reproducibility checks.
pub fn without_times(csv_text: &str) -> String {
    let col = REPORT_HEADER.iter().position(|&c| c == "time").unwrap();
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(csv_text.as_bytes());
    let mut wr = csv::Writer::from_writer(Vec::new());
    for rec in rd.records() {
        let rec = rec.expect("valid csv");
        let row: Vec<&str> = rec.iter().enumerate().map(|(i, f)| if i == col { "" } else { f }).collect();
        wr.write_record(row).expect("writing to memory");
    }
    String::from_utf8(wr.into_inner().expect("flush")).expect("utf-8")
}

/// `sense`-aware comparison: is `a` at least as good a bound as `b`?
pub fn bound_side(sense: Sense, bound: f64, value: f64, slack: f64) -> bool {
    match sense {
        Sense::Minimize => bound <= value + slack,
        Sense::Maximize => bound >= value - slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{generate, markov_oracle, GeneratorSpec};

    #[test]
    fn report_round_trip() {
        let r = RunReport {
            family: "markov-quadratic".into(),
            n: 3,
            seed: None,
            hierarchy: "chord".into(),
            order: 3,
            bound: 0.8645,
            status: "optimal".into(),
            time: 1.5,
            max_block: 56,
            constraints: 100,
            extraction: "first-moment=0.8645".into(),
        };
        let mut s = r.clone();
        s.seed = Some(4);
        s.bound = f64::NAN;
        let text = reports_to_csv(&[r.clone(), s]);
        assert!(text.starts_with("family,n,seed,hierarchy,order,bound,status,time,max_block,constraints,extraction\n"));
        let back = read_reports(text.as_bytes()).unwrap();
        assert_eq!(back[0], r);
        assert_eq!(back[1].seed, Some(4));
        assert!(back[1].bound.is_nan());
        assert!(read_reports("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn dense_rejects_state_constraints() {
        let inst = generate(&GeneratorSpec::new(Family::Quantum, 2, 0)).unwrap();
        assert!(matches!(assemble(&inst.chain, Hierarchy::Dense, 2), Err(RunError::Unsupported(_))));
    }

    #[test]
    fn markov_push_run() {
        let inst = generate(&GeneratorSpec::new(Family::MarkovQuadratic, 2, 0)).unwrap();
        let k = default_order(&inst.chain, Some(Family::MarkovQuadratic), 2, Hierarchy::Push).unwrap();
        assert_eq!(k, 3);
        let out = run(&inst.chain, &RunLabel::new("markov-quadratic", None), Hierarchy::Push, k, &SolveOptions::default()).unwrap();
        assert!(out.solved());
        assert!((out.bound() - markov_oracle(2)).abs() < 1e-5);
        assert_eq!(out.report.max_block, out.relaxation.program.max_block_dim());
    }

    #[test]
    fn times_are_blanked() {
        let a = "family,n,seed,hierarchy,order,bound,status,time,max_block,constraints,extraction\nx,1,,dense,1,0.5,optimal,0.25,3,4,\n";
        let b = a.replace("0.25", "9.0");
        assert_eq!(without_times(a), without_times(&b));
    }
}
