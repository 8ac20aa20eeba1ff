use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, PSDTriangleConeT, SolverStatus, SupportedConeT,
    ZeroConeT,
};
use log::{debug, warn};
use nalgebra::DMatrix;

use super::{sdpa, ConicProgram};
use crate::poly::Monomial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    Unbounded,
    Stall,
    Timeout,
    /// Not attempted: the solver's estimated working set exceeds the budget.
    MemoryLimit,
}

impl SolveStatus {
    pub fn is_solved(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::NearOptimal => "near-optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Stall => "stall",
            SolveStatus::Timeout => "timeout",
            SolveStatus::MemoryLimit => "memory-limit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            SolveStatus::Optimal,
            SolveStatus::NearOptimal,
            SolveStatus::Infeasible,
            SolveStatus::Unbounded,
            SolveStatus::Stall,
            SolveStatus::Timeout,
            SolveStatus::MemoryLimit,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which solver runs the program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    /// Interior-point solver linked into the process.
    InProcess,
    /// `<command> <in.dat-s> <out.sol>`; the first line of the solution file
    /// holds the variable vector.
    External(String),
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: u32,
    pub time_limit: Duration,
    pub verbose: bool,
    pub backend: Backend,
    /// Upper limit on the in-process solver's estimated memory, in bytes.
    pub memory_budget: u64,
    /// Static KKT regularization of the in-process solver. Moment programs
    /// with lifting equalities have no interior, and the solver's default of
    /// 1e-8 stalls on them.
    pub static_regularization: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            time_limit: Duration::from_secs(300),
            verbose: false,
            backend: Backend::InProcess,
            memory_budget: 4 << 30,
            static_regularization: 1e-7,
        }
    }
}

impl SolveOptions {
    /// Defaults overridden by `STATELIFT_SOLVER` (`inprocess` or
    /// `external:<command>`), `STATELIFT_TOL` and `STATELIFT_MEMORY_GB`.
    pub fn from_env() -> Self {
        let mut o = Self::default();
        if let Ok(s) = std::env::var("STATELIFT_SOLVER") {
            match s.strip_prefix("external:") {
                Some(cmd) => o.backend = Backend::External(cmd.to_string()),
                None if s == "inprocess" || s.is_empty() => {}
                None => warn!("ignoring unknown STATELIFT_SOLVER value `{s}`"),
            }
        }
        if let Ok(t) = std::env::var("STATELIFT_TOL") {
            match t.parse::<f64>() {
                Ok(v) if v > 0.0 => o.tol = v,
                _ => warn!("ignoring invalid STATELIFT_TOL value `{t}`"),
            }
        }
        if let Ok(g) = std::env::var("STATELIFT_MEMORY_GB") {
            match g.parse::<f64>() {
                Ok(v) if v > 0.0 => o.memory_budget = (v * (1u64 << 30) as f64) as u64,
                _ => warn!("ignoring invalid STATELIFT_MEMORY_GB value `{g}`"),
            }
        }
        o
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Primal objective of the program (the bound, in minimization form).
    pub objective: f64,
    pub dual_objective: f64,
    pub x: Vec<f64>,
    /// Block matrices evaluated at `x`.
    pub blocks: Vec<DMatrix<f64>>,
    /// Multipliers of the equality rows.
    pub equality_duals: Vec<f64>,
    pub iterations: u32,
    pub solve_time: Duration,
}

impl SolveResult {
    fn failed(status: SolveStatus, elapsed: Duration) -> Self {
        Self {
            status,
            objective: f64::NAN,
            dual_objective: f64::NAN,
            x: Vec::new(),
            blocks: Vec::new(),
            equality_duals: Vec::new(),
            iterations: 0,
            solve_time: elapsed,
        }
    }

    /// Block matrix `b` and its monomial labels (empty for non-moment blocks).
    pub fn moment_matrix<'a>(
        &'a self,
        program: &'a ConicProgram,
        b: usize,
    ) -> Result<(&'a DMatrix<f64>, &'a [Monomial]), String> {
        let m = self.blocks.get(b).ok_or_else(|| format!("block index {b} out of range"))?;
        let labels = match &program.blocks[b].kind {
            super::BlockKind::Moment { basis, .. } => basis.as_slice(),
            _ => &[],
        };
        Ok((m, labels))
    }
}

/// Bytes the in-process solver needs, dominated by one dense
/// `svec(d)² ` scaling block per PSD cone in the KKT system and its factor.
/// The per-entry constant was measured on chordal order-3 programs.
pub fn estimated_memory(p: &ConicProgram) -> u64 {
    const BYTES_PER_ENTRY: u64 = 48;
    let dense: u64 = p.blocks.iter().map(|b| ((b.dim * (b.dim + 1) / 2) as u64).pow(2)).sum();
    let sparse: u64 = p.equalities.iter().chain(&p.inequalities).map(|r| r.terms.len() as u64 + 1).sum();
    BYTES_PER_ENTRY * (dense + sparse) + 64 * p.num_vars as u64
}

/// Solves with the configured backend. Backend failures are reported through
/// the status, never as a panic.
pub fn solve(p: &ConicProgram, opts: &SolveOptions) -> SolveResult {
    match &opts.backend {
        Backend::InProcess => solve_clarabel(p, opts),
        Backend::External(cmd) => solve_external(p, cmd, opts),
    }
}

fn finish(p: &ConicProgram, status: SolveStatus, x: Vec<f64>, duals: Vec<f64>, dual_obj: f64, it: u32, t: Duration) -> SolveResult {
    let objective = p.objective.eval(&x);
    let blocks = p.blocks.iter().map(|b| b.eval(&x)).collect();
    SolveResult { status, objective, dual_objective: dual_obj, x, blocks, equality_duals: duals, iterations: it, solve_time: t }
}

fn solve_clarabel(p: &ConicProgram, opts: &SolveOptions) -> SolveResult {
    let start = Instant::now();
    let need = estimated_memory(p);
    if need > opts.memory_budget {
        warn!("skipping solve: estimated {:.1} GiB exceeds the {:.1} GiB budget", need as f64 / (1u64 << 30) as f64, opts.memory_budget as f64 / (1u64 << 30) as f64);
        return SolveResult::failed(SolveStatus::MemoryLimit, start.elapsed());
    }
    let n = p.num_vars;
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut b = Vec::new();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    // Equalities a·x + c = 0  ⇒  a·x + s = −c, s ∈ {0}.
    for row in &p.equalities {
        let r = b.len();
        for &(v, c) in &row.terms {
            rows.push(r);
            cols.push(v);
            vals.push(c);
        }
        b.push(-row.constant);
    }
    if !p.equalities.is_empty() {
        cones.push(ZeroConeT(p.equalities.len()));
    }
    // Inequalities a·x + c ≥ 0  ⇒  −a·x + s = c, s ≥ 0.
    for row in &p.inequalities {
        let r = b.len();
        for &(v, c) in &row.terms {
            rows.push(r);
            cols.push(v);
            vals.push(-c);
        }
        b.push(row.constant);
    }
    if !p.inequalities.is_empty() {
        cones.push(NonnegativeConeT(p.inequalities.len()));
    }
    // PSD blocks: s = svec(const + L x) with off-diagonals scaled by √2.
    let sqrt2 = std::f64::consts::SQRT_2;
    for blk in &p.blocks {
        if blk.dim == 0 {
            continue;
        }
        for j in 0..blk.dim {
            for i in 0..=j {
                let f = blk.entry(i, j);
                let scale = if i == j { 1.0 } else { sqrt2 };
                let r = b.len();
                for &(v, c) in &f.terms {
                    rows.push(r);
                    cols.push(v);
                    vals.push(-scale * c);
                }
                b.push(scale * f.constant);
            }
        }
        cones.push(PSDTriangleConeT(blk.dim));
    }
    let m = b.len();
    let a = CscMatrix::new_from_triplets(m, n, rows, cols, vals);
    let pmat = CscMatrix::zeros((n, n));
    let mut q = vec![0.0; n];
    for &(v, c) in &p.objective.terms {
        q[v] += c;
    }
    let settings = DefaultSettingsBuilder::default()
        .verbose(opts.verbose)
        .max_iter(opts.max_iter)
        .time_limit(opts.time_limit.as_secs_f64())
        .tol_feas(opts.tol)
        .tol_gap_abs(opts.tol)
        .tol_gap_rel(opts.tol)
        .direct_solve_method("faer".into())
        .static_regularization_constant(opts.static_regularization)
        .build()
        .expect("valid solver settings");
    let mut solver = match DefaultSolver::new(&pmat, &q, &a, &b, &cones, settings) {
        Ok(s) => s,
        Err(e) => {
            warn!("solver setup failed: {e}");
            return SolveResult::failed(SolveStatus::Stall, start.elapsed());
        }
    };
    solver.solve();
    let sol = &solver.solution;
    let status = match sol.status {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::AlmostSolved => SolveStatus::NearOptimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        SolverStatus::MaxTime => SolveStatus::Timeout,
        _ => SolveStatus::Stall,
    };
    debug!(
        "solved {} vars, {} rows, {} blocks: {:?} in {} iterations",
        n,
        m,
        p.blocks.len(),
        sol.status,
        sol.iterations
    );
    let duals = sol.z[..p.equalities.len()].to_vec();
    let dual_obj = sol.obj_val_dual + p.objective.constant;
    finish(p, status, sol.x.clone(), duals, dual_obj, sol.iterations, start.elapsed())
}

fn solve_external(p: &ConicProgram, cmd: &str, opts: &SolveOptions) -> SolveResult {
    let start = Instant::now();
    let run = || -> Result<Vec<f64>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let input = dir.path().join("problem.dat-s");
        let output = dir.path().join("problem.sol");
        std::fs::write(&input, sdpa::write_sdpa(p)).map_err(|e| e.to_string())?;
        let mut parts = cmd.split_whitespace();
        let prog = parts.next().ok_or("empty external solver command")?;
        let status = Command::new(prog)
            .args(parts)
            .arg(&input)
            .arg(&output)
            .env("STATELIFT_TOL", opts.tol.to_string())
            .status()
            .map_err(|e| format!("cannot run `{prog}`: {e}"))?;
        if !status.success() && !Path::new(&output).exists() {
            return Err(format!("external solver exited with {status}"));
        }
        let text = std::fs::read_to_string(&output).map_err(|e| e.to_string())?;
        let first = text.lines().next().ok_or("empty solution file")?;
        first
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| format!("bad solution entry `{t}`: {e}")))
            .collect()
    };
    match run() {
        Ok(x) if x.len() == p.num_vars => {
            let elapsed = start.elapsed();
            let mut res = finish(p, SolveStatus::Optimal, x, Vec::new(), f64::NAN, 0, elapsed);
            let tol = (opts.tol * 1e3).max(1e-6);
            if p.linear_residual(&res.x) > tol || p.min_block_eigenvalue(&res.x) < -tol {
                res.status = SolveStatus::Stall;
            }
            res
        }
        Ok(x) => {
            warn!("external solver returned {} values, expected {}", x.len(), p.num_vars);
            SolveResult::failed(SolveStatus::Stall, start.elapsed())
        }
        Err(e) => {
            warn!("external solver failed: {e}");
            SolveResult::failed(SolveStatus::Stall, start.elapsed())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{BlockKind, LinearForm, PsdBlock};

    /// min x s.t. [[1, x], [x, 1]] ⪰ 0.
    fn disk() -> ConicProgram {
        let mut p = ConicProgram::new();
        let x = p.add_var();
        p.objective = LinearForm::var(x);
        let mut b = PsdBlock::new(2, "m", BlockKind::Generic);
        b.set(0, 0, LinearForm::constant(1.0));
        b.set(1, 1, LinearForm::constant(1.0));
        b.set(0, 1, LinearForm::var(x));
        p.add_block(b);
        p
    }

    #[test]
    fn solves_small_lmi() {
        let r = solve(&disk(), &SolveOptions::default());
        assert!(r.status.is_solved());
        assert!((r.objective + 1.0).abs() < 1e-6);
        assert!(r.blocks[0].symmetric_eigenvalues().min() > -1e-7);
    }

    #[test]
    fn infeasible_is_reported() {
        let mut p = disk();
        p.add_equality(LinearForm::from_terms(-3.0, [(0, 1.0)]), "fix");
        let r = solve(&p, &SolveOptions::default());
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn missing_external_command_is_a_status() {
        let opts = SolveOptions { backend: Backend::External("/nonexistent/solver".into()), ..Default::default() };
        let r = solve(&disk(), &opts);
        assert_eq!(r.status, SolveStatus::Stall);
    }
}
