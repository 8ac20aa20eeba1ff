use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use statelift::bench::{extraction_config, run_suite, BenchConfig, Suite};
use statelift::chain::{CompositionChain, Sense};
use statelift::conic::{parse_sdpa, solve, write_sdpa, SolveOptions, SolveStatus};
use statelift::extraction::{extract_sequential, first_moments, ExtractionConfig, Projection};
use statelift::problem_file::{read_problem, write_problem};
use statelift::problems::{generate, Family, GeneratorSpec, Instance};
use statelift::relax::Hierarchy;
use statelift::runner::{assemble, default_order, reports_to_csv, run, RunLabel};
use statelift::sparsity::CSPGraph;

#[derive(Parser)]
#[command(name = "statelift", version, about = "Moment relaxations for composition chains and tensor trains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble and solve one relaxation, writing a report row.
    Solve(SolveArgs),
    /// Write the assembled program in SDPA sparse format.
    Export(ExportArgs),
    /// Run a benchmark suite.
    Bench(BenchArgs),
    /// Solve and recover controls.
    Extract(ExtractArgs),
    /// Write a generated instance as a problem file.
    Generate(GenerateArgs),
    /// Solve an SDPA file in-process: `solve-sdpa <in.dat-s> <out.sol>`.
    #[command(hide = true)]
    SolveSdpa { input: PathBuf, output: PathBuf },
}

/// Either a problem file or generator flags.
#[derive(Args, Clone)]
struct ProblemArgs {
    /// Problem file (JSON).
    problem: Option<PathBuf>,
    /// Generator family instead of a file.
    #[arg(long, value_parser = parse_family)]
    family: Option<Family>,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    degree: Option<u32>,
    /// Perturbation size (perturbed-tt).
    #[arg(long)]
    perturbation: Option<f64>,
    /// Rotation bound (quantum); omit for free angles.
    #[arg(long)]
    theta_max: Option<f64>,
    /// Cubic activation weight (nn).
    #[arg(long)]
    alpha: Option<f64>,
    /// Truncation stage (nn).
    #[arg(long)]
    stage: Option<usize>,
    #[arg(long, value_parser = parse_sense)]
    sense: Option<Sense>,
    /// Initial state, comma separated (quantum).
    #[arg(long, value_delimiter = ',')]
    s0: Option<Vec<f64>>,
    /// Target state, comma separated (quantum).
    #[arg(long, value_delimiter = ',')]
    target: Option<Vec<f64>>,
}

#[derive(Args, Clone)]
struct RelaxArgs {
    #[arg(long, value_parser = parse_hierarchy, default_value = "push")]
    hierarchy: Hierarchy,
    /// Relaxation order; defaults depend on the family and hierarchy.
    #[arg(long)]
    order: Option<u32>,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Solver tolerance (overrides STATELIFT_TOL).
    #[arg(long)]
    tol: Option<f64>,
    /// Time limit in seconds.
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    relax: RelaxArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Report CSV; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the correlative sparsity graph as an edge list.
    #[arg(long)]
    dump_graph: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    relax: RelaxArgs,
    #[arg(long)]
    sdpa: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_parser = parse_suite)]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    /// Parallel solves.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    relax: RelaxArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Accepted distance between a sampled previous state and the propagated one.
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    #[arg(long, default_value_t = 1e-6)]
    threshold: f64,
    /// Trajectory CSV; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    Family::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Family::ALL.iter().map(|f| f.as_str()).collect();
        format!("unknown family `{s}`; expected one of {}", names.join(", "))
    })
}

fn parse_hierarchy(s: &str) -> Result<Hierarchy, String> {
    Hierarchy::parse(s).ok_or_else(|| format!("unknown hierarchy `{s}`; expected dense, chord or push"))
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    Suite::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Suite::ALL.iter().map(|f| f.as_str()).collect();
        format!("unknown suite `{s}`; expected one of {}", names.join(", "))
    })
}

fn parse_sense(s: &str) -> Result<Sense, String> {
    match s {
        "min" | "minimize" => Ok(Sense::Minimize),
        "max" | "maximize" => Ok(Sense::Maximize),
        _ => Err(format!("unknown sense `{s}`; expected min or max")),
    }
}

/// A loaded problem and what is known about where it came from.
struct Loaded {
    chain: CompositionChain,
    instance: Option<Instance>,
    label: RunLabel,
    degree: u32,
}

impl ProblemArgs {
    fn load(&self) -> Result<Loaded> {
        match (&self.problem, self.family) {
            (Some(_), Some(_)) => bail!("give either a problem file or --family, not both"),
            (None, None) => bail!("no problem: pass a problem file or --family"),
            (Some(path), None) => {
                let chain = read_problem(path).map_err(|e| anyhow!("{}: {e}", path.display()))?;
                let degree = chain.max_map_degree();
                Ok(Loaded { chain, instance: None, label: RunLabel::new("file", None), degree })
            }
            (None, Some(family)) => {
                let mut spec = GeneratorSpec::new(family, self.n, self.seed);
                if let Some(r) = self.rank {
                    spec.rank = r;
                }
                if let Some(d) = self.degree {
                    spec.degree = d;
                }
                if let Some(t) = self.perturbation {
                    spec.tau = t;
                }
                spec.theta_max = self.theta_max;
                if let Some(a) = self.alpha {
                    spec.alpha = a;
                }
                spec.stage = self.stage;
                spec.sense = self.sense;
                if let Some(s) = &self.s0 {
                    spec.s0 = s.clone();
                }
                if let Some(t) = &self.target {
                    spec.target = t.clone();
                }
                let inst = generate(&spec)?;
                Ok(Loaded {
                    chain: inst.chain.clone(),
                    label: RunLabel::new(family.as_str(), Some(self.seed)),
                    degree: spec.degree,
                    instance: Some(inst),
                })
            }
        }
    }
}

impl Loaded {
    fn order(&self, relax: &RelaxArgs) -> Result<u32> {
        match relax.order {
            Some(k) => Ok(k),
            None => Ok(default_order(&self.chain, self.instance.as_ref().map(|i| i.family), self.degree, relax.hierarchy)?),
        }
    }
}

impl SolverArgs {
    fn options(&self) -> Result<SolveOptions> {
        let mut o = SolveOptions::from_env();
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                bail!("--tol must be positive");
            }
            o.tol = t;
        }
        if !(self.time_limit > 0.0) {
            bail!("--time-limit must be positive");
        }
        o.time_limit = Duration::from_secs_f64(self.time_limit);
        o.verbose = self.verbose;
        Ok(o)
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn status_code(status: SolveStatus) -> ExitCode {
    match status {
        s if s.is_solved() => ExitCode::SUCCESS,
        SolveStatus::Timeout => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn cmd_solve(a: SolveArgs) -> Result<ExitCode> {
    let loaded = a.problem.load()?;
    let k = loaded.order(&a.relax)?;
    if let Some(path) = &a.dump_graph {
        let pop = loaded.chain.lift();
        let g = CSPGraph::build(&pop);
        fs::write(path, g.dump_edges(&pop.space)).with_context(|| format!("writing {}", path.display()))?;
    }
    let out = run(&loaded.chain, &loaded.label, a.relax.hierarchy, k, &a.solver.options()?)?;
    write_or_print(a.out.as_deref(), &reports_to_csv(&[out.report.clone()]))?;
    eprintln!(
        "{} order {}: bound {:?} ({}), largest block {}, {} constraints, {:.3} s",
        a.relax.hierarchy, k, out.report.bound, out.report.status, out.report.max_block, out.report.constraints, out.report.time
    );
    Ok(status_code(out.result.status))
}

fn cmd_export(a: ExportArgs) -> Result<ExitCode> {
    let loaded = a.problem.load()?;
    let k = loaded.order(&a.relax)?;
    let relax = assemble(&loaded.chain, a.relax.hierarchy, k)?;
    let p = &relax.program;
    fs::write(&a.sdpa, write_sdpa(p)).with_context(|| format!("writing {}", a.sdpa.display()))?;
    println!(
        "{} order {}: {} variables, {} blocks, largest block {}, {} equalities, {} inequalities",
        a.relax.hierarchy,
        k,
        p.num_vars,
        p.blocks.len(),
        p.max_block_dim(),
        p.equalities.len(),
        p.inequalities.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(a: BenchArgs) -> Result<ExitCode> {
    let cfg = BenchConfig { seed: a.seed, jobs: a.jobs, solve: a.solver.options()? };
    let out = run_suite(a.suite, &cfg)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let report = a.out.join(format!("{}.csv", a.suite.as_str()));
    fs::write(&report, reports_to_csv(&out.reports)).with_context(|| format!("writing {}", report.display()))?;
    for (name, body) in &out.figures {
        let p = a.out.join(name);
        fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
    }
    let mut failed = 0;
    for c in &out.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    println!("{} rows written to {}", out.reports.len(), report.display());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_extract(a: ExtractArgs) -> Result<ExitCode> {
    let loaded = a.problem.load()?;
    let k = loaded.order(&a.relax)?;
    let out = run(&loaded.chain, &loaded.label, a.relax.hierarchy, k, &a.solver.options()?)?;
    if !out.solved() {
        eprintln!("relaxation not solved: {}", out.result.status);
        return Ok(status_code(out.result.status));
    }
    let bound = out.bound();
    let (controls, achieved) = if a.relax.hierarchy == Hierarchy::Push {
        let base = match &loaded.instance {
            Some(inst) => extraction_config(inst, 0, a.seeds),
            None => ExtractionConfig { projection: Projection::BoxClamp, ..ExtractionConfig::default() },
        };
        let cfg = ExtractionConfig { tau: a.tau, samples: a.samples, seeds: a.seeds, threshold: a.threshold, ..base };
        let t = extract_sequential(&out.relaxation, &out.result, &loaded.chain, &cfg)?;
        write_or_print(a.out.as_deref(), &t.to_csv())?;
        (t.controls, t.objective)
    } else {
        let p = first_moments(&out.relaxation, &out.result, &loaded.chain);
        let t = statelift::extraction::Trajectory::from_controls(&loaded.chain, p.controls, 0);
        write_or_print(a.out.as_deref(), &t.to_csv())?;
        (t.controls, t.objective)
    };
    let gap = loaded.chain.sense().sign() * (achieved - bound);
    eprintln!("bound {bound:?}, achieved {achieved:?}, gap {gap:e}, {} stages", controls.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_generate(a: GenerateArgs) -> Result<ExitCode> {
    if a.problem.problem.is_some() {
        bail!("generate takes --family, not a problem file");
    }
    let loaded = a.problem.load()?;
    write_or_print(a.out.as_deref(), &write_problem(&loaded.chain))?;
    Ok(ExitCode::SUCCESS)
}

/// Writes `x` on the first line and the status on the second.
fn cmd_solve_sdpa(input: &Path, output: &Path) -> Result<ExitCode> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let program = parse_sdpa(&text).map_err(|e| anyhow!("{}: {e}", input.display()))?;
    let mut opts = SolveOptions::default();
    if let Ok(t) = std::env::var("STATELIFT_TOL") {
        opts.tol = t.parse().context("STATELIFT_TOL")?;
    }
    let res = solve(&program, &opts);
    let x: Vec<String> = res.x.iter().map(|v| format!("{v:?}")).collect();
    fs::write(output, format!("{}\n{}\n", x.join(" "), res.status)).with_context(|| format!("writing {}", output.display()))?;
    Ok(status_code(res.status))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Export(a) => cmd_export(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Generate(a) => cmd_generate(a),
        Command::SolveSdpa { input, output } => cmd_solve_sdpa(&input, &output),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
