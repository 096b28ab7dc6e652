//! The `bnnplan` command line.
//!
//! Exit codes: 0 success, 1 infeasible or invalid plan, 2 usage,
//! 3 capacity limit, 4 I/O or solver failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bnn::{brute_force_optimal, Bnn};
use crate::domains::{generate, parameter_grid, DomainSpec, Family, Policy, WeightMode};
use crate::driver::{format_report, solve, validate_plan, Solver};
use crate::encoder::{encode, EncodingArtifact, VarAtlas};
use crate::io::{
    read_plan, read_wcnf, to_canonical_json, write_artifact, write_plan, InstanceManifest,
    SolverStatus, WcnfFormat,
};
use crate::model::PlanningProblem;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_OK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_FAILURE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "bnnplan",
    version,
    about = "Plan with binarized neural network transition models via weighted partial MaxSAT"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a benchmark instance manifest.
    Generate(GenerateArgs),
    /// Compile a manifest to WCNF plus a variable atlas.
    Encode(EncodeArgs),
    /// Solve a manifest with a MaxSAT solver and check the plan.
    Solve(SolveArgs),
    /// Check a plan against a manifest.
    Validate(ValidateArgs),
    /// Exhaustive optimal plan for small manifests.
    Oracle(OracleArgs),
    /// Write the benchmark grid of a family.
    Grid(GridArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    horizon: usize,
    /// Cellda enemy policy.
    #[arg(long)]
    policy: Option<Policy>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "random")]
    weight_mode: WeightMode,
    /// Comma-separated hidden layer widths instead of the published ones.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value = "wcnf2021")]
    format: WcnfFormat,
    /// Skip re-reading the written file.
    #[arg(long)]
    no_verify: bool,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Solver command, or `builtin` for the in-process exact search.
    #[arg(long, env = "BNNPLAN_SOLVER")]
    solver: String,
    /// Seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Also write the decoded plan here.
    #[arg(long)]
    plan_out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    plan: PathBuf,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    plan_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long)]
    family: Family,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "wcnf2021")]
    format: WcnfFormat,
    /// Write manifests only.
    #[arg(long)]
    manifests_only: bool,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
}

/// Failure with its exit code.
struct Exit(i32, String);

impl From<Error> for Exit {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Capacity(_) => EXIT_CAPACITY,
            Error::Configuration(_) | Error::Parameter(_) => EXIT_USAGE,
            Error::Unsatisfiable(_) => EXIT_NOT_OK,
            _ => EXIT_FAILURE,
        };
        Exit(code, e.to_string())
    }
}

fn io_exit(path: &Path, e: std::io::Error) -> Exit {
    Exit(EXIT_FAILURE, format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String, Exit> {
    fs::read_to_string(path).map_err(|e| io_exit(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), Exit> {
    fs::write(path, text).map_err(|e| io_exit(path, e))
}

fn load(path: &Path) -> Result<(PlanningProblem, Bnn), Exit> {
    let doc = InstanceManifest::read(&read_text(path)?).map_err(|e| {
        let Exit(code, msg) = Exit::from(e);
        Exit(code, format!("{}: {msg}", path.display()))
    })?;
    Ok(doc.to_parts()?)
}

/// Side file describing how solver variables map back to the problem.
#[derive(Serialize)]
struct AtlasDoc<'a> {
    atlas: &'a VarAtlas,
    objective_offset: i64,
    scale_pow10: u32,
    sum_soft: u64,
    hard_clauses: BTreeMap<&'static str, usize>,
}

/// `out.wcnf` → `out.atlas.json`
pub fn atlas_path(wcnf: &Path) -> PathBuf {
    wcnf.with_extension("atlas.json")
}

fn atlas_json(a: &EncodingArtifact) -> Result<String> {
    to_canonical_json(&AtlasDoc {
        atlas: &a.atlas,
        objective_offset: a.objective_offset,
        scale_pow10: a.scale_pow10,
        sum_soft: a.formula.sum_soft(),
        hard_clauses: a.group_sizes.iter().copied().collect(),
    })
}

fn clause_multiset(
    hard: impl Iterator<Item = Vec<i32>>,
    soft: impl Iterator<Item = (u64, Vec<i32>)>,
) -> Vec<(Option<u64>, Vec<i32>)> {
    let mut all: Vec<_> = hard
        .map(|c| (None, c))
        .chain(soft.map(|(w, c)| (Some(w), c)))
        .collect();
    all.sort_unstable();
    all
}

/// Writes the WCNF and its atlas; with `verify`, re-reads the file and
/// compares clause multisets.
fn write_encoding(
    a: &EncodingArtifact,
    format: WcnfFormat,
    out: &Path,
    verify: bool,
) -> Result<(), Exit> {
    let file = fs::File::create(out).map_err(|e| io_exit(out, e))?;
    let mut w = BufWriter::new(file);
    write_artifact(a, format, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| io_exit(out, e))?;
    drop(w);
    write_text(&atlas_path(out), &atlas_json(a)?)?;
    if verify {
        let parsed = read_wcnf(&read_text(out)?)?;
        let f = &a.formula;
        let dimacs = |c: &[crate::cnf::Lit]| c.iter().map(|l| l.to_dimacs()).collect::<Vec<_>>();
        let ours = clause_multiset(
            f.hard_clauses().map(dimacs),
            f.soft_clauses().iter().map(|s| (s.weight, dimacs(&s.lits))),
        );
        let theirs = clause_multiset(parsed.hard.into_iter(), parsed.soft.into_iter());
        if ours != theirs || parsed.num_vars != f.num_vars() && format == WcnfFormat::Wcnf2021 {
            return Err(Exit(
                EXIT_FAILURE,
                format!(
                    "{}: re-parsed clauses differ from the encoding",
                    out.display()
                ),
            ));
        }
    }
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> Result<i32, Exit> {
    let mut spec = DomainSpec::new(a.family, a.n, a.horizon)
        .with_seed(a.seed)
        .with_weight_mode(a.weight_mode);
    if let Some(p) = a.policy {
        spec = spec.with_policy(p);
    }
    if let Some(h) = a.hidden {
        spec = spec.with_hidden(h);
    }
    for w in spec.warnings() {
        eprintln!("bnnplan: warning: {w}");
    }
    let inst = generate(&spec)?;
    write_text(&a.output, &InstanceManifest::from_instance(&inst).write()?)?;
    Ok(EXIT_OK)
}

fn cmd_encode(a: EncodeArgs) -> Result<i32, Exit> {
    let (p, bnn) = load(&a.input)?;
    let art = encode(&p, &bnn)?;
    write_encoding(&art, a.format, &a.output, !a.no_verify)?;
    eprintln!(
        "bnnplan: {} variables, {} hard, {} soft",
        art.formula.num_vars(),
        art.formula.num_hard(),
        art.formula.num_soft()
    );
    Ok(EXIT_OK)
}

fn cmd_solve(a: SolveArgs) -> Result<i32, Exit> {
    let (p, bnn) = load(&a.input)?;
    let solver = match a.solver.trim() {
        "builtin" => Solver::Builtin { max_vars: None },
        cmd => Solver::External(cmd.to_string()),
    };
    let timeout = match a.timeout {
        Some(s) if s.is_finite() && s > 0.0 => Some(Duration::from_secs_f64(s)),
        Some(s) => return Err(Exit(EXIT_USAGE, format!("invalid timeout {s}"))),
        None => None,
    };
    let art = encode(&p, &bnn)?;
    let report = solve(&art, &p, &bnn, &solver, timeout)?;
    if a.json {
        println!("{}", to_canonical_json(&report)?.trim_end());
    } else {
        print!("{}", format_report(&report));
    }
    if let (Some(path), Some(plan)) = (&a.plan_out, &report.plan) {
        write_text(path, &write_plan(plan))?;
    }
    Ok(match (report.status, &report.failure) {
        (_, Some(crate::driver::SolveFailure::Capacity(_))) => EXIT_CAPACITY,
        (_, Some(_)) => EXIT_FAILURE,
        (SolverStatus::Unsat, _) => EXIT_NOT_OK,
        (SolverStatus::Unknown, _) => EXIT_FAILURE,
        _ if report.agree == Some(true) && report.plan_ok == Some(true) => EXIT_OK,
        _ => EXIT_FAILURE,
    })
}

fn cmd_validate(a: ValidateArgs) -> Result<i32, Exit> {
    let (p, bnn) = load(&a.input)?;
    let plan = read_plan(&read_text(&a.plan)?)?;
    let v = validate_plan(&p, &bnn, &plan)?;
    println!("ok: {}", v.ok);
    for x in &v.violations {
        println!("violation: step {} {} row {}", x.step, x.kind, x.row);
    }
    println!("reward: {}", v.trajectory.reward());
    Ok(if v.ok { EXIT_OK } else { EXIT_NOT_OK })
}

fn cmd_oracle(a: OracleArgs) -> Result<i32, Exit> {
    let (p, bnn) = load(&a.input)?;
    match brute_force_optimal(&bnn, &p)? {
        None => {
            println!("status: infeasible");
            Ok(EXIT_NOT_OK)
        }
        Some(t) => {
            println!("status: optimal");
            println!("reward: {}", t.reward());
            println!("scaled_reward: {}", t.scaled_reward);
            for (k, act) in t.actions.iter().enumerate() {
                let bits: String = act.iter().map(|&b| if b { '1' } else { '0' }).collect();
                println!("plan[{}]: {bits}", k + 1);
            }
            if let Some(path) = &a.plan_out {
                write_text(path, &write_plan(&t.actions))?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn cmd_grid(a: GridArgs) -> Result<i32, Exit> {
    fs::create_dir_all(&a.output).map_err(|e| io_exit(&a.output, e))?;
    let specs: Vec<DomainSpec> = parameter_grid(a.family)
        .into_iter()
        .map(|s| s.with_seed(a.seed))
        .collect();
    let jobs = a
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, specs.len().max(1));
    let next = AtomicUsize::new(0);
    let first_error: Mutex<Option<Exit>> = Mutex::new(None);
    let work = |spec: &DomainSpec| -> Result<(), Exit> {
        let inst = generate(spec)?;
        let stem = spec.file_stem();
        let manifest = a.output.join(format!("{stem}.json"));
        write_text(&manifest, &InstanceManifest::from_instance(&inst).write()?)?;
        if !a.manifests_only {
            let art = encode(&inst.problem, &inst.bnn)?;
            write_encoding(
                &art,
                a.format,
                &a.output.join(format!("{stem}.wcnf")),
                false,
            )?;
        }
        eprintln!("bnnplan: wrote {stem}");
        Ok(())
    };
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(spec) = specs.get(k) else { break };
                if let Err(e) = work(spec) {
                    first_error.lock().expect("poisoned").get_or_insert(e);
                    break;
                }
            });
        }
    });
    match first_error.into_inner().expect("poisoned") {
        Some(e) => Err(e),
        None => {
            println!("{} instances", specs.len());
            Ok(EXIT_OK)
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Grid(a) => cmd_grid(a),
    };
    match outcome {
        Ok(code) => code,
        Err(Exit(code, msg)) => {
            eprintln!("bnnplan: {msg}");
            code
        }
    }
}
