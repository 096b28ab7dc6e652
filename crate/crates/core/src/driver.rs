//! Solving an encoded instance, decoding the model into a plan and checking
//! that plan against the network.
//!
//! Solver cost follows the WCNF convention (total weight of falsified soft
//! clauses). It maps to the scaled plan reward by
//!
//! ```text
//! scaled reward = sum of soft weights - cost + objective offset
//! ```

use std::io::{BufWriter, Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::bnn::{simulate, Bnn, Trajectory};
use crate::cnf::search::Search;
use crate::encoder::EncodingArtifact;
use crate::io::{parse_solver_output, write_artifact, SolverOutput, SolverStatus, WcnfFormat};
use crate::model::PlanningProblem;
use crate::Result;

/// Variable limit of [`Solver::Builtin`] by default.
pub const BUILTIN_MAX_VARS: u32 = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solver {
    /// `<program> [args..] <wcnf path>`, split on whitespace.
    External(String),
    /// The in-process exact search; refuses formulas with more than
    /// `max_vars` variables when a limit is set.
    Builtin { max_vars: Option<u32> },
}

impl Solver {
    /// Builtin solver with the default variable limit.
    pub fn builtin() -> Self {
        Solver::Builtin {
            max_vars: Some(BUILTIN_MAX_VARS),
        }
    }
}

/// Why a solve produced no usable answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "lowercase")]
pub enum SolveFailure {
    Spawn(String),
    Timeout,
    Capacity(String),
    /// The reported model is missing or breaks a hard clause.
    Model(String),
}

/// One violated solution condition. Steps count from 1; goal rows are
/// checked at step `H + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub step: usize,
    pub kind: &'static str,
    /// Index into the problem's constraint list.
    pub row: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub ok: bool,
    pub violations: Vec<Violation>,
    pub trajectory: Trajectory,
}

/// Rolls out `plan` and lists every violated global or goal row. The
/// initial state and the network transitions hold by construction.
pub fn validate_plan(p: &PlanningProblem, bnn: &Bnn, plan: &[Vec<bool>]) -> Result<Verdict> {
    let trajectory = simulate(bnn, p, plan)?;
    let mut violations: Vec<Violation> = trajectory
        .global_failures
        .iter()
        .map(|&(t, row)| Violation {
            step: t + 1,
            kind: "global",
            row,
        })
        .collect();
    violations.extend(trajectory.goal_failures.iter().map(|&row| Violation {
        step: p.horizon + 1,
        kind: "goal",
        row,
    }));
    Ok(Verdict {
        ok: violations.is_empty(),
        violations,
        trajectory,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SolveReport {
    pub status: SolverStatus,
    pub failure: Option<SolveFailure>,
    pub plan: Option<Vec<Vec<bool>>>,
    pub trajectory: Option<Trajectory>,
    /// `o` line of the solver, or the cost of its model when it printed none.
    pub solver_cost: Option<u64>,
    /// Scaled reward of the decoded plan under the network.
    pub recomputed_reward: Option<i64>,
    /// Solver cost and recomputed reward agree through the offset formula.
    pub agree: Option<bool>,
    pub plan_ok: Option<bool>,
    pub scale_pow10: u32,
    #[serde(serialize_with = "seconds")]
    pub wall_time: Duration,
}

fn seconds<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl SolveReport {
    fn empty(
        artifact: &EncodingArtifact,
        status: SolverStatus,
        failure: Option<SolveFailure>,
    ) -> Self {
        SolveReport {
            status,
            failure,
            plan: None,
            trajectory: None,
            solver_cost: None,
            recomputed_reward: None,
            agree: None,
            plan_ok: None,
            scale_pow10: artifact.scale_pow10,
            wall_time: Duration::ZERO,
        }
    }
}

fn run_external(
    artifact: &EncodingArtifact,
    cmd: &str,
    timeout: Option<Duration>,
) -> std::result::Result<SolverOutput, SolveFailure> {
    let mut parts = cmd.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| SolveFailure::Spawn("empty solver command".into()))?;
    let io_fail = |e: std::io::Error| SolveFailure::Spawn(format!("writing the formula: {e}"));
    let mut file = tempfile::Builder::new()
        .prefix("bnnplan-")
        .suffix(".wcnf")
        .tempfile()
        .map_err(io_fail)?;
    {
        let mut w = BufWriter::new(file.as_file_mut());
        write_artifact(artifact, WcnfFormat::Wcnf2021, &mut w).map_err(io_fail)?;
        w.flush().map_err(io_fail)?;
    }
    let mut child = Command::new(program)
        .args(parts)
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| SolveFailure::Spawn(format!("`{program}`: {e}")))?;
    let mut stdout = child.stdout.take().expect("piped");
    let reader = thread::spawn(move || {
        let mut text = String::new();
        let _ = stdout.read_to_string(&mut text);
        text
    });
    let start = Instant::now();
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) => {}
            Err(e) => return Err(SolveFailure::Spawn(e.to_string())),
        }
        if timeout.is_some_and(|t| start.elapsed() >= t) {
            let _ = child.kill();
            let _ = child.wait();
            let _ = reader.join();
            return Err(SolveFailure::Timeout);
        }
        thread::sleep(Duration::from_millis(2));
    }
    let text = reader.join().unwrap_or_default();
    Ok(parse_solver_output(&text))
}

fn run_builtin(
    artifact: &EncodingArtifact,
    max_vars: Option<u32>,
    timeout: Option<Duration>,
) -> std::result::Result<SolverOutput, SolveFailure> {
    let nv = artifact.formula.num_vars();
    if let Some(cap) = max_vars {
        if nv > cap {
            return Err(SolveFailure::Capacity(format!(
                "{nv} variables exceed the builtin limit of {cap}"
            )));
        }
    }
    let mut search = Search::new(&artifact.formula);
    search.set_deadline(timeout.map(|t| Instant::now() + t));
    let best = search.optimize(&[]);
    let status = match (&best, search.timed_out()) {
        (Some(_), false) => SolverStatus::Optimum,
        (Some(_), true) => SolverStatus::Sat,
        (None, false) => SolverStatus::Unsat,
        (None, true) => return Err(SolveFailure::Timeout),
    };
    Ok(match best {
        Some((cost, model)) => SolverOutput {
            status,
            model: model
                .iter()
                .enumerate()
                .map(|(v, &b)| if b { v as i32 + 1 } else { -(v as i32 + 1) })
                .collect(),
            cost: Some(cost),
        },
        None => SolverOutput {
            status,
            model: Vec::new(),
            cost: None,
        },
    })
}

/// Runs `solver` on the artifact and reconciles its answer with the
/// network. Solver trouble is reported in the result, never raised.
pub fn solve(
    artifact: &EncodingArtifact,
    problem: &PlanningProblem,
    bnn: &Bnn,
    solver: &Solver,
    timeout: Option<Duration>,
) -> Result<SolveReport> {
    let start = Instant::now();
    let outcome = match solver {
        Solver::External(cmd) => run_external(artifact, cmd, timeout),
        Solver::Builtin { max_vars } => run_builtin(artifact, *max_vars, timeout),
    };
    let mut report = match outcome {
        Ok(out) => reconcile(artifact, problem, bnn, out)?,
        Err(failure) => SolveReport::empty(artifact, SolverStatus::Unknown, Some(failure)),
    };
    report.wall_time = start.elapsed();
    Ok(report)
}

fn reconcile(
    artifact: &EncodingArtifact,
    problem: &PlanningProblem,
    bnn: &Bnn,
    out: SolverOutput,
) -> Result<SolveReport> {
    let mut report = SolveReport::empty(artifact, out.status, None);
    if !matches!(out.status, SolverStatus::Optimum | SolverStatus::Sat) {
        return Ok(report);
    }
    let f = &artifact.formula;
    if out.model.is_empty() {
        report.failure = Some(SolveFailure::Model("solver printed no model".into()));
        return Ok(report);
    }
    let assignment = out.assignment(f.num_vars());
    let (hard_ok, satisfied) = f.eval(&assignment)?;
    if !hard_ok {
        report.failure = Some(SolveFailure::Model("model violates a hard clause".into()));
        return Ok(report);
    }
    let plan = artifact.atlas.decode_plan(&assignment)?;
    let verdict = validate_plan(problem, bnn, &plan)?;
    let cost = out.cost.unwrap_or(f.sum_soft() - satisfied);
    let reward = verdict.trajectory.scaled_reward;
    report.solver_cost = Some(cost);
    report.recomputed_reward = Some(reward);
    report.agree = Some(artifact.cost_from_reward(reward) == cost as i64);
    report.plan_ok = Some(verdict.ok);
    report.plan = Some(plan);
    report.trajectory = Some(verdict.trajectory);
    Ok(report)
}

/// Human-readable `key: value` lines of a report.
pub fn format_report(r: &SolveReport) -> String {
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    let mut lines = vec![format!("status: {}", r.status.name())];
    if let Some(f) = &r.failure {
        lines.push(format!(
            "failure: {}",
            match f {
                SolveFailure::Spawn(m) => format!("spawn: {m}"),
                SolveFailure::Timeout => "timeout".into(),
                SolveFailure::Capacity(m) => format!("capacity: {m}"),
                SolveFailure::Model(m) => format!("model: {m}"),
            }
        ));
    }
    lines.push(format!(
        "solver_cost: {}",
        opt(r.solver_cost.map(|c| c.to_string()))
    ));
    lines.push(format!(
        "recomputed_reward: {}",
        opt(r
            .recomputed_reward
            .map(|v| { crate::Decimal::from_scaled(v, -(r.scale_pow10 as i32)).to_string() }))
    ));
    lines.push(format!(
        "scaled_reward: {}",
        opt(r.recomputed_reward.map(|v| v.to_string()))
    ));
    lines.push(format!("agree: {}", opt(r.agree.map(|v| v.to_string()))));
    lines.push(format!(
        "plan_ok: {}",
        opt(r.plan_ok.map(|v| v.to_string()))
    ));
    if let Some(plan) = &r.plan {
        for (t, a) in plan.iter().enumerate() {
            let bits: String = a.iter().map(|&b| if b { '1' } else { '0' }).collect();
            lines.push(format!("plan[{}]: {bits}", t + 1));
        }
    }
    lines.push(format!("wall_time_s: {:.3}", r.wall_time.as_secs_f64()));
    lines.join("\n") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bnn::{brute_force_optimal, BnnLayer, Neuron};
    use crate::domains::{random_toy, ToyShape};
    use crate::encoder::encode;
    use crate::model::{Comparison, ProblemBuilder};
    use crate::Decimal;
    use std::collections::BTreeMap;

    fn latch(goal: bool) -> (PlanningProblem, Bnn) {
        let layer = BnnLayer::new(2, vec![Neuron::new(vec![1, 1], 0).unwrap()]).unwrap();
        let bnn = Bnn::new(
            Bnn::standard_inputs(1, 1),
            vec![layer],
            vec![0],
            BTreeMap::new(),
        )
        .unwrap();
        let mut b = ProblemBuilder::new();
        let s = b.state_bit("s", false);
        let a = b.action_bit("a");
        b.action_reward(a, Decimal::from_int(-1));
        b.goal(vec![(s, 1)], Comparison::Eq, goal as i64);
        (b.build(2).unwrap(), bnn)
    }

    #[test]
    fn builtin_optimum_matches_oracle() {
        let (p, bnn) = latch(true);
        let art = encode(&p, &bnn).unwrap();
        let r = solve(&art, &p, &bnn, &Solver::Builtin { max_vars: None }, None).unwrap();
        assert_eq!(r.status, SolverStatus::Optimum);
        assert_eq!(r.agree, Some(true));
        assert_eq!(r.plan_ok, Some(true));
        let best = brute_force_optimal(&bnn, &p).unwrap().unwrap();
        assert_eq!(r.recomputed_reward, Some(best.scaled_reward));
        assert_eq!(r.recomputed_reward, Some(-1));
    }

    #[test]
    fn unsat_has_no_plan() {
        // s starts false and the net can only keep it or raise it; demand
        // false at the end while the only feasible actions keep it false.
        let layer = BnnLayer::new(2, vec![Neuron::new(vec![1, 1], 2).unwrap()]).unwrap();
        let bnn = Bnn::new(
            Bnn::standard_inputs(1, 1),
            vec![layer],
            vec![0],
            BTreeMap::new(),
        )
        .unwrap();
        let mut b = ProblemBuilder::new();
        let s = b.state_bit("s", false);
        b.action_bit("a");
        b.goal(vec![(s, 1)], Comparison::Eq, 0);
        let p = b.build(1).unwrap();
        let art = encode(&p, &bnn).unwrap();
        let r = solve(&art, &p, &bnn, &Solver::builtin(), None).unwrap();
        assert_eq!(r.status, SolverStatus::Unsat);
        assert!(r.plan.is_none());
    }

    #[test]
    fn builtin_refuses_large_formulas() {
        let shape = ToyShape {
            state_bits: 3,
            action_bits: 2,
            hidden: vec![4],
            horizon: 3,
        };
        let (p, bnn) = random_toy(&shape, 1).unwrap();
        let art = encode(&p, &bnn).unwrap();
        let r = solve(&art, &p, &bnn, &Solver::builtin(), None).unwrap();
        assert!(matches!(r.failure, Some(SolveFailure::Capacity(_))));
        assert_eq!(r.status, SolverStatus::Unknown);
    }

    #[test]
    fn missing_program_is_reported() {
        let (p, bnn) = latch(true);
        let art = encode(&p, &bnn).unwrap();
        let r = solve(
            &art,
            &p,
            &bnn,
            &Solver::External("/nonexistent/solver".into()),
            None,
        )
        .unwrap();
        assert!(matches!(r.failure, Some(SolveFailure::Spawn(_))));
    }

    #[test]
    fn validation_names_step_and_row() {
        let mut b = ProblemBuilder::new();
        b.state_bit("s", false);
        let a0 = b.action_bit("a0");
        let a1 = b.action_bit("a1");
        b.global(vec![], vec![(a0, 1), (a1, 1)], Comparison::Le, 1);
        let p = b.build(3).unwrap();
        let layer = BnnLayer::new(3, vec![Neuron::new(vec![1, 1, 1], 0).unwrap()]).unwrap();
        let bnn = Bnn::new(
            Bnn::standard_inputs(1, 2),
            vec![layer],
            vec![0],
            BTreeMap::new(),
        )
        .unwrap();
        let v = validate_plan(
            &p,
            &bnn,
            &[vec![false, false], vec![true, true], vec![true, false]],
        )
        .unwrap();
        assert!(!v.ok);
        assert_eq!(
            v.violations,
            vec![Violation {
                step: 2,
                kind: "global",
                row: 0
            }]
        );
        assert!(validate_plan(&p, &bnn, &[vec![false, false]]).is_err());

        let (p, bnn) = latch(true);
        let v = validate_plan(&p, &bnn, &[vec![false], vec![false]]).unwrap();
        assert_eq!(v.violations.len(), 1);
        assert_eq!((v.violations[0].step, v.violations[0].kind), (3, "goal"));
    }
}
