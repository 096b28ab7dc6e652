//! Runs an external MaxSAT solver named by `BNNPLAN_SOLVER` (or the first
//! argument) on a small random instance.
//!
//! BNNPLAN_SOLVER=open-wbo cargo run --example external_solver

use std::time::Duration;

use bnnplan::domains::{random_toy, ToyShape};
use bnnplan::driver::{format_report, solve, Solver};
use bnnplan::encoder::encode;

fn main() -> bnnplan::Result<()> {
    let Some(cmd) = std::env::args()
        .nth(1)
        .or_else(|| std::env::var("BNNPLAN_SOLVER").ok())
    else {
        eprintln!("no solver given; set BNNPLAN_SOLVER");
        return Ok(());
    };
    let shape = ToyShape {
        state_bits: 3,
        action_bits: 2,
        hidden: vec![6],
        horizon: 3,
    };
    let (p, bnn) = random_toy(&shape, 11)?;
    let art = encode(&p, &bnn)?;
    let report = solve(
        &art,
        &p,
        &bnn,
        &Solver::External(cmd),
        Some(Duration::from_secs(60)),
    )?;
    print!("{}", format_report(&report));
    Ok(())
}
