//! Solves the handcrafted 3x3 navigation instance with the builtin search
//! and checks the plan against the network.

use bnnplan::domains::{generate, DomainSpec, Family, WeightMode};
use bnnplan::driver::{format_report, solve, Solver};
use bnnplan::encoder::encode;

fn main() -> bnnplan::Result<()> {
    let spec = DomainSpec::new(Family::Navigation, 3, 4).with_weight_mode(WeightMode::Handcrafted);
    let inst = generate(&spec)?;
    let art = encode(&inst.problem, &inst.bnn)?;
    let solver = Solver::Builtin { max_vars: None };
    let report = solve(&art, &inst.problem, &inst.bnn, &solver, None)?;
    print!("{}", format_report(&report));
    Ok(())
}
