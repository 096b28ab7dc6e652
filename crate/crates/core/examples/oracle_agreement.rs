//! Compares the exhaustive planner with the MaxSAT route on random toys.

use bnnplan::bnn::brute_force_optimal;
use bnnplan::domains::{random_toy, ToyShape};
use bnnplan::driver::{solve, Solver};
use bnnplan::encoder::encode;

fn main() -> bnnplan::Result<()> {
    let shape = ToyShape {
        state_bits: 2,
        action_bits: 2,
        hidden: vec![3],
        horizon: 3,
    };
    for seed in 0..5 {
        let (p, bnn) = random_toy(&shape, seed)?;
        let oracle = brute_force_optimal(&bnn, &p)?.map(|t| t.scaled_reward);
        let art = encode(&p, &bnn)?;
        let report = solve(&art, &p, &bnn, &Solver::Builtin { max_vars: None }, None)?;
        println!(
            "seed {seed}: oracle {oracle:?} maxsat {:?} agree {:?}",
            report.recomputed_reward, report.agree
        );
    }
    Ok(())
}
