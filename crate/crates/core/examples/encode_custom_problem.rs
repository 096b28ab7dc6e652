//! Builds a two-bit problem and a one-layer network by hand, compiles it
//! and writes WCNF 2022 to stdout.

use std::collections::BTreeMap;

use bnnplan::bnn::{Bnn, BnnLayer, Neuron};
use bnnplan::encoder::encode;
use bnnplan::io::{write_artifact, WcnfFormat};
use bnnplan::model::{Comparison, ProblemBuilder};
use bnnplan::Decimal;

fn main() -> bnnplan::Result<()> {
    let mut b = ProblemBuilder::new();
    let lamp = b.state_bit("lamp", false);
    let press = b.action_bit("press");
    b.action_reward(press, Decimal::from_int(-1));
    b.state_reward(lamp, "0.5".parse()?);
    b.goal(vec![(lamp, 1)], Comparison::Eq, 1);
    let problem = b.build(2)?;

    // lamp' = lamp or press
    let layer = BnnLayer::new(2, vec![Neuron::new(vec![1, 1], 0)?])?;
    let bnn = Bnn::new(
        Bnn::standard_inputs(1, 1),
        vec![layer],
        vec![0],
        BTreeMap::new(),
    )?;

    let art = encode(&problem, &bnn)?;
    for (group, count) in &art.group_sizes {
        eprintln!("{group}: {count} hard clauses");
    }
    write_artifact(&art, WcnfFormat::Wcnf2022, &mut std::io::stdout().lock())?;
    Ok(())
}
