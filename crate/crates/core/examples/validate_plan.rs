//! Rolls out a hand-written plan and lists the conditions it breaks.

use bnnplan::domains::{generate, DomainSpec, Family, WeightMode};
use bnnplan::driver::validate_plan;
use bnnplan::io::read_plan;

fn main() -> bnnplan::Result<()> {
    let spec = DomainSpec::new(Family::Navigation, 3, 4).with_weight_mode(WeightMode::Handcrafted);
    let inst = generate(&spec)?;
    // actions are up, down, right, left; two moves at once break the mutex
    let plan = read_plan("[[0,0,1,0], [0,1,1,0], [0,0,0,0], [0,1,0,0]]")?;
    let verdict = validate_plan(&inst.problem, &inst.bnn, &plan)?;
    println!("ok: {}", verdict.ok);
    for v in &verdict.violations {
        println!("step {} {} row {}", v.step, v.kind, v.row);
    }
    println!("reward: {}", verdict.trajectory.reward());
    Ok(())
}
