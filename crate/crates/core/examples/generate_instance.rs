//! Generates a navigation instance and prints its canonical manifest.
//!
//! cargo run --example generate_instance -- [N] [H] [seed]

use bnnplan::domains::{generate, DomainSpec, Family};
use bnnplan::io::InstanceManifest;

fn main() -> bnnplan::Result<()> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let n = *args.first().unwrap_or(&3) as usize;
    let h = *args.get(1).unwrap_or(&4) as usize;
    let seed = *args.get(2).unwrap_or(&7);
    let spec = DomainSpec::new(Family::Navigation, n, h).with_seed(seed);
    let inst = generate(&spec)?;
    eprintln!("{} widths {:?}", spec.file_stem(), inst.bnn.widths());
    print!("{}", InstanceManifest::from_instance(&inst).write()?);
    Ok(())
}
