//! Encodes `x1 + x2 + x3 + x4 <= 2` and counts the models of the result.

use bnnplan::cnf::search::Search;
use bnnplan::cnf::{encode_card_le, Lit, PbRow, WcnfFormula};

fn main() -> bnnplan::Result<()> {
    let mut f = WcnfFormula::new();
    let xs: Vec<Lit> = (0..4).map(|_| f.fresh_var()).collect();
    encode_card_le(&mut f, &PbRow::new(xs.iter().map(|&x| (1, x)).collect(), 2))?;
    println!(
        "{} auxiliary variables, {} clauses",
        f.num_vars() - 4,
        f.num_hard()
    );
    let mut models = 0;
    for mask in 0u32..16 {
        let assume: Vec<Lit> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| x.with_polarity(mask >> i & 1 == 1))
            .collect();
        if Search::new(&f).satisfy(&assume).is_some() {
            models += 1;
        }
    }
    println!("{models} of 16 input patterns are allowed");
    Ok(())
}
