//! Generalized totalizer for weighted `<=` rows.
//!
//! Each tree node owns one variable per reachable partial sum; sums above
//! the bound are merged into a single overflow value `bound + 1`, which is
//! forbidden at the root.

use super::{Lit, WcnfFormula};
use crate::Result;

type Sums = Vec<(u64, Lit)>;

/// `sum(c * l) <= bound` for positive `c <= bound`.
pub(super) fn encode_le(f: &mut WcnfFormula, terms: &[(u64, Lit)], bound: u64) -> Result<()> {
    debug_assert!(terms.len() >= 2);
    let overflow = bound + 1;
    let mid = terms.len() / 2;
    let left = build(f, &terms[..mid], overflow)?;
    let right = build(f, &terms[mid..], overflow)?;
    for &(a, la) in &left {
        if a >= overflow {
            f.add_hard(&[!la])?;
        }
    }
    for &(b, rb) in &right {
        if b >= overflow {
            f.add_hard(&[!rb])?;
        }
    }
    for &(a, la) in &left {
        for &(b, rb) in &right {
            if a < overflow && b < overflow && a + b >= overflow {
                f.add_hard(&[!la, !rb])?;
            }
        }
    }
    Ok(())
}

fn build(f: &mut WcnfFormula, terms: &[(u64, Lit)], overflow: u64) -> Result<Sums> {
    if let [(c, l)] = terms {
        return Ok(vec![((*c).min(overflow), *l)]);
    }
    let mid = terms.len() / 2;
    let left = build(f, &terms[..mid], overflow)?;
    let right = build(f, &terms[mid..], overflow)?;

    let mut values: Vec<u64> = left
        .iter()
        .map(|(a, _)| *a)
        .chain(right.iter().map(|(b, _)| *b))
        .chain(
            left.iter()
                .flat_map(|(a, _)| right.iter().map(move |(b, _)| (a + b).min(overflow))),
        )
        .collect();
    values.sort_unstable();
    values.dedup();
    let out: Sums = values.into_iter().map(|v| (v, f.fresh_var())).collect();
    let var_of = |v: u64| out.iter().find(|(w, _)| *w == v).expect("value present").1;

    for &(a, la) in &left {
        f.add_hard(&[!la, var_of(a)])?;
    }
    for &(b, rb) in &right {
        f.add_hard(&[!rb, var_of(b)])?;
    }
    for &(a, la) in &left {
        for &(b, rb) in &right {
            f.add_hard(&[!la, !rb, var_of((a + b).min(overflow))])?;
        }
    }
    Ok(out)
}
