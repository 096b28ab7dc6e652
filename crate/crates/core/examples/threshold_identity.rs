//! A neuron fires when its weighted sum plus bias is non-negative, which is
//! the same as "at least k of the sign-adjusted inputs are true".

use bnnplan::bnn::{activation_threshold, neuron_fires};

fn main() -> bnnplan::Result<()> {
    let weights = [1i8, -1, 1, 1, -1];
    let n = weights.len();
    for bias in -6..=6 {
        let k = activation_threshold(n, bias);
        for mask in 0u32..1 << n {
            let x: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let agreeing = x
                .iter()
                .zip(&weights)
                .filter(|&(&xi, &w)| xi == (w > 0))
                .count() as i64;
            assert_eq!(neuron_fires(&weights, &x, bias)?, agreeing >= k);
        }
        println!("bias {bias:>2}: fires iff at least {k} inputs agree with their weight");
    }
    Ok(())
}
