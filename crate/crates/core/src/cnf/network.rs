//! Odd-even merge sorting networks turned into CNF.
//!
//! Every comparator splits into an OR wire (the larger output) and an AND
//! wire (the smaller one). Only the wires in the cone of influence of the
//! requested sorted output are materialised, which gives the usual
//! cardinality-network savings without building truncated merges by hand.
//! Wire `k - 1` of the sorted outputs is true iff at least `k` inputs are.

use super::{Lit, WcnfFormula};
use crate::Result;

/// Comparators `(i, j)`, `i < j`, of Batcher's odd-even merge sort for `n`
/// wires. Each comparator moves the larger value to `i`.
pub fn batcher_comparators(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut p = 1;
    while p < n {
        let mut k = p;
        while k >= 1 {
            let mut j = k % p;
            while j + k < n {
                for i in 0..k.min(n - j - k) {
                    if (i + j) / (2 * p) == (i + j + k) / (2 * p) {
                        out.push((i + j, i + j + k));
                    }
                }
                j += 2 * k;
            }
            k /= 2;
        }
        p *= 2;
    }
    out
}

#[derive(Clone, Copy, Debug)]
enum Node {
    Input(Lit),
    Or(usize, usize),
    And(usize, usize),
}

/// Symbolic sorting network: node DAG plus the node sitting on each sorted
/// output position (descending).
struct Sorter {
    nodes: Vec<Node>,
    outputs: Vec<usize>,
}

impl Sorter {
    fn new(inputs: &[Lit]) -> Self {
        let mut nodes: Vec<Node> = inputs.iter().map(|&l| Node::Input(l)).collect();
        let mut wires: Vec<usize> = (0..inputs.len()).collect();
        for (i, j) in batcher_comparators(inputs.len()) {
            let (a, b) = (wires[i], wires[j]);
            nodes.push(Node::Or(a, b));
            wires[i] = nodes.len() - 1;
            nodes.push(Node::And(a, b));
            wires[j] = nodes.len() - 1;
        }
        Sorter {
            nodes,
            outputs: wires,
        }
    }

    /// Emits clauses defining `target` and everything it depends on. With
    /// `two_sided` the wires are full equivalences; otherwise only the
    /// upward implications (input true ⇒ wire true) are added.
    fn emit(&self, f: &mut WcnfFormula, target: usize, two_sided: bool) -> Result<Lit> {
        let mut in_cone = vec![false; self.nodes.len()];
        let mut stack = vec![target];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut in_cone[id], true) {
                continue;
            }
            if let Node::Or(a, b) | Node::And(a, b) = self.nodes[id] {
                stack.push(a);
                stack.push(b);
            }
        }
        let mut lits: Vec<Option<Lit>> = vec![None; self.nodes.len()];
        for (id, node) in self.nodes.iter().enumerate() {
            if !in_cone[id] {
                continue;
            }
            let lit = match *node {
                Node::Input(l) => l,
                Node::Or(a, b) => {
                    let (a, b) = (lits[a].expect("topological"), lits[b].expect("topological"));
                    let c = f.fresh_var();
                    f.add_hard(&[!a, c])?;
                    f.add_hard(&[!b, c])?;
                    if two_sided {
                        f.add_hard(&[!c, a, b])?;
                    }
                    c
                }
                Node::And(a, b) => {
                    let (a, b) = (lits[a].expect("topological"), lits[b].expect("topological"));
                    let d = f.fresh_var();
                    f.add_hard(&[!a, !b, d])?;
                    if two_sided {
                        f.add_hard(&[!d, a])?;
                        f.add_hard(&[!d, b])?;
                    }
                    d
                }
            };
            lits[id] = Some(lit);
        }
        Ok(lits[target].expect("target in cone"))
    }
}

/// At most `k` of `lits` are true, `k < lits.len()`.
pub(super) fn encode_at_most(f: &mut WcnfFormula, lits: &[Lit], k: usize) -> Result<()> {
    debug_assert!(k < lits.len());
    if k == 0 {
        for &l in lits {
            f.add_hard(&[!l])?;
        }
        return Ok(());
    }
    let sorter = Sorter::new(lits);
    let wire = sorter.emit(f, sorter.outputs[k], false)?;
    f.add_hard(&[!wire])
}

/// `out <-> (at least k of inputs are true)`, encoded two-sided.
///
/// Degenerate thresholds collapse to a unit clause on `out`. Otherwise the
/// `k`-th sorted output of a sorting network over `inputs` is tied to `out`
/// by two binary clauses.
pub fn encode_act_bicond(f: &mut WcnfFormula, inputs: &[Lit], k: i64, out: Lit) -> Result<()> {
    if k <= 0 {
        return f.add_hard(&[out]);
    }
    if k as usize > inputs.len() {
        return f.add_hard(&[!out]);
    }
    let sorter = Sorter::new(inputs);
    let wire = sorter.emit(f, sorter.outputs[k as usize - 1], true)?;
    f.add_hard(&[!out, wire])?;
    f.add_hard(&[out, !wire])
}
