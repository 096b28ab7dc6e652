//! Clause database and the two CNF encoding primitives used by the encoder:
//! [`encode_card_le`] for linear `<=` rows and [`encode_act_bicond`] for
//! neuron activations.

mod network;
pub mod search;
mod totalizer;

use std::{fmt, ops::Not};

use crate::{error::Error, Result};

pub use network::{batcher_comparators, encode_act_bicond};

/// A solver literal in DIMACS convention: `+v` or `-v`, `v >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(i32);

impl Lit {
    pub fn new(var: u32, positive: bool) -> Lit {
        assert!(
            var >= 1 && var <= i32::MAX as u32,
            "variable {var} out of range"
        );
        if positive {
            Lit(var as i32)
        } else {
            Lit(-(var as i32))
        }
    }

    pub fn pos(var: u32) -> Lit {
        Lit::new(var, true)
    }

    pub fn from_dimacs(v: i32) -> Option<Lit> {
        (v != 0).then_some(Lit(v))
    }

    pub fn var(self) -> u32 {
        self.0.unsigned_abs()
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn to_dimacs(self) -> i32 {
        self.0
    }

    /// Truth value under an assignment indexed by `var - 1`.
    pub fn eval(self, assignment: &[bool]) -> bool {
        assignment[self.var() as usize - 1] == self.is_positive()
    }

    /// This literal when `value` is true, its negation otherwise.
    pub fn with_polarity(self, value: bool) -> Lit {
        if value {
            self
        } else {
            !self
        }
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(-self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SoftClause {
    pub weight: u64,
    pub lits: Vec<Lit>,
}

/// Weighted partial MaxSAT formula under construction.
///
/// Hard clauses are stored flat. The hard weight (`top`) is derived: it is
/// always one more than the total soft weight.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WcnfFormula {
    num_vars: u32,
    hard_lits: Vec<Lit>,
    hard_ends: Vec<usize>,
    soft: Vec<SoftClause>,
}

impl WcnfFormula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    /// A positive literal on a variable never handed out before.
    pub fn fresh_var(&mut self) -> Lit {
        self.num_vars += 1;
        Lit::pos(self.num_vars)
    }

    /// Reserves `count` consecutive variables and returns the first one.
    pub fn reserve(&mut self, count: u32) -> u32 {
        let first = self.num_vars + 1;
        self.num_vars += count;
        first
    }

    fn check_lits(&self, lits: &[Lit]) -> Result<()> {
        match lits.iter().find(|l| l.var() > self.num_vars) {
            Some(l) => Err(Error::structural(format!(
                "literal {l} uses an unallocated variable (num_vars = {})",
                self.num_vars
            ))),
            None => Ok(()),
        }
    }

    pub fn add_hard(&mut self, lits: &[Lit]) -> Result<()> {
        if lits.is_empty() {
            return Err(Error::Unsatisfiable("empty hard clause".into()));
        }
        self.check_lits(lits)?;
        self.hard_lits.extend_from_slice(lits);
        self.hard_ends.push(self.hard_lits.len());
        Ok(())
    }

    pub fn add_soft(&mut self, weight: u64, lits: &[Lit]) -> Result<()> {
        if weight == 0 {
            return Err(Error::Parameter(
                "soft clause weight must be at least 1".into(),
            ));
        }
        if lits.is_empty() {
            return Err(Error::structural("empty soft clause"));
        }
        self.check_lits(lits)?;
        self.soft.push(SoftClause {
            weight,
            lits: lits.to_vec(),
        });
        Ok(())
    }

    pub fn num_hard(&self) -> usize {
        self.hard_ends.len()
    }

    pub fn num_soft(&self) -> usize {
        self.soft.len()
    }

    pub fn hard_clauses(&self) -> impl ExactSizeIterator<Item = &[Lit]> + '_ {
        (0..self.hard_ends.len()).map(move |k| {
            let start = if k == 0 { 0 } else { self.hard_ends[k - 1] };
            &self.hard_lits[start..self.hard_ends[k]]
        })
    }

    pub fn soft_clauses(&self) -> &[SoftClause] {
        &self.soft
    }

    pub fn sum_soft(&self) -> u64 {
        self.soft.iter().map(|s| s.weight).sum()
    }

    /// Hard-clause weight for the `p wcnf` header: exceeds the total soft
    /// weight.
    pub fn top(&self) -> u64 {
        self.sum_soft() + 1
    }

    /// `(every hard clause satisfied, total weight of satisfied soft
    /// clauses)` under a total assignment indexed by `var - 1`.
    pub fn eval(&self, assignment: &[bool]) -> Result<(bool, u64)> {
        if assignment.len() < self.num_vars as usize {
            return Err(Error::structural(format!(
                "assignment covers {} of {} variables",
                assignment.len(),
                self.num_vars
            )));
        }
        let hard_ok = self
            .hard_clauses()
            .all(|c| c.iter().any(|l| l.eval(assignment)));
        let soft = self
            .soft
            .iter()
            .filter(|s| s.lits.iter().any(|l| l.eval(assignment)))
            .map(|s| s.weight)
            .sum();
        Ok((hard_ok, soft))
    }
}

/// Pseudo-Boolean row `sum(coeff * lit) <= bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PbRow {
    pub terms: Vec<(i64, Lit)>,
    pub bound: i64,
}

impl PbRow {
    pub fn new(terms: Vec<(i64, Lit)>, bound: i64) -> Self {
        PbRow { terms, bound }
    }

    /// All coefficients positive: `c x <= k` with `c < 0` becomes
    /// `|c| !x <= k + |c|`; zero terms are dropped.
    pub fn normalize(&self) -> PbRow {
        let mut bound = self.bound;
        let terms = self
            .terms
            .iter()
            .filter(|(c, _)| *c != 0)
            .map(|&(c, l)| {
                if c < 0 {
                    bound -= c;
                    (-c, !l)
                } else {
                    (c, l)
                }
            })
            .collect();
        PbRow { terms, bound }
    }

    pub fn holds(&self, assignment: &[bool]) -> bool {
        let lhs: i64 = self
            .terms
            .iter()
            .filter(|(_, l)| l.eval(assignment))
            .map(|(c, _)| c)
            .sum();
        lhs <= self.bound
    }
}

/// Appends hard clauses whose models, restricted to the row's literals, are
/// exactly the assignments satisfying `row`.
///
/// Unit-coefficient rows (after dividing out a common coefficient) go
/// through a cardinality network, everything else through a generalized
/// totalizer.
pub fn encode_card_le(f: &mut WcnfFormula, row: &PbRow) -> Result<()> {
    let row = row.normalize();
    if row.bound < 0 {
        return Err(Error::Unsatisfiable(format!(
            "linear row needs a sum of non-negative terms to be at most {}",
            row.bound
        )));
    }
    let bound = row.bound as u64;
    let mut terms = Vec::with_capacity(row.terms.len());
    for &(c, l) in &row.terms {
        if c as u64 > bound {
            f.add_hard(&[!l])?;
        } else {
            terms.push((c as u64, l));
        }
    }
    let total: u64 = terms.iter().map(|(c, _)| c).sum();
    if total <= bound {
        return Ok(());
    }
    let first = terms[0].0;
    if terms.iter().all(|(c, _)| *c == first) {
        let lits: Vec<Lit> = terms.iter().map(|(_, l)| *l).collect();
        network::encode_at_most(f, &lits, (bound / first) as usize)
    } else {
        totalizer::encode_le(f, &terms, bound)
    }
}
