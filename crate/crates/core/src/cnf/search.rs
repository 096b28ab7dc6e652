//! Small complete search over a [`WcnfFormula`].
//!
//! Counter-based DPLL with unit propagation on hard clauses, plus
//! branch-and-bound on falsified soft weight. It always explores the whole
//! space (nothing is learned or forgotten), so it serves as an exact
//! reference for tiny formulas: satisfiability under assumptions,
//! extension of a partial assignment to auxiliaries, and weighted optimum.

use std::time::Instant;

use super::{Lit, WcnfFormula};

pub struct Search {
    clauses: Vec<Vec<Lit>>,
    weight: Vec<u64>,
    occurs: Vec<Vec<u32>>,
    n_true: Vec<u32>,
    n_false: Vec<u32>,
    value: Vec<Option<bool>>,
    trail: Vec<Lit>,
    unsat_hard: usize,
    open_soft: usize,
    lost: u64,
    pending: Vec<u32>,
    conflict: bool,
    root_len: usize,
    root_conflict: bool,
    best: Option<(u64, Vec<bool>)>,
    nodes: u64,
    deadline: Option<Instant>,
    timed_out: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Satisfy,
    Optimize,
}

fn index(l: Lit) -> usize {
    2 * (l.var() as usize - 1) + usize::from(!l.is_positive())
}

impl Search {
    pub fn new(f: &WcnfFormula) -> Self {
        let num_vars = f.num_vars() as usize;
        let mut clauses: Vec<Vec<Lit>> = f.hard_clauses().map(<[Lit]>::to_vec).collect();
        let mut weight = vec![0; clauses.len()];
        for s in f.soft_clauses() {
            clauses.push(s.lits.clone());
            weight.push(s.weight);
        }
        let mut occurs = vec![Vec::new(); 2 * num_vars];
        for (c, lits) in clauses.iter().enumerate() {
            for &l in lits {
                occurs[index(l)].push(c as u32);
            }
        }
        let unsat_hard = weight.iter().filter(|w| **w == 0).count();
        let open_soft = clauses.len() - unsat_hard;
        let mut s = Search {
            n_true: vec![0; clauses.len()],
            n_false: vec![0; clauses.len()],
            clauses,
            weight,
            occurs,
            value: vec![None; num_vars],
            trail: Vec::new(),
            unsat_hard,
            open_soft,
            lost: 0,
            pending: Vec::new(),
            conflict: false,
            root_len: 0,
            root_conflict: false,
            best: None,
            nodes: 0,
            deadline: None,
            timed_out: false,
        };
        s.pending = (0..s.clauses.len() as u32).collect();
        s.root_conflict = !s.propagate();
        s.root_len = s.trail.len();
        s
    }

    /// Stop searching at `deadline`; later calls report what they found so
    /// far and [`timed_out`](Self::timed_out) turns true.
    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    /// Whether the last call was cut short by the deadline.
    pub fn timed_out(&self) -> bool {
        self.timed_out
    }

    /// Decision nodes visited by the last call.
    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    fn assign(&mut self, lit: Lit) {
        let v = lit.var() as usize - 1;
        debug_assert!(self.value[v].is_none());
        self.value[v] = Some(lit.is_positive());
        self.trail.push(lit);
        for k in 0..self.occurs[index(lit)].len() {
            let c = self.occurs[index(lit)][k] as usize;
            self.n_true[c] += 1;
            if self.n_true[c] == 1 {
                if self.weight[c] == 0 {
                    self.unsat_hard -= 1;
                } else if (self.n_false[c] as usize) < self.clauses[c].len() {
                    self.open_soft -= 1;
                }
            }
        }
        for k in 0..self.occurs[index(!lit)].len() {
            let c = self.occurs[index(!lit)][k] as usize;
            self.n_false[c] += 1;
            if self.n_true[c] > 0 {
                continue;
            }
            let len = self.clauses[c].len() as u32;
            if self.weight[c] == 0 {
                if self.n_false[c] == len {
                    self.conflict = true;
                } else if self.n_false[c] + 1 == len {
                    self.pending.push(c as u32);
                }
            } else if self.n_false[c] == len {
                self.open_soft -= 1;
                self.lost += self.weight[c];
            }
        }
    }

    fn unassign(&mut self) {
        let lit = self.trail.pop().expect("nonempty trail");
        for k in 0..self.occurs[index(lit)].len() {
            let c = self.occurs[index(lit)][k] as usize;
            self.n_true[c] -= 1;
            if self.n_true[c] == 0 {
                if self.weight[c] == 0 {
                    self.unsat_hard += 1;
                } else if (self.n_false[c] as usize) < self.clauses[c].len() {
                    self.open_soft += 1;
                }
            }
        }
        for k in 0..self.occurs[index(!lit)].len() {
            let c = self.occurs[index(!lit)][k] as usize;
            if self.n_true[c] == 0
                && self.weight[c] > 0
                && self.n_false[c] as usize == self.clauses[c].len()
            {
                self.open_soft += 1;
                self.lost -= self.weight[c];
            }
            self.n_false[c] -= 1;
        }
        self.value[lit.var() as usize - 1] = None;
    }

    fn backtrack(&mut self, len: usize) {
        while self.trail.len() > len {
            self.unassign();
        }
        self.conflict = false;
        self.pending.clear();
    }

    /// Unit propagation over hard clauses. Returns false on conflict.
    fn propagate(&mut self) -> bool {
        while let Some(c) = self.pending.pop() {
            if self.conflict {
                break;
            }
            let c = c as usize;
            if self.weight[c] != 0 || self.n_true[c] > 0 {
                continue;
            }
            let len = self.clauses[c].len() as u32;
            if self.n_false[c] == len {
                self.conflict = true;
                break;
            }
            if self.n_false[c] + 1 == len {
                let unit = self.clauses[c]
                    .iter()
                    .copied()
                    .find(|l| self.value[l.var() as usize - 1].is_none())
                    .expect("one literal unassigned");
                self.assign(unit);
            }
        }
        self.pending.clear();
        !self.conflict
    }

    fn lit_value(&self, l: Lit) -> Option<bool> {
        self.value[l.var() as usize - 1].map(|v| v == l.is_positive())
    }

    /// Lowest unassigned variable occurring in a clause that no assigned
    /// literal satisfies yet.
    fn branch_var(&self) -> Option<u32> {
        (0..self.value.len()).find_map(|v| {
            if self.value[v].is_some() {
                return None;
            }
            let touches_open = [2 * v, 2 * v + 1]
                .iter()
                .any(|&i| self.occurs[i].iter().any(|&c| self.n_true[c as usize] == 0));
            touches_open.then_some(v as u32 + 1)
        })
    }

    fn model(&self) -> Vec<bool> {
        self.value.iter().map(|v| v.unwrap_or(false)).collect()
    }

    /// Returns true to stop the whole search.
    fn dfs(&mut self, mode: Mode) -> bool {
        self.nodes += 1;
        if self.nodes.is_multiple_of(1024) {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.timed_out = true;
                    return true;
                }
            }
        }
        if mode == Mode::Optimize {
            if let Some((best, _)) = &self.best {
                if self.lost >= *best {
                    return false;
                }
            }
        }
        let done = self.unsat_hard == 0 && (mode == Mode::Satisfy || self.open_soft == 0);
        if done {
            self.best = Some((self.lost, self.model()));
            return mode == Mode::Satisfy;
        }
        let Some(var) = self.branch_var() else {
            return false;
        };
        for polarity in [false, true] {
            let level = self.trail.len();
            self.assign(Lit::new(var, polarity));
            self.pending.clear();
            self.pending.extend(
                self.clauses_of(var)
                    .filter(|&c| self.weight[c as usize] == 0)
                    .collect::<Vec<_>>(),
            );
            let stop = if self.propagate() {
                self.dfs(mode)
            } else {
                false
            };
            self.backtrack(level);
            if stop {
                return true;
            }
        }
        false
    }

    fn clauses_of(&self, var: u32) -> impl Iterator<Item = u32> + '_ {
        let v = var as usize - 1;
        self.occurs[2 * v]
            .iter()
            .chain(&self.occurs[2 * v + 1])
            .copied()
    }

    fn run(&mut self, assumptions: &[Lit], mode: Mode) -> Option<(u64, Vec<bool>)> {
        self.best = None;
        self.nodes = 0;
        self.timed_out = false;
        if self.root_conflict {
            return None;
        }
        self.backtrack(self.root_len);
        let mut ok = true;
        for &a in assumptions {
            match self.lit_value(a) {
                Some(true) => {}
                Some(false) => {
                    ok = false;
                    break;
                }
                None => {
                    self.assign(a);
                    let touched: Vec<u32> = self.clauses_of(a.var()).collect();
                    self.pending.extend(touched);
                    if !self.propagate() {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if ok {
            self.dfs(mode);
        }
        self.backtrack(self.root_len);
        self.best.take()
    }

    /// A model of the hard clauses extending `assumptions`, if one exists.
    pub fn satisfy(&mut self, assumptions: &[Lit]) -> Option<Vec<bool>> {
        self.run(assumptions, Mode::Satisfy).map(|(_, m)| m)
    }

    /// Minimum total weight of falsified soft clauses over models of the hard
    /// clauses extending `assumptions`, with one optimal model. After a
    /// timeout the model is merely the best one found.
    pub fn optimize(&mut self, assumptions: &[Lit]) -> Option<(u64, Vec<bool>)> {
        self.run(assumptions, Mode::Optimize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(f: &WcnfFormula) -> Option<u64> {
        let n = f.num_vars() as usize;
        (0u32..1 << n)
            .filter_map(|code| {
                let a: Vec<bool> = (0..n).map(|i| code >> i & 1 == 1).collect();
                let (ok, sat) = f.eval(&a).unwrap();
                ok.then(|| f.sum_soft() - sat)
            })
            .min()
    }

    #[test]
    fn agrees_with_enumeration_on_random_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..400 {
            let mut f = WcnfFormula::new();
            let n = rng.gen_range(1..=9u32);
            f.reserve(n);
            let random_clause = |rng: &mut ChaCha8Rng| -> Vec<Lit> {
                let len = rng.gen_range(1..=3);
                (0..len)
                    .map(|_| Lit::new(rng.gen_range(1..=n), rng.gen()))
                    .collect()
            };
            for _ in 0..rng.gen_range(0..=12) {
                let c = random_clause(&mut rng);
                f.add_hard(&c).unwrap();
            }
            for _ in 0..rng.gen_range(0..=6) {
                let c = random_clause(&mut rng);
                f.add_soft(rng.gen_range(1..=5), &c).unwrap();
            }
            let expected = brute(&f);
            let mut s = Search::new(&f);
            let got = s.optimize(&[]);
            assert_eq!(got.as_ref().map(|(c, _)| *c), expected);
            if let Some((cost, model)) = got {
                let (ok, sat) = f.eval(&model).unwrap();
                assert!(ok);
                assert_eq!(f.sum_soft() - sat, cost);
            }
            assert_eq!(s.satisfy(&[]).is_some(), expected.is_some());
        }
    }

    #[test]
    fn assumptions_restrict_models() {
        let mut f = WcnfFormula::new();
        let x = f.fresh_var();
        let y = f.fresh_var();
        f.add_hard(&[!x, y]).unwrap();
        let mut s = Search::new(&f);
        assert!(s.satisfy(&[x, !y]).is_none());
        let m = s.satisfy(&[x]).unwrap();
        assert_eq!(m, vec![true, true]);
        assert!(s.satisfy(&[x, !x]).is_none());
        // state is restored between calls
        assert!(s.satisfy(&[!y]).is_some());
    }

    #[test]
    fn root_conflict() {
        let mut f = WcnfFormula::new();
        let x = f.fresh_var();
        f.add_hard(&[x]).unwrap();
        f.add_hard(&[!x]).unwrap();
        assert!(Search::new(&f).satisfy(&[]).is_none());
    }
}
