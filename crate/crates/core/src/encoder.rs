//! Compilation of a planning problem and its network into weighted partial
//! MaxSAT.
//!
//! Steps are numbered from 0 here: actions live at `t = 0..H`, states at
//! `t = 0..=H` with `t = 0` the initial state. Clause groups are emitted in
//! a fixed order (initial state, goal, global rows, network links,
//! activations, reward) and inside each group the step is the outer loop.

use serde::{Deserialize, Serialize};

use crate::bnn::{Bnn, InputSource, StateSource, Trajectory, UncoveredRule};
use crate::cnf::{encode_act_bicond, encode_card_le, Lit, PbRow, WcnfFormula};
use crate::model::PlanningProblem;
use crate::{Error, Result};

/// Solver variables of the time-indexed problem variables.
///
/// Layout: all `X` (step-major, then action index), then all `Y` (step-major,
/// then state bit), then all `Z` (step, layer, neuron). Auxiliary variables
/// of the cardinality encodings come after.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarAtlas {
    pub horizon: usize,
    pub state_bits: usize,
    pub action_bits: usize,
    /// Layer widths, input layer first.
    pub widths: Vec<usize>,
    pub x_first: u32,
    pub y_first: u32,
    pub z_first: u32,
    /// One past the last atlas variable.
    pub end: u32,
}

impl VarAtlas {
    pub fn new(horizon: usize, state_bits: usize, action_bits: usize, widths: Vec<usize>) -> Self {
        let x_first = 1;
        let y_first = x_first + (horizon * action_bits) as u32;
        let z_first = y_first + ((horizon + 1) * state_bits) as u32;
        let per_step: usize = widths.iter().sum();
        let end = z_first + (horizon * per_step) as u32;
        VarAtlas {
            horizon,
            state_bits,
            action_bits,
            widths,
            x_first,
            y_first,
            z_first,
            end,
        }
    }

    pub fn for_problem(p: &PlanningProblem, bnn: &Bnn) -> Self {
        VarAtlas::new(
            p.horizon,
            p.num_state_bits(),
            p.num_action_bits(),
            bnn.widths(),
        )
    }

    /// Number of atlas variables.
    pub fn num_vars(&self) -> u32 {
        self.end - 1
    }

    /// Action `i` at step `t`.
    pub fn x(&self, i: usize, t: usize) -> Lit {
        debug_assert!(i < self.action_bits && t < self.horizon);
        Lit::pos(self.x_first + (t * self.action_bits + i) as u32)
    }

    /// State bit `i` at step `t`.
    pub fn y(&self, i: usize, t: usize) -> Lit {
        debug_assert!(i < self.state_bits && t <= self.horizon);
        Lit::pos(self.y_first + (t * self.state_bits + i) as u32)
    }

    /// Neuron `j` of layer `l` (0 = input layer) at step `t`.
    pub fn z(&self, j: usize, l: usize, t: usize) -> Lit {
        debug_assert!(j < self.widths[l] && t < self.horizon);
        let per_step: usize = self.widths.iter().sum();
        let before: usize = self.widths[..l].iter().sum();
        Lit::pos(self.z_first + (t * per_step + before + j) as u32)
    }

    /// Action bits per step read off a model (indexed by variable − 1).
    pub fn decode_plan(&self, model: &[bool]) -> Result<Vec<Vec<bool>>> {
        if model.len() < self.num_vars() as usize {
            return Err(Error::structural(format!(
                "model assigns {} variables, atlas needs {}",
                model.len(),
                self.num_vars()
            )));
        }
        Ok((0..self.horizon)
            .map(|t| {
                (0..self.action_bits)
                    .map(|i| self.x(i, t).eval(model))
                    .collect()
            })
            .collect())
    }

    /// The assignment of every atlas variable induced by a simulated
    /// trajectory, with neuron values recomputed from the network.
    pub fn induced_assignment(&self, bnn: &Bnn, trajectory: &Trajectory) -> Result<Vec<bool>> {
        let mut a = vec![false; self.num_vars() as usize];
        let mut set = |l: Lit, v: bool| a[l.var() as usize - 1] = v;
        for (t, s) in trajectory.states.iter().enumerate() {
            for (i, &v) in s.iter().enumerate() {
                set(self.y(i, t), v);
            }
        }
        for (t, act) in trajectory.actions.iter().enumerate() {
            for (i, &v) in act.iter().enumerate() {
                set(self.x(i, t), v);
            }
            for (l, layer) in bnn
                .activations(&trajectory.states[t], act)?
                .iter()
                .enumerate()
            {
                for (j, &v) in layer.iter().enumerate() {
                    set(self.z(j, l, t), v);
                }
            }
        }
        Ok(a)
    }
}

/// A compiled instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodingArtifact {
    pub formula: WcnfFormula,
    pub atlas: VarAtlas,
    /// Scaled reward of an assignment = satisfied soft weight + offset.
    pub objective_offset: i64,
    pub scale_pow10: u32,
    /// Hard clause count per group, in emission order.
    pub group_sizes: Vec<(&'static str, usize)>,
}

impl EncodingArtifact {
    /// Scaled reward of any hard-feasible assignment whose falsified soft
    /// weight is `cost`.
    pub fn reward_from_cost(&self, cost: u64) -> i64 {
        (self.formula.sum_soft() as i64 - cost as i64) + self.objective_offset
    }

    /// Inverse of [`reward_from_cost`](Self::reward_from_cost).
    pub fn cost_from_reward(&self, scaled_reward: i64) -> i64 {
        self.formula.sum_soft() as i64 - (scaled_reward - self.objective_offset)
    }
}

fn equiv(f: &mut WcnfFormula, a: Lit, b: Lit) -> Result<()> {
    f.add_hard(&[!a, b])?;
    f.add_hard(&[a, !b])
}

pub fn encode_initial(p: &PlanningProblem, atlas: &VarAtlas, f: &mut WcnfFormula) -> Result<()> {
    for (i, &v) in p.initial.iter().enumerate() {
        f.add_hard(&[atlas.y(i, 0).with_polarity(v)])?;
    }
    Ok(())
}

pub fn encode_goal(p: &PlanningProblem, atlas: &VarAtlas, f: &mut WcnfFormula) -> Result<()> {
    for row in p.goal_rows() {
        let terms = row
            .state
            .iter()
            .map(|&(i, c)| (c, atlas.y(i, p.horizon)))
            .collect();
        encode_card_le(f, &PbRow::new(terms, row.bound))?;
    }
    Ok(())
}

pub fn encode_global(p: &PlanningProblem, atlas: &VarAtlas, f: &mut WcnfFormula) -> Result<()> {
    for t in 0..p.horizon {
        for row in p.global_rows() {
            let terms = row
                .state
                .iter()
                .map(|&(i, c)| (c, atlas.y(i, t)))
                .chain(row.action.iter().map(|&(i, c)| (c, atlas.x(i, t))))
                .collect();
            encode_card_le(f, &PbRow::new(terms, row.bound))?;
        }
    }
    Ok(())
}

pub fn encode_bnn_link(
    p: &PlanningProblem,
    bnn: &Bnn,
    atlas: &VarAtlas,
    f: &mut WcnfFormula,
) -> Result<()> {
    let last = bnn.layers().len();
    for t in 0..p.horizon {
        for (u, src) in bnn.input_map().iter().enumerate() {
            let v = match *src {
                InputSource::State(i) => atlas.y(i, t),
                InputSource::Action(i) => atlas.x(i, t),
            };
            equiv(f, v, atlas.z(u, 0, t))?;
        }
        for (j, &bit) in bnn.output_map().iter().enumerate() {
            equiv(f, atlas.y(bit, t + 1), atlas.z(j, last, t))?;
        }
        for bit in 0..p.num_state_bits() {
            match bnn.state_source(bit) {
                StateSource::Output(_) => {}
                StateSource::Rule(UncoveredRule::Frozen) => {
                    equiv(f, atlas.y(bit, t + 1), atlas.y(bit, t))?;
                }
                StateSource::Rule(UncoveredRule::Forbidden) => {
                    return Err(Error::structural(format!(
                        "state bit {bit} is not produced by the network and has no evolution rule"
                    )));
                }
            }
        }
    }
    Ok(())
}

pub fn encode_activations(bnn: &Bnn, atlas: &VarAtlas, f: &mut WcnfFormula) -> Result<()> {
    for t in 0..atlas.horizon {
        for (l, layer) in bnn.layers().iter().enumerate() {
            for (j, neuron) in layer.neurons.iter().enumerate() {
                let lits: Vec<Lit> = neuron
                    .weights
                    .iter()
                    .enumerate()
                    .map(|(i, &w)| {
                        let z = atlas.z(i, l, t);
                        if w > 0 {
                            z
                        } else {
                            !z
                        }
                    })
                    .collect();
                encode_act_bicond(f, &lits, neuron.threshold(), atlas.z(j, l + 1, t))?;
            }
        }
    }
    Ok(())
}

/// Adds the reward soft clauses and returns the objective offset.
pub fn encode_reward(p: &PlanningProblem, atlas: &VarAtlas, f: &mut WcnfFormula) -> Result<i64> {
    let state = p.reward.scaled_state()?;
    let action = p.reward.scaled_action()?;
    let mut offset = 0i64;
    let mut add = |f: &mut WcnfFormula, r: i64, lit: Lit| -> Result<()> {
        if r > 0 {
            f.add_soft(r as u64, &[lit])
        } else if r < 0 {
            offset += r;
            f.add_soft(r.unsigned_abs(), &[!lit])
        } else {
            Ok(())
        }
    };
    for t in 0..p.horizon {
        for (i, &r) in state.iter().enumerate() {
            add(f, r, atlas.y(i, t + 1))?;
        }
        for (i, &r) in action.iter().enumerate() {
            add(f, r, atlas.x(i, t))?;
        }
    }
    Ok(offset)
}

pub fn encode(p: &PlanningProblem, bnn: &Bnn) -> Result<EncodingArtifact> {
    p.ensure_valid()?;
    bnn.check_problem(p)?;
    let atlas = VarAtlas::for_problem(p, bnn);
    let mut f = WcnfFormula::new();
    f.reserve(atlas.num_vars());

    let mut group_sizes = Vec::new();
    let mut mark =
        |name, f: &WcnfFormula, before: usize| group_sizes.push((name, f.num_hard() - before));
    let before = f.num_hard();
    encode_initial(p, &atlas, &mut f)?;
    mark("initial", &f, before);
    let before = f.num_hard();
    encode_goal(p, &atlas, &mut f)?;
    mark("goal", &f, before);
    let before = f.num_hard();
    encode_global(p, &atlas, &mut f)?;
    mark("global", &f, before);
    let before = f.num_hard();
    encode_bnn_link(p, bnn, &atlas, &mut f)?;
    mark("link", &f, before);
    let before = f.num_hard();
    encode_activations(bnn, &atlas, &mut f)?;
    mark("activation", &f, before);
    let objective_offset = encode_reward(p, &atlas, &mut f)?;

    Ok(EncodingArtifact {
        formula: f,
        atlas,
        objective_offset,
        scale_pow10: p.reward.scale_pow10,
        group_sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bnn::{simulate, BnnLayer, Neuron};
    use crate::cnf::search::Search;
    use crate::model::{Comparison, ProblemBuilder};
    use crate::Decimal;
    use std::collections::BTreeMap;

    fn tiny(goal: Option<bool>) -> (PlanningProblem, Bnn) {
        let layer = BnnLayer::new(2, vec![Neuron::new(vec![1, 1], 0).unwrap()]).unwrap();
        let bnn = Bnn::new(
            Bnn::standard_inputs(1, 1),
            vec![layer],
            vec![0],
            BTreeMap::new(),
        )
        .unwrap();
        let mut b = ProblemBuilder::new();
        let s = b.state_bit("s", false);
        let a = b.action_bit("a");
        b.action_reward(a, Decimal::from_int(-1));
        if let Some(g) = goal {
            b.goal(vec![(s, 1)], Comparison::Eq, g as i64);
        }
        (b.build(1).unwrap(), bnn)
    }

    #[test]
    fn atlas_is_injective_and_first() {
        let atlas = VarAtlas::new(3, 2, 2, vec![4, 3, 2]);
        let mut seen = std::collections::BTreeSet::new();
        for t in 0..3 {
            for i in 0..2 {
                assert!(seen.insert(atlas.x(i, t).var()));
            }
            for (l, &w) in atlas.widths.iter().enumerate() {
                for j in 0..w {
                    assert!(seen.insert(atlas.z(j, l, t).var()));
                }
            }
        }
        for t in 0..=3 {
            for i in 0..2 {
                assert!(seen.insert(atlas.y(i, t).var()));
            }
        }
        assert_eq!(seen.len() as u32, atlas.num_vars());
        assert_eq!(*seen.iter().next_back().unwrap(), atlas.num_vars());
    }

    #[test]
    fn initial_units() {
        let mut b = ProblemBuilder::new();
        b.state_bit("a", true);
        b.state_bit("b", false);
        let p = b.build(1).unwrap();
        let atlas = VarAtlas::new(1, 2, 0, vec![2]);
        let mut f = WcnfFormula::new();
        f.reserve(atlas.num_vars());
        encode_initial(&p, &atlas, &mut f).unwrap();
        let clauses: Vec<Vec<Lit>> = f.hard_clauses().map(<[Lit]>::to_vec).collect();
        assert_eq!(clauses, vec![vec![atlas.y(0, 0)], vec![!atlas.y(1, 0)]]);
    }

    #[test]
    fn link_clause_count() {
        let (p, bnn) = tiny(None);
        let atlas = VarAtlas::for_problem(&p, &bnn);
        let mut f = WcnfFormula::new();
        f.reserve(atlas.num_vars());
        encode_bnn_link(&p, &bnn, &atlas, &mut f).unwrap();
        assert_eq!(f.num_hard(), 6);
        assert!(f.hard_clauses().all(|c| c.len() == 2));
    }

    #[test]
    fn frozen_bits_copy() {
        let layer = BnnLayer::new(2, vec![Neuron::new(vec![1, 1], 0).unwrap()]).unwrap();
        let bnn = Bnn::new(
            Bnn::standard_inputs(2, 0),
            vec![layer],
            vec![0],
            [(1, UncoveredRule::Frozen)].into(),
        )
        .unwrap();
        let mut b = ProblemBuilder::new();
        b.state_bit("a", false);
        b.state_bit("b", true);
        let p = b.build(1).unwrap();
        let atlas = VarAtlas::for_problem(&p, &bnn);
        let mut f = WcnfFormula::new();
        f.reserve(atlas.num_vars());
        encode_bnn_link(&p, &bnn, &atlas, &mut f).unwrap();
        let clauses: Vec<Vec<Lit>> = f.hard_clauses().map(<[Lit]>::to_vec).collect();
        assert!(clauses.contains(&vec![!atlas.y(1, 1), atlas.y(1, 0)]));
        assert!(clauses.contains(&vec![atlas.y(1, 1), !atlas.y(1, 0)]));

        let bnn = Bnn::new(
            Bnn::standard_inputs(2, 0),
            vec![BnnLayer::new(2, vec![Neuron::new(vec![1, 1], 0).unwrap()]).unwrap()],
            vec![0],
            BTreeMap::new(),
        )
        .unwrap();
        assert!(encode(&p, &bnn).is_err());
    }

    #[test]
    fn reward_offset_for_move_costs() {
        let mut b = ProblemBuilder::new();
        b.state_bit("s", false);
        for i in 0..4 {
            let a = b.action_bit(format!("a{i}"));
            b.action_reward(a, Decimal::from_int(-1));
        }
        let p = b.build(4).unwrap();
        let atlas = VarAtlas::new(4, 1, 4, vec![5, 1]);
        let mut f = WcnfFormula::new();
        f.reserve(atlas.num_vars());
        let offset = encode_reward(&p, &atlas, &mut f).unwrap();
        assert_eq!(offset, -16);
        assert_eq!(f.num_soft(), 16);
        assert!(f
            .soft_clauses()
            .iter()
            .all(|s| s.weight == 1 && !s.lits[0].is_positive()));
        // all actions taken: every soft falsified, reward -16
        let mut a = vec![false; atlas.num_vars() as usize];
        for t in 0..4 {
            for i in 0..4 {
                a[atlas.x(i, t).var() as usize - 1] = true;
            }
        }
        assert_eq!(f.eval(&a).unwrap().1 as i64 + offset, -16);
        assert_eq!(f.eval(&vec![false; a.len()]).unwrap().1 as i64 + offset, 0);
    }

    #[test]
    fn zero_reward_has_no_softs() {
        let mut b = ProblemBuilder::new();
        b.state_bit("s", false);
        let p = b.build(2).unwrap();
        let atlas = VarAtlas::new(2, 1, 0, vec![1, 1]);
        let mut f = WcnfFormula::new();
        assert_eq!(encode_reward(&p, &atlas, &mut f).unwrap(), 0);
        assert_eq!(f.num_soft(), 0);
    }

    #[test]
    fn deterministic_and_top() {
        let (p, bnn) = tiny(Some(true));
        let a = encode(&p, &bnn).unwrap();
        assert_eq!(a, encode(&p, &bnn).unwrap());
        assert_eq!(a.formula.top(), a.formula.sum_soft() + 1);
    }

    #[test]
    fn induced_assignment_is_a_model() {
        let (p, bnn) = tiny(Some(true));
        let art = encode(&p, &bnn).unwrap();
        let good = simulate(&bnn, &p, &[vec![true]]).unwrap();
        let bad = simulate(&bnn, &p, &[vec![false]]).unwrap();
        let mut search = Search::new(&art.formula);
        for (traj, expected) in [(good, true), (bad, false)] {
            let a = art.atlas.induced_assignment(&bnn, &traj).unwrap();
            let assumptions: Vec<Lit> = a
                .iter()
                .enumerate()
                .map(|(v, &b)| Lit::new(v as u32 + 1, b))
                .collect();
            let model = search.satisfy(&assumptions);
            assert_eq!(model.is_some(), expected);
            if let Some(model) = model {
                let (_, soft) = art.formula.eval(&model).unwrap();
                assert_eq!(soft as i64 + art.objective_offset, traj.scaled_reward);
                assert_eq!(art.atlas.decode_plan(&model).unwrap(), traj.actions);
            }
        }
    }

    #[test]
    fn unreachable_goal_is_unsat() {
        // the net can only keep s false
        let layer = BnnLayer::new(2, vec![Neuron::new(vec![1, 1], -2).unwrap()]).unwrap();
        let bnn = Bnn::new(
            Bnn::standard_inputs(1, 1),
            vec![layer],
            vec![0],
            BTreeMap::new(),
        )
        .unwrap();
        let mut b = ProblemBuilder::new();
        let s = b.state_bit("s", false);
        b.action_bit("a");
        b.goal(vec![(s, 1)], Comparison::Ge, 1);
        let p = b.build(2).unwrap();
        let art = encode(&p, &bnn).unwrap();
        assert!(Search::new(&art.formula).satisfy(&[]).is_none());
    }
}
