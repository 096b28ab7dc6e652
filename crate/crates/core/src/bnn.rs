//! Binarized neural network transition models.
//!
//! Externally every value is Boolean. The ±1 convention used at training
//! time only appears inside the `2z - 1` substitution of [`neuron_fires`].
//! Batch normalisation folds into one integer bias per neuron, computed
//! exactly by [`compute_bias`].

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::{
    decimal::Decimal,
    error::Error,
    model::{PlanningProblem, RewardSpec},
    Result,
};

/// Learned batch-normalisation parameters of one neuron.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchNormParams {
    pub mu: Decimal,
    pub sigma2: Decimal,
    pub eps: Decimal,
    pub gamma: Decimal,
    pub beta: Decimal,
}

/// `ceil(beta * sqrt(sigma2 + eps) / gamma - mu)`, computed without floating
/// point.
///
/// The square root is never taken: the result is the smallest integer `r`
/// with `r + mu >= q * sqrt(s)` (`q = beta / gamma`, `s = sigma2 + eps`), and
/// that predicate is decided by comparing squares of rationals.
pub fn compute_bias(p: &BatchNormParams) -> Result<i64> {
    if p.gamma.is_zero() {
        return Err(Error::Parameter("batch-norm gamma must be nonzero".into()));
    }
    if p.sigma2.is_negative() {
        return Err(Error::Parameter(
            "batch-norm sigma2 must be non-negative".into(),
        ));
    }
    if p.eps.is_negative() || p.eps.is_zero() {
        return Err(Error::Parameter("batch-norm eps must be positive".into()));
    }
    let q = p.beta.to_rational() / p.gamma.to_rational();
    let s = p.sigma2.to_rational() + p.eps.to_rational();
    let mu = p.mu.to_rational();
    let q2s = &q * &q * &s;

    // r + mu >= q * sqrt(s)
    let meets = |r: &BigInt| -> bool {
        let d = BigRational::from_integer(r.clone()) + &mu;
        let nonneg = !d.is_negative();
        if q.is_negative() {
            nonneg || &d * &d <= q2s
        } else {
            nonneg && &d * &d >= q2s
        }
    };

    // |q sqrt(s)| <= |q| max(1, s)
    let one = BigRational::from_integer(1.into());
    let reach = q.abs() * if s > one { s.clone() } else { one };
    let mut lo = (-&reach - &mu).floor().to_integer() - 1;
    let mut hi = (&reach - &mu).ceil().to_integer();
    debug_assert!(!meets(&lo) && meets(&hi));
    while &hi - &lo > BigInt::from(1) {
        let mid: BigInt = (&lo + &hi) / 2;
        if meets(&mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.to_i64()
        .ok_or_else(|| Error::Parameter(format!("bias {hi} does not fit in 64 bits")))
}

/// `sum_i w_i (2 z_i - 1) + bias >= 0`.
pub fn neuron_fires(weights: &[i8], inputs: &[bool], bias: i64) -> Result<bool> {
    if weights.len() != inputs.len() {
        return Err(Error::structural(format!(
            "{} weights for {} inputs",
            weights.len(),
            inputs.len()
        )));
    }
    Ok(preactivation(weights, inputs) + bias >= 0)
}

fn preactivation(weights: &[i8], inputs: &[bool]) -> i64 {
    weights
        .iter()
        .zip(inputs)
        .map(|(&w, &z)| if z { w as i64 } else { -(w as i64) })
        .sum()
}

/// Minimum number of satisfied input literals (`z_i` for `w_i = +1`,
/// `!z_i` for `w_i = -1`) at which a neuron of fan-in `width` with integer
/// bias `bias` fires: `ceil((width - bias) / 2)`.
pub fn activation_threshold(width: usize, bias: i64) -> i64 {
    (width as i64 - bias + 1).div_euclid(2)
}

/// One neuron: a ±1 weight per input and its folded integer bias.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Neuron {
    pub weights: Vec<i8>,
    pub bias: i64,
    pub batch_norm: Option<BatchNormParams>,
}

impl Neuron {
    pub fn new(weights: Vec<i8>, bias: i64) -> Result<Self> {
        if let Some(pos) = weights.iter().position(|w| *w != 1 && *w != -1) {
            return Err(Error::Parameter(format!(
                "weight {pos} is {}, expected +1 or -1",
                weights[pos]
            )));
        }
        Ok(Neuron {
            weights,
            bias,
            batch_norm: None,
        })
    }

    pub fn from_batch_norm(weights: Vec<i8>, params: BatchNormParams) -> Result<Self> {
        let bias = compute_bias(&params)?;
        let mut n = Neuron::new(weights, bias)?;
        n.batch_norm = Some(params);
        Ok(n)
    }

    /// Both a stored bias and batch-norm parameters; they must agree.
    pub fn with_checked_bias(weights: Vec<i8>, bias: i64, params: BatchNormParams) -> Result<Self> {
        let derived = compute_bias(&params)?;
        if derived != bias {
            return Err(Error::Parameter(format!(
                "stored bias {bias} disagrees with batch-norm bias {derived}"
            )));
        }
        Neuron::from_batch_norm(weights, params)
    }

    pub fn threshold(&self) -> i64 {
        activation_threshold(self.weights.len(), self.bias)
    }

    fn fires(&self, inputs: &[bool]) -> bool {
        preactivation(&self.weights, inputs) + self.bias >= 0
    }
}

/// A fully connected binarized layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BnnLayer {
    pub input_width: usize,
    pub neurons: Vec<Neuron>,
}

impl BnnLayer {
    pub fn new(input_width: usize, neurons: Vec<Neuron>) -> Result<Self> {
        if neurons.is_empty() {
            return Err(Error::structural("layer without neurons"));
        }
        if let Some(j) = neurons.iter().position(|n| n.weights.len() != input_width) {
            return Err(Error::structural(format!(
                "neuron {j} has {} weights, layer input width is {input_width}",
                neurons[j].weights.len()
            )));
        }
        Ok(BnnLayer {
            input_width,
            neurons,
        })
    }

    pub fn width(&self) -> usize {
        self.neurons.len()
    }

    pub fn apply(&self, inputs: &[bool]) -> Vec<bool> {
        self.neurons.iter().map(|n| n.fires(inputs)).collect()
    }
}

/// What an input-layer neuron reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputSource {
    State(usize),
    Action(usize),
}

/// How a state bit that no output neuron produces evolves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UncoveredRule {
    /// Keeps its value from one step to the next.
    Frozen,
    /// Must not occur; encoding or simulating raises an error.
    Forbidden,
}

/// Where the successor value of a state bit comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateSource {
    Output(usize),
    Rule(UncoveredRule),
}

/// A binarized network used as the learned transition function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bnn {
    input_map: Vec<InputSource>,
    layers: Vec<BnnLayer>,
    output_map: Vec<usize>,
    uncovered: BTreeMap<usize, UncoveredRule>,
    num_state: usize,
    num_action: usize,
}

impl Bnn {
    pub fn new(
        input_map: Vec<InputSource>,
        layers: Vec<BnnLayer>,
        output_map: Vec<usize>,
        uncovered: BTreeMap<usize, UncoveredRule>,
    ) -> Result<Self> {
        let num_state = input_map
            .iter()
            .take_while(|s| matches!(s, InputSource::State(_)))
            .count();
        let num_action = input_map.len() - num_state;
        for (u, src) in input_map.iter().enumerate() {
            let expected = if u < num_state {
                InputSource::State(u)
            } else {
                InputSource::Action(u - num_state)
            };
            if *src != expected {
                return Err(Error::structural(format!(
                    "input neuron {u} reads {src:?}, expected {expected:?} (states first, then actions, in order)"
                )));
            }
        }
        if layers.is_empty() {
            return Err(Error::structural("network without layers"));
        }
        let mut width = input_map.len();
        for (l, layer) in layers.iter().enumerate() {
            if layer.input_width != width {
                return Err(Error::structural(format!(
                    "layer {l} expects {} inputs, previous width is {width}",
                    layer.input_width
                )));
            }
            width = layer.width();
        }
        if output_map.len() != width {
            return Err(Error::structural(format!(
                "output map has {} entries for {width} output neurons",
                output_map.len()
            )));
        }
        let mut produced = vec![false; num_state];
        for (j, &bit) in output_map.iter().enumerate() {
            if bit >= num_state {
                return Err(Error::structural(format!(
                    "output neuron {j} maps to state bit {bit}, only {num_state} exist"
                )));
            }
            if std::mem::replace(&mut produced[bit], true) {
                return Err(Error::structural(format!(
                    "state bit {bit} produced by more than one output neuron"
                )));
            }
        }
        for &bit in uncovered.keys() {
            if bit >= num_state || produced[bit] {
                return Err(Error::structural(format!(
                    "uncovered rule given for state bit {bit}, which is not an uncovered state bit"
                )));
            }
        }
        Ok(Bnn {
            input_map,
            layers,
            output_map,
            uncovered,
            num_state,
            num_action,
        })
    }

    /// Canonical input map for `n` state bits followed by `m` action bits.
    pub fn standard_inputs(n: usize, m: usize) -> Vec<InputSource> {
        (0..n)
            .map(InputSource::State)
            .chain((0..m).map(InputSource::Action))
            .collect()
    }

    pub fn num_state_bits(&self) -> usize {
        self.num_state
    }

    pub fn num_action_bits(&self) -> usize {
        self.num_action
    }

    pub fn input_map(&self) -> &[InputSource] {
        &self.input_map
    }

    pub fn layers(&self) -> &[BnnLayer] {
        &self.layers
    }

    pub fn output_map(&self) -> &[usize] {
        &self.output_map
    }

    pub fn uncovered(&self) -> &BTreeMap<usize, UncoveredRule> {
        &self.uncovered
    }

    /// Layer widths `W_1 : W_2 : ... : W_L`, input layer included.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_map.len())
            .chain(self.layers.iter().map(BnnLayer::width))
            .collect()
    }

    pub fn state_source(&self, bit: usize) -> StateSource {
        match self.output_map.iter().position(|&b| b == bit) {
            Some(j) => StateSource::Output(j),
            None => StateSource::Rule(
                self.uncovered
                    .get(&bit)
                    .copied()
                    .unwrap_or(UncoveredRule::Forbidden),
            ),
        }
    }

    /// Errors unless every state bit is produced by an output neuron or
    /// declared frozen.
    pub fn check_coverage(&self) -> Result<()> {
        for bit in 0..self.num_state {
            if self.state_source(bit) == StateSource::Rule(UncoveredRule::Forbidden) {
                return Err(Error::structural(format!(
                    "state bit {bit} is not produced by the network and has no evolution rule"
                )));
            }
        }
        Ok(())
    }

    pub fn check_problem(&self, p: &PlanningProblem) -> Result<()> {
        if p.num_state_bits() != self.num_state || p.num_action_bits() != self.num_action {
            return Err(Error::structural(format!(
                "network reads {} state and {} action bits, problem has {} and {}",
                self.num_state,
                self.num_action,
                p.num_state_bits(),
                p.num_action_bits()
            )));
        }
        self.check_coverage()
    }

    /// Neuron values of every layer, input layer first.
    pub fn activations(&self, state: &[bool], action: &[bool]) -> Result<Vec<Vec<bool>>> {
        if state.len() != self.num_state || action.len() != self.num_action {
            return Err(Error::structural(format!(
                "network expects {} state and {} action bits, got {} and {}",
                self.num_state,
                self.num_action,
                state.len(),
                action.len()
            )));
        }
        let input: Vec<bool> = self
            .input_map
            .iter()
            .map(|src| match *src {
                InputSource::State(i) => state[i],
                InputSource::Action(i) => action[i],
            })
            .collect();
        let mut out = Vec::with_capacity(self.layers.len() + 1);
        out.push(input);
        for layer in &self.layers {
            let next = layer.apply(out.last().expect("nonempty"));
            out.push(next);
        }
        Ok(out)
    }

    /// Successor state bits.
    pub fn forward(&self, state: &[bool], action: &[bool]) -> Result<Vec<bool>> {
        self.check_coverage()?;
        let acts = self.activations(state, action)?;
        let last = acts.last().expect("nonempty");
        let mut next = state.to_vec();
        for (j, &bit) in self.output_map.iter().enumerate() {
            next[bit] = last[j];
        }
        Ok(next)
    }
}

/// States visited by a plan together with feasibility and reward bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trajectory {
    /// `H + 1` states, the first one the initial state.
    pub states: Vec<Vec<bool>>,
    /// `H` action vectors.
    pub actions: Vec<Vec<bool>>,
    /// Per step: every global row holds on `(s^t, a^t)`.
    pub global_ok: Vec<bool>,
    /// `(step, constraint index)` of every violated global row.
    pub global_failures: Vec<(usize, usize)>,
    pub goal_ok: bool,
    /// Constraint indices of violated goal rows.
    pub goal_failures: Vec<usize>,
    /// Total reward times `10^scale_pow10`.
    pub scaled_reward: i64,
    pub scale_pow10: u32,
}

impl Trajectory {
    pub fn feasible(&self) -> bool {
        self.goal_ok && self.global_ok.iter().all(|ok| *ok)
    }

    pub fn reward(&self) -> Decimal {
        Decimal::from_scaled(self.scaled_reward, -(self.scale_pow10 as i32))
    }
}

struct RewardTable {
    state: Vec<i64>,
    action: Vec<i64>,
}

impl RewardTable {
    fn new(r: &RewardSpec) -> Result<Self> {
        Ok(RewardTable {
            state: r.scaled_state()?,
            action: r.scaled_action()?,
        })
    }

    fn step(&self, next: &[bool], action: &[bool]) -> i64 {
        let s: i64 = self
            .state
            .iter()
            .zip(next)
            .filter(|(_, &b)| b)
            .map(|(c, _)| c)
            .sum();
        let a: i64 = self
            .action
            .iter()
            .zip(action)
            .filter(|(_, &b)| b)
            .map(|(c, _)| c)
            .sum();
        s + a
    }
}

/// Rolls the network forward from the initial state under `actions`.
/// Infeasibility is reported in the flags, never raised.
pub fn simulate(bnn: &Bnn, p: &PlanningProblem, actions: &[Vec<bool>]) -> Result<Trajectory> {
    bnn.check_problem(p)?;
    if actions.len() != p.horizon {
        return Err(Error::structural(format!(
            "plan has {} steps, horizon is {}",
            actions.len(),
            p.horizon
        )));
    }
    let rewards = RewardTable::new(&p.reward)?;
    let mut states = vec![p.initial.clone()];
    let mut global_ok = Vec::with_capacity(p.horizon);
    let mut global_failures = Vec::new();
    let mut scaled_reward = 0i64;
    for (t, a) in actions.iter().enumerate() {
        if a.len() != p.num_action_bits() {
            return Err(Error::structural(format!(
                "step {t} has {} action bits, expected {}",
                a.len(),
                p.num_action_bits()
            )));
        }
        let s = states.last().expect("nonempty");
        let mut ok = true;
        for (r, row) in p.constraints.iter().enumerate() {
            if row.kind == crate::model::ConstraintKind::Global && !row.holds(s, a) {
                ok = false;
                global_failures.push((t, r));
            }
        }
        global_ok.push(ok);
        let next = bnn.forward(s, a)?;
        scaled_reward += rewards.step(&next, a);
        states.push(next);
    }
    let last = states.last().expect("nonempty");
    let goal_failures: Vec<usize> = p
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, row)| row.kind == crate::model::ConstraintKind::Goal && !row.holds(last, &[]))
        .map(|(r, _)| r)
        .collect();
    Ok(Trajectory {
        states,
        actions: actions.to_vec(),
        global_ok,
        global_failures,
        goal_ok: goal_failures.is_empty(),
        goal_failures,
        scaled_reward,
        scale_pow10: p.reward.scale_pow10,
    })
}

/// Largest number of action sequences [`brute_force_optimal`] will enumerate.
pub const MAX_ORACLE_SEQUENCES: u64 = 1 << 22;

/// The `2^m` action vectors in lexicographic order (`false < true`, bit 0
/// most significant).
pub fn action_vectors(m: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..1 << m).map(move |code| (0..m).map(|i| code >> (m - 1 - i) & 1 == 1).collect())
}

/// Exhaustively searches for an optimal plan. Returns `None` when no action
/// sequence is feasible. Among optimal plans, the lexicographically smallest
/// flattened action sequence wins.
pub fn brute_force_optimal(bnn: &Bnn, p: &PlanningProblem) -> Result<Option<Trajectory>> {
    bnn.check_problem(p)?;
    let m = p.num_action_bits();
    if m > 22 {
        return Err(Error::Capacity(format!(
            "{m} action bits give more than 2^22 choices per step"
        )));
    }
    // Rows without state terms filter each step's choices up front.
    let action_rows: Vec<_> = p.global_rows().filter(|r| r.state.is_empty()).collect();
    let candidates: Vec<Vec<bool>> = action_vectors(m)
        .filter(|a| action_rows.iter().all(|r| r.holds(&[], a)))
        .collect();
    let mut total: u64 = 1;
    for _ in 0..p.horizon {
        total = total.saturating_mul(candidates.len() as u64);
    }
    if total > MAX_ORACLE_SEQUENCES {
        return Err(Error::Capacity(format!(
            "{} choices per step over horizon {} exceed 2^22 sequences; shrink the instance",
            candidates.len(),
            p.horizon
        )));
    }
    let rewards = RewardTable::new(&p.reward)?;
    let global: Vec<_> = p.global_rows().collect();
    let goal: Vec<_> = p.goal_rows().collect();

    struct Search<'a> {
        bnn: &'a Bnn,
        candidates: &'a [Vec<bool>],
        global: &'a [&'a crate::model::LinearConstraint],
        goal: &'a [&'a crate::model::LinearConstraint],
        rewards: &'a RewardTable,
        horizon: usize,
        plan: Vec<usize>,
        best: Option<(i64, Vec<usize>)>,
    }

    impl Search<'_> {
        fn visit(&mut self, state: &[bool], reward: i64) -> Result<()> {
            if self.plan.len() == self.horizon {
                if self.goal.iter().all(|r| r.holds(state, &[])) {
                    let better = self.best.as_ref().is_none_or(|(b, _)| reward > *b);
                    if better {
                        self.best = Some((reward, self.plan.clone()));
                    }
                }
                return Ok(());
            }
            for (k, a) in self.candidates.iter().enumerate() {
                if !self.global.iter().all(|r| r.holds(state, a)) {
                    continue;
                }
                let next = self.bnn.forward(state, a)?;
                let gained = self.rewards.step(&next, a);
                self.plan.push(k);
                self.visit(&next, reward + gained)?;
                self.plan.pop();
            }
            Ok(())
        }
    }

    let mut search = Search {
        bnn,
        candidates: &candidates,
        global: &global,
        goal: &goal,
        rewards: &rewards,
        horizon: p.horizon,
        plan: Vec::with_capacity(p.horizon),
        best: None,
    };
    search.visit(&p.initial, 0)?;
    match search.best {
        None => Ok(None),
        Some((reward, plan)) => {
            let actions: Vec<Vec<bool>> = plan.iter().map(|&k| candidates[k].clone()).collect();
            let traj = simulate(bnn, p, &actions)?;
            debug_assert!(traj.feasible() && traj.scaled_reward == reward);
            Ok(Some(traj))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Comparison, ProblemBuilder};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bn(mu: &str, sigma2: &str, eps: &str, gamma: &str, beta: &str) -> BatchNormParams {
        BatchNormParams {
            mu: mu.parse().unwrap(),
            sigma2: sigma2.parse().unwrap(),
            eps: eps.parse().unwrap(),
            gamma: gamma.parse().unwrap(),
            beta: beta.parse().unwrap(),
        }
    }

    #[test]
    fn bias_examples() {
        assert_eq!(compute_bias(&bn("0", "0", "1", "1", "0")).unwrap(), 0);
        assert_eq!(compute_bias(&bn("0.5", "3", "1", "2", "1")).unwrap(), 1);
        assert_eq!(compute_bias(&bn("2", "0", "1", "-1", "1")).unwrap(), -3);
        assert!(compute_bias(&bn("0", "1", "1", "0", "1")).is_err());
        assert!(compute_bias(&bn("0", "1", "0", "1", "1")).is_err());
    }

    #[test]
    fn bias_on_irrational_roots() {
        // 1 * sqrt(2) / 1 - 0 = 1.414.. -> 2 ; -sqrt(2) -> -1
        assert_eq!(compute_bias(&bn("0", "1", "1", "1", "1")).unwrap(), 2);
        assert_eq!(compute_bias(&bn("0", "1", "1", "-1", "1")).unwrap(), -1);
        // 3 sqrt(0.5) / 1 - 0.1 = 2.0213.. -> 3
        assert_eq!(compute_bias(&bn("0.1", "0.4", "0.1", "1", "3")).unwrap(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn bias_brackets_the_real_value(
            mu in -50_000i64..50_000,
            sigma2 in 0i64..100_000,
            eps in 1i64..1_000,
            gamma in prop_oneof![-5_000i64..-1, 1i64..5_000],
            beta in -50_000i64..50_000,
        ) {
            let p = BatchNormParams {
                mu: Decimal::from_scaled(mu, -3),
                sigma2: Decimal::from_scaled(sigma2, -3),
                eps: Decimal::from_scaled(eps, -5),
                gamma: Decimal::from_scaled(gamma, -3),
                beta: Decimal::from_scaled(beta, -3),
            };
            let r = compute_bias(&p).unwrap() as f64;
            let x = (beta as f64 / 1e3) * ((sigma2 as f64 / 1e3) + (eps as f64 / 1e5)).sqrt()
                / (gamma as f64 / 1e3)
                - mu as f64 / 1e3;
            prop_assert!(r - 1.0 < x + 1e-9 && x <= r + 1e-9, "r = {r}, x = {x}");
        }
    }

    #[test]
    fn neuron_examples() {
        assert!(!neuron_fires(&[1, 1], &[false, false], 0).unwrap());
        assert!(neuron_fires(&[1, -1, 1], &[true, false, true], -2).unwrap());
        assert!(!neuron_fires(&[-1], &[true], 0).unwrap());
        assert!(neuron_fires(&[1, 1], &[true], 0).is_err());
    }

    #[test]
    fn threshold_identity_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=12usize {
            for _ in 0..8 {
                let w: Vec<i8> = (0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect();
                let b: i64 = rng.gen_range(-(n as i64) - 2..=n as i64 + 2);
                let k = activation_threshold(n, b);
                for code in 0u32..1 << n {
                    let z: Vec<bool> = (0..n).map(|i| code >> i & 1 == 1).collect();
                    let satisfied = w
                        .iter()
                        .zip(&z)
                        .filter(|(&wi, &zi)| (wi == 1) == zi)
                        .count() as i64;
                    assert_eq!(neuron_fires(&w, &z, b).unwrap(), satisfied >= k);
                }
            }
        }
    }

    #[test]
    fn checked_bias_must_agree() {
        let p = bn("0.5", "3", "1", "2", "1");
        assert!(Neuron::with_checked_bias(vec![1], 1, p.clone()).is_ok());
        assert!(Neuron::with_checked_bias(vec![1], 0, p).is_err());
        assert!(Neuron::new(vec![1, 0], 0).is_err());
    }

    fn and_net() -> Bnn {
        // 2 state bits -> one neuron computing s0 & s1 into bit 0, bit 1 frozen.
        let layer = BnnLayer::new(2, vec![Neuron::new(vec![1, 1], -1).unwrap()]).unwrap();
        Bnn::new(
            Bnn::standard_inputs(2, 0),
            vec![layer],
            vec![0],
            [(1, UncoveredRule::Frozen)].into(),
        )
        .unwrap()
    }

    #[test]
    fn pass_through_and_and() {
        let layer = BnnLayer::new(1, vec![Neuron::new(vec![1], 0).unwrap()]).unwrap();
        let id = Bnn::new(
            Bnn::standard_inputs(1, 0),
            vec![layer],
            vec![0],
            BTreeMap::new(),
        )
        .unwrap();
        assert_eq!(id.forward(&[true], &[]).unwrap(), vec![true]);
        assert_eq!(id.forward(&[false], &[]).unwrap(), vec![false]);

        let net = and_net();
        assert_eq!(net.forward(&[true, true], &[]).unwrap(), vec![true, true]);
        assert_eq!(
            net.forward(&[true, false], &[]).unwrap(),
            vec![false, false]
        );
        assert_eq!(net.widths(), vec![2, 1]);
    }

    #[test]
    fn structural_checks() {
        let layer = || BnnLayer::new(2, vec![Neuron::new(vec![1, 1], 0).unwrap()]).unwrap();
        let reversed = vec![InputSource::State(1), InputSource::State(0)];
        assert!(Bnn::new(reversed, vec![layer()], vec![0], BTreeMap::new()).is_err());
        let bad_out = Bnn::new(
            Bnn::standard_inputs(2, 0),
            vec![layer()],
            vec![5],
            BTreeMap::new(),
        );
        assert!(bad_out.is_err());
        let uncovered = Bnn::new(
            Bnn::standard_inputs(2, 0),
            vec![layer()],
            vec![0],
            BTreeMap::new(),
        )
        .unwrap();
        assert!(uncovered.forward(&[true, true], &[]).is_err());
        let bad_chain = Bnn::new(
            Bnn::standard_inputs(2, 0),
            vec![layer(), layer()],
            vec![0],
            BTreeMap::new(),
        );
        assert!(bad_chain.is_err());
    }

    /// One state bit, one action bit; the net computes `s | a`.
    fn latch_problem(horizon: usize, goal: Option<bool>) -> (Bnn, PlanningProblem) {
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
        (bnn, b.build(horizon).unwrap())
    }

    #[test]
    fn simulate_reports_flags() {
        let (bnn, p) = latch_problem(2, Some(true));
        let t = simulate(&bnn, &p, &[vec![true], vec![true]]).unwrap();
        assert_eq!(t.states, vec![vec![false], vec![true], vec![true]]);
        assert!(t.goal_ok);
        assert_eq!(t.scaled_reward, -2);
        let t = simulate(&bnn, &p, &[vec![false], vec![false]]).unwrap();
        assert!(!t.goal_ok);
        // row 0 is `s <= 1`, row 1 is `-s <= -1`
        assert_eq!(t.goal_failures, vec![1]);
        assert!(simulate(&bnn, &p, &[vec![true]]).is_err());
    }

    #[test]
    fn simulate_global_flag() {
        let layer = BnnLayer::new(3, vec![Neuron::new(vec![1, 1, 1], 0).unwrap()]).unwrap();
        let bnn = Bnn::new(
            Bnn::standard_inputs(1, 2),
            vec![layer],
            vec![0],
            BTreeMap::new(),
        )
        .unwrap();
        let mut b = ProblemBuilder::new();
        b.state_bit("s", false);
        let a0 = b.action_bit("a0");
        let a1 = b.action_bit("a1");
        b.global(vec![], vec![(a0, 1), (a1, 1)], Comparison::Le, 1);
        let p = b.build(1).unwrap();
        let t = simulate(&bnn, &p, &[vec![true, true]]).unwrap();
        assert_eq!(t.global_ok, vec![false]);
        assert_eq!(t.global_failures, vec![(0, 0)]);
        assert!(!t.feasible());
    }

    #[test]
    fn oracle_prefers_cheapest_then_lexicographic() {
        let (bnn, p) = latch_problem(3, Some(true));
        let best = brute_force_optimal(&bnn, &p).unwrap().unwrap();
        // only the last step needs the action
        assert_eq!(best.actions, vec![vec![false], vec![false], vec![true]]);
        assert_eq!(best.scaled_reward, -1);

        let (bnn, mut p) = latch_problem(2, None);
        p.reward = RewardSpec::zero(1, 1);
        let best = brute_force_optimal(&bnn, &p).unwrap().unwrap();
        assert_eq!(best.actions, vec![vec![false], vec![false]]);
    }

    #[test]
    fn oracle_reports_infeasible_and_capacity() {
        let bnn = and_net();
        let mut b = ProblemBuilder::new();
        let s0 = b.state_bit("s0", false);
        b.state_bit("s1", false);
        b.goal(vec![(s0, 1)], Comparison::Eq, 1);
        let p = b.build(2).unwrap();
        assert!(brute_force_optimal(&bnn, &p).unwrap().is_none());

        let (bnn, mut p) = latch_problem(1, None);
        p.horizon = 23;
        assert!(matches!(
            brute_force_optimal(&bnn, &p),
            Err(Error::Capacity(_))
        ));
    }
}
