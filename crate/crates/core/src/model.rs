//! Planning-problem data model.
//!
//! A problem is stated entirely over Boolean *bits*: every state variable is
//! one or more state bits and every action variable one action bit. Integer
//! variables are represented by a [`Binarization`] group of consecutive
//! state bits. Constraints are linear rows in `<=` form, the reward is a
//! linear function with exact decimal coefficients.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::{decimal::Decimal, error::Error, Result};

/// Largest power of ten used to make reward coefficients integral.
pub const MAX_REWARD_SCALE_POW10: u32 = 6;

/// Fixed-point representation of an integer variable as `m1` bits,
/// little-endian, with a two's-complement style sign bit `x_{m1}`, scaled
/// by `10^m2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binarization {
    pub m1: u32,
    pub m2: i32,
}

impl Binarization {
    pub fn new(m1: u32, m2: i32) -> Result<Self> {
        if m1 == 0 || m1 > 62 {
            return Err(Error::Parameter(format!("m1 must be in 1..=62, got {m1}")));
        }
        Ok(Binarization { m1, m2 })
    }

    /// Integer value of `bits` before the `10^m2` factor.
    pub fn decode_raw(&self, bits: &[bool]) -> Result<i64> {
        if bits.len() != self.m1 as usize {
            return Err(Error::structural(format!(
                "expected {} bits, got {}",
                self.m1,
                bits.len()
            )));
        }
        let (sign, magnitude) = bits.split_last().expect("m1 >= 1");
        let mut value: i64 = magnitude
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| 1i64 << i)
            .sum();
        if *sign {
            value -= 1i64 << (self.m1 - 1);
        }
        Ok(value)
    }

    /// Decoded value including the `10^m2` factor.
    pub fn decode(&self, bits: &[bool]) -> Result<Decimal> {
        Ok(Decimal::from_scaled(self.decode_raw(bits)?, self.m2))
    }

    /// Inclusive range of raw (unscaled) values.
    pub fn raw_range(&self) -> (i64, i64) {
        let half = 1i64 << (self.m1 - 1);
        (-half, half - 1)
    }

    /// Bits representing raw value `v`, if representable.
    pub fn encode_raw(&self, v: i64) -> Option<Vec<bool>> {
        let (lo, hi) = self.raw_range();
        if v < lo || v > hi {
            return None;
        }
        let twos = v.rem_euclid(1i64 << self.m1);
        Some((0..self.m1).map(|i| twos >> i & 1 == 1).collect())
    }

    /// Reward (or cost) weight carried by bit `i` when the decoded value is
    /// multiplied by one unit: `2^i` for magnitude bits, `-2^(m1-1)` for the
    /// sign bit, times `10^m2`.
    pub fn bit_weight(&self, i: u32) -> Decimal {
        let raw = if i + 1 == self.m1 {
            -(1i64 << i)
        } else {
            1i64 << i
        };
        Decimal::from_scaled(raw, self.m2)
    }
}

/// A named run of `m1` consecutive state bits holding one binarized integer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinarizedGroup {
    pub name: String,
    pub first_bit: usize,
    #[serde(flatten)]
    pub binarization: Binarization,
}

impl BinarizedGroup {
    pub fn bits(&self) -> Range<usize> {
        self.first_bit..self.first_bit + self.binarization.m1 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Global,
    Goal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    Le,
    Ge,
    Eq,
}

/// `sum(c_s * s_i) + sum(c_a * a_i) <= bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearConstraint {
    pub kind: ConstraintKind,
    pub state: Vec<(usize, i64)>,
    pub action: Vec<(usize, i64)>,
    pub bound: i64,
}

impl LinearConstraint {
    pub fn le(
        kind: ConstraintKind,
        state: Vec<(usize, i64)>,
        action: Vec<(usize, i64)>,
        bound: i64,
    ) -> Self {
        LinearConstraint {
            kind,
            state,
            action,
            bound,
        }
    }

    /// Lowers an arbitrary comparison to `<=` rows: `>=` negates, `=`
    /// becomes two rows.
    pub fn rows(
        kind: ConstraintKind,
        state: Vec<(usize, i64)>,
        action: Vec<(usize, i64)>,
        cmp: Comparison,
        rhs: i64,
    ) -> Vec<LinearConstraint> {
        let negated = |terms: &[(usize, i64)]| terms.iter().map(|&(i, c)| (i, -c)).collect();
        let ge = LinearConstraint::le(kind, negated(&state), negated(&action), -rhs);
        match cmp {
            Comparison::Le => vec![LinearConstraint::le(kind, state, action, rhs)],
            Comparison::Ge => vec![ge],
            Comparison::Eq => vec![LinearConstraint::le(kind, state, action, rhs), ge],
        }
    }

    pub fn lhs(&self, state: &[bool], action: &[bool]) -> i64 {
        let s: i64 = self
            .state
            .iter()
            .filter(|(i, _)| state[*i])
            .map(|(_, c)| c)
            .sum();
        let a: i64 = self
            .action
            .iter()
            .filter(|(i, _)| action[*i])
            .map(|(_, c)| c)
            .sum();
        s + a
    }

    /// Whether the row holds. Goal rows ignore `action`.
    pub fn holds(&self, state: &[bool], action: &[bool]) -> bool {
        self.lhs(state, action) <= self.bound
    }
}

/// Linear reward over state bits (evaluated on the successor state) and
/// action bits, with exact decimal coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewardSpec {
    pub state: Vec<Decimal>,
    pub action: Vec<Decimal>,
    pub scale_pow10: u32,
}

impl RewardSpec {
    /// Picks the smallest `10^p`, `p <= 6`, making every coefficient integral.
    pub fn new(state: Vec<Decimal>, action: Vec<Decimal>) -> Result<Self> {
        let scale = state
            .iter()
            .chain(&action)
            .map(Decimal::scale)
            .max()
            .unwrap_or(0);
        if scale > MAX_REWARD_SCALE_POW10 {
            return Err(Error::Parameter(format!(
                "reward coefficients need 10^{scale} to become integral, the cap is 10^{MAX_REWARD_SCALE_POW10}"
            )));
        }
        Ok(RewardSpec {
            state,
            action,
            scale_pow10: scale,
        })
    }

    pub fn zero(n: usize, m: usize) -> Self {
        RewardSpec {
            state: vec![Decimal::zero(); n],
            action: vec![Decimal::zero(); m],
            scale_pow10: 0,
        }
    }

    fn scaled(&self, coeffs: &[Decimal]) -> Result<Vec<i64>> {
        coeffs
            .iter()
            .map(|c| {
                c.scaled_integer(self.scale_pow10).ok_or_else(|| {
                    Error::Parameter(format!(
                        "reward coefficient {c} is not integral at 10^{}",
                        self.scale_pow10
                    ))
                })
            })
            .collect()
    }

    pub fn scaled_state(&self) -> Result<Vec<i64>> {
        self.scaled(&self.state)
    }

    pub fn scaled_action(&self) -> Result<Vec<i64>> {
        self.scaled(&self.action)
    }
}

/// One violated invariant found by [`PlanningProblem::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

/// A fixed-horizon planning problem over Boolean state and action bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanningProblem {
    pub state_bits: Vec<String>,
    pub action_bits: Vec<String>,
    pub groups: Vec<BinarizedGroup>,
    pub constraints: Vec<LinearConstraint>,
    pub reward: RewardSpec,
    pub initial: Vec<bool>,
    pub horizon: usize,
}

impl PlanningProblem {
    pub fn num_state_bits(&self) -> usize {
        self.state_bits.len()
    }

    pub fn num_action_bits(&self) -> usize {
        self.action_bits.len()
    }

    pub fn global_rows(&self) -> impl Iterator<Item = &LinearConstraint> {
        self.constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::Global)
    }

    pub fn goal_rows(&self) -> impl Iterator<Item = &LinearConstraint> {
        self.constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::Goal)
    }

    /// Checks every structural invariant; an empty result means the problem
    /// is well formed.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let n = self.num_state_bits();
        let m = self.num_action_bits();
        let mut out = Vec::new();
        let mut push = |code, message: String| out.push(Diagnostic { code, message });

        if self.initial.len() != n {
            push(
                "initial length",
                format!("{} initial values for {n} state bits", self.initial.len()),
            );
        }
        if self.horizon == 0 {
            push("horizon", "horizon must be at least 1".into());
        }

        let mut owner: Vec<Option<usize>> = vec![None; n];
        for (g, group) in self.groups.iter().enumerate() {
            if group.binarization.m1 == 0 {
                push("binarization m1", format!("group {g} has m1 = 0"));
                continue;
            }
            let bits = group.bits();
            if bits.end > n {
                push(
                    "binarization group",
                    format!("group {g} covers bits {bits:?} but there are only {n} state bits"),
                );
                continue;
            }
            for b in bits {
                if let Some(prev) = owner[b] {
                    push(
                        "binarization overlap",
                        format!("state bit {b} belongs to groups {prev} and {g}"),
                    );
                }
                owner[b] = Some(g);
            }
        }

        for (r, row) in self.constraints.iter().enumerate() {
            for &(i, _) in &row.state {
                if i >= n {
                    push(
                        "state index",
                        format!("constraint {r} references state bit {i}"),
                    );
                }
            }
            for &(i, _) in &row.action {
                if i >= m {
                    push(
                        "action index",
                        format!("constraint {r} references action bit {i}"),
                    );
                }
            }
            if row.kind == ConstraintKind::Goal && !row.action.is_empty() {
                push(
                    "goal over actions",
                    format!("goal constraint {r} has action coefficients"),
                );
            }
        }

        if self.reward.state.len() != n || self.reward.action.len() != m {
            push(
                "reward length",
                format!(
                    "reward has {} state and {} action coefficients for {n} and {m} bits",
                    self.reward.state.len(),
                    self.reward.action.len()
                ),
            );
        }
        if self.reward.scale_pow10 > MAX_REWARD_SCALE_POW10
            || self.reward.scaled_state().is_err()
            || self.reward.scaled_action().is_err()
        {
            push(
                "reward scale",
                format!(
                    "reward coefficients are not integral at 10^{}",
                    self.reward.scale_pow10
                ),
            );
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let diags = self.validate();
        if diags.is_empty() {
            return Ok(());
        }
        let text: Vec<String> = diags.iter().map(ToString::to_string).collect();
        Err(Error::structural(format!(
            "invalid problem: {}",
            text.join("; ")
        )))
    }
}

/// Incremental construction of a [`PlanningProblem`].
#[derive(Debug, Default)]
pub struct ProblemBuilder {
    state_bits: Vec<String>,
    action_bits: Vec<String>,
    groups: Vec<BinarizedGroup>,
    constraints: Vec<LinearConstraint>,
    state_reward: Vec<Decimal>,
    action_reward: Vec<Decimal>,
    initial: Vec<bool>,
}

impl ProblemBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state_bit(&mut self, name: impl Into<String>, initial: bool) -> usize {
        self.state_bits.push(name.into());
        self.state_reward.push(Decimal::zero());
        self.initial.push(initial);
        self.state_bits.len() - 1
    }

    /// Adds `m1` bits holding `initial_raw` (unscaled) and returns their range.
    pub fn binarized(
        &mut self,
        name: &str,
        binarization: Binarization,
        initial_raw: i64,
    ) -> Result<Range<usize>> {
        let bits = binarization.encode_raw(initial_raw).ok_or_else(|| {
            Error::Parameter(format!(
                "initial value {initial_raw} of `{name}` not representable with m1 = {}",
                binarization.m1
            ))
        })?;
        let first_bit = self.state_bits.len();
        for (i, b) in bits.into_iter().enumerate() {
            self.state_bit(format!("{name}[{i}]"), b);
        }
        self.groups.push(BinarizedGroup {
            name: name.to_string(),
            first_bit,
            binarization,
        });
        Ok(first_bit..self.state_bits.len())
    }

    /// Adds `width` plain little-endian bits holding the unsigned `initial`.
    pub fn unsigned(&mut self, name: &str, width: usize, initial: u64) -> Range<usize> {
        let first = self.state_bits.len();
        for i in 0..width {
            self.state_bit(format!("{name}[{i}]"), initial >> i & 1 == 1);
        }
        first..self.state_bits.len()
    }

    pub fn action_bit(&mut self, name: impl Into<String>) -> usize {
        self.action_bits.push(name.into());
        self.action_reward.push(Decimal::zero());
        self.action_bits.len() - 1
    }

    pub fn global(
        &mut self,
        state: Vec<(usize, i64)>,
        action: Vec<(usize, i64)>,
        cmp: Comparison,
        rhs: i64,
    ) -> &mut Self {
        self.constraints.extend(LinearConstraint::rows(
            ConstraintKind::Global,
            state,
            action,
            cmp,
            rhs,
        ));
        self
    }

    pub fn goal(&mut self, state: Vec<(usize, i64)>, cmp: Comparison, rhs: i64) -> &mut Self {
        self.constraints.extend(LinearConstraint::rows(
            ConstraintKind::Goal,
            state,
            vec![],
            cmp,
            rhs,
        ));
        self
    }

    pub fn state_reward(&mut self, bit: usize, coeff: Decimal) -> &mut Self {
        self.state_reward[bit] = coeff;
        self
    }

    pub fn action_reward(&mut self, bit: usize, coeff: Decimal) -> &mut Self {
        self.action_reward[bit] = coeff;
        self
    }

    /// Reward `coeff * value(group)` pushed through the bit weights.
    pub fn group_reward(&mut self, bits: Range<usize>, coeff: &Decimal) -> Result<&mut Self> {
        let group = self
            .groups
            .iter()
            .find(|g| g.bits() == bits)
            .ok_or_else(|| Error::structural(format!("no binarized group at {bits:?}")))?
            .clone();
        for (k, bit) in bits.enumerate() {
            self.state_reward[bit] = group.binarization.bit_weight(k as u32).mul(coeff);
        }
        Ok(self)
    }

    pub fn build(self, horizon: usize) -> Result<PlanningProblem> {
        let reward = RewardSpec::new(self.state_reward, self.action_reward)?;
        let problem = PlanningProblem {
            state_bits: self.state_bits,
            action_bits: self.action_bits,
            groups: self.groups,
            constraints: self.constraints,
            reward,
            initial: self.initial,
            horizon,
        };
        problem.ensure_valid()?;
        Ok(problem)
    }
}
