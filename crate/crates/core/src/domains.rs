//! Benchmark families: Navigation, Inventory Control, System Administrator
//! and Cellda, plus a small random toy generator for tests.
//!
//! The learned networks behind the original benchmarks are not available,
//! so weights are either seeded at random (structurally faithful, arbitrary
//! dynamics) or, for Navigation, handcrafted to realize the reference
//! dynamics exactly.
//!
//! Bit layouts (little-endian for every multi-bit value):
//!
//! * Navigation: `N*N` one-hot cells (row-major), actions up, down, right,
//!   left. The network produces every cell bit.
//! * Inventory: stock as a signed 4-bit binarization, demand phase as
//!   `ceil(log2 N)` unsigned bits, demand-met flag; one order action. The
//!   network produces stock and the flag; the phase bits are frozen.
//! * System Administrator: per computer a 2-bit age (the sign bit of the
//!   3-bit binarization is dropped because ages are non-negative), then one
//!   running bit per computer; one reboot action per computer. The network
//!   produces every bit.
//! * Cellda: agent column and row, the enemy coordinate along its policy
//!   axis (the other coordinate is fixed), key flag, alive flag; actions
//!   up, down, right, left. The network produces the agent position; enemy,
//!   key and alive are frozen.
//!
//! These layouts reproduce the input and output widths of the published
//! architectures.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bnn::{Bnn, BnnLayer, Neuron, UncoveredRule};
use crate::model::{Binarization, Comparison, PlanningProblem, ProblemBuilder};
use crate::{Decimal, Error, Result};

/// Version tag written into generated manifests.
pub const GENERATOR: &str = concat!("bnnplan-", env!("CARGO_PKG_VERSION"));

/// Units ordered by the inventory action.
pub const ORDER_QUANTITY: i64 = 1;
/// Units demanded in a peak phase (phases `N/2 .. N`).
pub const PEAK_DEMAND: i64 = 1;
/// Computers that may be rebooted in one step.
pub const MAX_REBOOTS: i64 = 1;
/// Age at which a computer that was not rebooted stops running.
pub const FAILURE_AGE: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Navigation,
    Inventory,
    Sysadmin,
    Cellda,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Navigation,
        Family::Inventory,
        Family::Sysadmin,
        Family::Cellda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Navigation => "navigation",
            Family::Inventory => "inventory",
            Family::Sysadmin => "sysadmin",
            Family::Cellda => "cellda",
        }
    }

    /// `(m1, m2)` of the family's integer variables.
    pub fn binarization(self) -> Option<Binarization> {
        match self {
            Family::Navigation => None,
            Family::Inventory => Some(Binarization { m1: 4, m2: 0 }),
            Family::Sysadmin => Some(Binarization { m1: 3, m2: 0 }),
            Family::Cellda => Some(Binarization { m1: 2, m2: 0 }),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                Error::Configuration(format!(
                    "unknown family `{s}` (expected navigation, inventory, sysadmin or cellda)"
                ))
            })
    }
}

/// Enemy policy in Cellda: the axis along which the enemy chases the agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Policy {
    #[serde(rename = "x-axis")]
    XAxis,
    #[serde(rename = "y-axis")]
    YAxis,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::XAxis => "x-axis",
            Policy::YAxis => "y-axis",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x-axis" => Ok(Policy::XAxis),
            "y-axis" => Ok(Policy::YAxis),
            _ => Err(Error::Configuration(format!(
                "unknown policy `{s}` (expected x-axis or y-axis)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    #[default]
    Random,
    Handcrafted,
}

impl WeightMode {
    pub fn name(self) -> &'static str {
        match self {
            WeightMode::Random => "random",
            WeightMode::Handcrafted => "handcrafted",
        }
    }
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(WeightMode::Random),
            "handcrafted" => Ok(WeightMode::Handcrafted),
            _ => Err(Error::Configuration(format!(
                "unknown weight mode `{s}` (expected random or handcrafted)"
            ))),
        }
    }
}

/// Everything needed to generate one benchmark instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainSpec {
    pub family: Family,
    pub n: usize,
    pub horizon: usize,
    /// Cellda only; defaults to x-axis there.
    pub policy: Option<Policy>,
    pub seed: u64,
    pub weight_mode: WeightMode,
    /// Hidden layer widths replacing the published architecture.
    pub hidden: Option<Vec<usize>>,
}

impl DomainSpec {
    pub fn new(family: Family, n: usize, horizon: usize) -> Self {
        DomainSpec {
            family,
            n,
            horizon,
            policy: (family == Family::Cellda).then_some(Policy::XAxis),
            seed: 0,
            weight_mode: WeightMode::Random,
            hidden: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_policy(mut self, policy: Policy) -> Self {
        self.policy = Some(policy);
        self
    }

    pub fn with_weight_mode(mut self, mode: WeightMode) -> Self {
        self.weight_mode = mode;
        self
    }

    pub fn with_hidden(mut self, hidden: Vec<usize>) -> Self {
        self.hidden = Some(hidden);
        self
    }

    /// `<family>_N<k>_H<h>[_<policy>]`
    pub fn file_stem(&self) -> String {
        let mut s = format!("{}_N{}_H{}", self.family, self.n, self.horizon);
        if let Some(p) = self.policy {
            s.push('_');
            s.push_str(p.name());
        }
        s
    }

    /// Departures from the submitted parameter grid. They are allowed.
    pub fn warnings(&self) -> Vec<String> {
        let (sizes, horizons): (&[usize], std::ops::RangeInclusive<usize>) = match self.family {
            Family::Navigation => (&[3, 4, 5], 4..=10),
            Family::Inventory => (&[2, 4], 5..=8),
            Family::Sysadmin => (&[4, 5], 2..=4),
            Family::Cellda => (&[4], 8..=12),
        };
        let mut out = Vec::new();
        if !sizes.contains(&self.n) {
            out.push(format!(
                "{} N = {} is outside the benchmark grid {sizes:?}",
                self.family, self.n
            ));
        }
        if !horizons.contains(&self.horizon) {
            out.push(format!(
                "{} H = {} is outside the benchmark grid {horizons:?}",
                self.family, self.horizon
            ));
        }
        out
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Configuration("N must be positive".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Configuration("horizon must be positive".into()));
        }
        match (self.family, self.policy) {
            (Family::Cellda, None) => {
                return Err(Error::Configuration("cellda needs an enemy policy".into()))
            }
            (Family::Cellda, Some(_)) => {}
            (f, Some(_)) => return Err(Error::Configuration(format!("{f} takes no enemy policy"))),
            _ => {}
        }
        if self.family == Family::Cellda && self.n < 2 {
            return Err(Error::Configuration("cellda needs N >= 2".into()));
        }
        if self.weight_mode == WeightMode::Handcrafted && self.family != Family::Navigation {
            return Err(Error::Configuration(
                "handcrafted weights exist for navigation only".into(),
            ));
        }
        Ok(())
    }
}

/// Published layer widths, input layer first.
pub fn table_architecture(family: Family, n: usize) -> Option<Vec<usize>> {
    let w: &[usize] = match (family, n) {
        (Family::Navigation, 3) => &[13, 36, 36, 9],
        (Family::Navigation, 4) => &[20, 96, 96, 16],
        (Family::Navigation, 5) => &[29, 128, 128, 25],
        (Family::Inventory, 2) => &[7, 96, 96, 5],
        (Family::Inventory, 4) => &[8, 128, 128, 5],
        (Family::Sysadmin, 4) => &[16, 128, 128, 12],
        (Family::Sysadmin, 5) => &[20, 128, 128, 128, 15],
        (Family::Cellda, 4) => &[12, 256, 256, 4],
        _ => return None,
    };
    Some(w.to_vec())
}

/// The submitted grid of one family.
pub fn parameter_grid(family: Family) -> Vec<DomainSpec> {
    let mut out = Vec::new();
    match family {
        Family::Navigation => {
            for n in 3..=5 {
                for h in 4..=10 {
                    out.push(DomainSpec::new(family, n, h));
                }
            }
        }
        Family::Inventory => {
            for n in [2, 4] {
                for h in 5..=8 {
                    out.push(DomainSpec::new(family, n, h));
                }
            }
        }
        Family::Sysadmin => {
            for n in [4, 5] {
                for h in 2..=4 {
                    out.push(DomainSpec::new(family, n, h));
                }
            }
        }
        Family::Cellda => {
            for h in 8..=12 {
                for p in [Policy::XAxis, Policy::YAxis] {
                    out.push(DomainSpec::new(family, 4, h).with_policy(p));
                }
            }
        }
    }
    out
}

/// Bits needed to count `0..count`, at least one.
fn bits_for(count: usize) -> usize {
    let mut b = 1;
    while (1usize << b) < count {
        b += 1;
    }
    b
}

fn read_unsigned(bits: &[bool]) -> u64 {
    bits.iter().rev().fold(0, |acc, &b| acc << 1 | u64::from(b))
}

fn write_unsigned(bits: &mut [bool], v: u64) {
    for (i, b) in bits.iter_mut().enumerate() {
        *b = v >> i & 1 == 1;
    }
}

fn bit_terms(range: std::ops::Range<usize>) -> Vec<(usize, i64)> {
    range.enumerate().map(|(k, bit)| (bit, 1i64 << k)).collect()
}

fn pin_bits(b: &mut ProblemBuilder, range: std::ops::Range<usize>, value: u64) {
    for (k, bit) in range.enumerate() {
        b.goal(vec![(bit, 1)], Comparison::Eq, (value >> k & 1) as i64);
    }
}

fn unit_cost_actions(b: &mut ProblemBuilder, names: &[&str]) -> Vec<usize> {
    names
        .iter()
        .map(|name| {
            let a = b.action_bit(*name);
            b.action_reward(a, Decimal::from_int(-1));
            a
        })
        .collect()
}

const MOVES: [&str; 4] = ["up", "down", "right", "left"];

/// The symbolic problem plus which state bits the network produces.
struct Layout {
    problem: PlanningProblem,
    outputs: Vec<usize>,
}

fn navigation_layout(n: usize, horizon: usize) -> Result<Layout> {
    let mut b = ProblemBuilder::new();
    let cells: Vec<usize> = (0..n * n)
        .map(|c| b.state_bit(format!("at[{},{}]", c / n, c % n), c == 0))
        .collect();
    let actions = unit_cost_actions(&mut b, &MOVES);
    b.global(
        vec![],
        actions.iter().map(|&a| (a, 1)).collect(),
        Comparison::Le,
        1,
    );
    let goal = n * n - 1;
    b.goal(vec![(cells[goal], 1)], Comparison::Eq, 1);
    let others: Vec<(usize, i64)> = cells
        .iter()
        .filter(|&&c| c != goal)
        .map(|&c| (c, 1))
        .collect();
    if !others.is_empty() {
        b.goal(others, Comparison::Le, 0);
    }
    Ok(Layout {
        problem: b.build(horizon)?,
        outputs: cells,
    })
}

fn inventory_layout(n: usize, horizon: usize) -> Result<Layout> {
    let mut b = ProblemBuilder::new();
    let bin = Family::Inventory.binarization().expect("binarized");
    let stock = b.binarized("stock", bin, 2)?;
    b.unsigned("phase", bits_for(n), 0);
    let met = b.state_bit("demand_met", true);
    b.action_bit("order");
    b.global(vec![(met, 1)], vec![], Comparison::Eq, 1);
    b.goal(vec![(met, 1)], Comparison::Eq, 1);
    b.group_reward(stock.clone(), &Decimal::from_int(-1))?;
    Ok(Layout {
        problem: b.build(horizon)?,
        outputs: stock.chain(std::iter::once(met)).collect(),
    })
}

fn sysadmin_layout(n: usize, horizon: usize) -> Result<Layout> {
    let mut b = ProblemBuilder::new();
    for i in 0..n {
        b.unsigned(&format!("age{i}"), 2, 0);
    }
    let running: Vec<usize> = (0..n)
        .map(|i| b.state_bit(format!("running{i}"), true))
        .collect();
    let names: Vec<String> = (0..n).map(|i| format!("reboot{i}")).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let reboots = unit_cost_actions(&mut b, &names);
    b.global(
        vec![],
        reboots.iter().map(|&a| (a, 1)).collect(),
        Comparison::Le,
        MAX_REBOOTS,
    );
    for &r in &running {
        b.global(vec![(r, 1)], vec![], Comparison::Eq, 1);
    }
    for &r in &running {
        b.goal(vec![(r, 1)], Comparison::Eq, 1);
    }
    Ok(Layout {
        problem: b.build(horizon)?,
        outputs: (0..3 * n).collect(),
    })
}

/// Cellda geometry for an `n`-by-`n` cell.
struct CelldaMap {
    n: u64,
    start: (u64, u64),
    door: (u64, u64),
    key: (u64, u64),
    /// Enemy start along its axis; the other coordinate is `enemy_fixed`.
    enemy_start: u64,
    enemy_fixed: u64,
}

impl CelldaMap {
    fn new(n: usize) -> Self {
        let n = n as u64;
        CelldaMap {
            n,
            start: (0, 0),
            door: (n - 1, n - 1),
            key: (n - 1, 0),
            enemy_start: n - 1,
            enemy_fixed: n / 2,
        }
    }
}

fn cellda_layout(n: usize, horizon: usize) -> Result<Layout> {
    let map = CelldaMap::new(n);
    let w = bits_for(n);
    let mut b = ProblemBuilder::new();
    let ax = b.unsigned("agent_x", w, map.start.0);
    let ay = b.unsigned("agent_y", w, map.start.1);
    b.unsigned("enemy", w, map.enemy_start);
    // the published outputs cover the agent only, so the key bit never
    // changes and cannot be part of the goal
    b.state_bit("key", false);
    let alive = b.state_bit("alive", true);
    let actions = unit_cost_actions(&mut b, &MOVES);
    b.global(
        vec![],
        actions.iter().map(|&a| (a, 1)).collect(),
        Comparison::Le,
        1,
    );
    b.global(bit_terms(ax.clone()), vec![], Comparison::Le, n as i64 - 1);
    b.global(bit_terms(ay.clone()), vec![], Comparison::Le, n as i64 - 1);
    b.global(vec![(alive, 1)], vec![], Comparison::Eq, 1);
    pin_bits(&mut b, ax.clone(), map.door.0);
    pin_bits(&mut b, ay.clone(), map.door.1);
    b.goal(vec![(alive, 1)], Comparison::Eq, 1);
    Ok(Layout {
        problem: b.build(horizon)?,
        outputs: ax.chain(ay).collect(),
    })
}

fn layout(spec: &DomainSpec) -> Result<Layout> {
    match spec.family {
        Family::Navigation => navigation_layout(spec.n, spec.horizon),
        Family::Inventory => inventory_layout(spec.n, spec.horizon),
        Family::Sysadmin => sysadmin_layout(spec.n, spec.horizon),
        Family::Cellda => cellda_layout(spec.n, spec.horizon),
    }
}

/// Reference dynamics of one family at one size, used by oracles and by
/// the handcrafted network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    pub family: Family,
    pub n: usize,
    pub policy: Option<Policy>,
}

fn out_of_domain(msg: String) -> Error {
    Error::Structural(format!("outside the reference domain: {msg}"))
}

fn single_move(action: &[bool]) -> Result<Option<usize>> {
    match action.iter().filter(|a| **a).count() {
        0 => Ok(None),
        1 => Ok(action.iter().position(|a| *a)),
        k => Err(out_of_domain(format!("{k} simultaneous moves"))),
    }
}

/// `(column, row)` after a clamped move in an `n`-by-`n` grid.
fn step_cell(n: u64, (x, y): (u64, u64), mv: Option<usize>) -> (u64, u64) {
    match mv {
        Some(0) => (x, y.saturating_sub(1)),
        Some(1) => (x, (y + 1).min(n - 1)),
        Some(2) => ((x + 1).min(n - 1), y),
        Some(3) => (x.saturating_sub(1), y),
        _ => (x, y),
    }
}

impl GroundTruth {
    pub fn new(family: Family, n: usize, policy: Option<Policy>) -> Self {
        GroundTruth { family, n, policy }
    }

    pub fn num_state_bits(&self) -> usize {
        match self.family {
            Family::Navigation => self.n * self.n,
            Family::Inventory => 4 + bits_for(self.n) + 1,
            Family::Sysadmin => 3 * self.n,
            Family::Cellda => 3 * bits_for(self.n) + 2,
        }
    }

    pub fn num_action_bits(&self) -> usize {
        match self.family {
            Family::Navigation | Family::Cellda => 4,
            Family::Inventory => 1,
            Family::Sysadmin => self.n,
        }
    }

    /// Successor state under the reference dynamics.
    pub fn step(&self, state: &[bool], action: &[bool]) -> Result<Vec<bool>> {
        if state.len() != self.num_state_bits() || action.len() != self.num_action_bits() {
            return Err(Error::structural(format!(
                "{} N={} expects {} state and {} action bits, got {} and {}",
                self.family,
                self.n,
                self.num_state_bits(),
                self.num_action_bits(),
                state.len(),
                action.len()
            )));
        }
        match self.family {
            Family::Navigation => self.navigation(state, action),
            Family::Inventory => self.inventory(state, action),
            Family::Sysadmin => Ok(self.sysadmin(state, action)),
            Family::Cellda => self.cellda(state, action),
        }
    }

    fn navigation(&self, state: &[bool], action: &[bool]) -> Result<Vec<bool>> {
        let n = self.n as u64;
        if state.iter().filter(|s| **s).count() != 1 {
            return Err(out_of_domain("agent position is not one-hot".into()));
        }
        let c = state.iter().position(|s| *s).expect("one-hot") as u64;
        let (x, y) = step_cell(n, (c % n, c / n), single_move(action)?);
        let mut next = vec![false; state.len()];
        next[(y * n + x) as usize] = true;
        Ok(next)
    }

    fn inventory(&self, state: &[bool], action: &[bool]) -> Result<Vec<bool>> {
        let bin = Family::Inventory.binarization().expect("binarized");
        let p = bits_for(self.n);
        let stock = bin.decode_raw(&state[..4])?;
        let phase = read_unsigned(&state[4..4 + p]);
        let (_, max) = bin.raw_range();
        if stock < 0 || phase >= self.n as u64 {
            return Err(out_of_domain(format!("stock {stock}, phase {phase}")));
        }
        let arrived = (stock + if action[0] { ORDER_QUANTITY } else { 0 }).min(max);
        let demand = if 2 * phase >= self.n as u64 {
            PEAK_DEMAND
        } else {
            0
        };
        let met = arrived >= demand;
        let left = (arrived - demand).max(0);
        let mut next = bin.encode_raw(left).expect("in range");
        next.resize(4 + p, false);
        write_unsigned(&mut next[4..4 + p], (phase + 1) % self.n as u64);
        next.push(met);
        Ok(next)
    }

    fn sysadmin(&self, state: &[bool], action: &[bool]) -> Vec<bool> {
        let n = self.n;
        let mut next = state.to_vec();
        for i in 0..n {
            let (age, running) = if action[i] {
                (0, true)
            } else {
                let age = (read_unsigned(&state[2 * i..2 * i + 2]) + 1).min(FAILURE_AGE);
                (age, state[2 * n + i] && age < FAILURE_AGE)
            };
            write_unsigned(&mut next[2 * i..2 * i + 2], age);
            next[2 * n + i] = running;
        }
        next
    }

    fn cellda(&self, state: &[bool], action: &[bool]) -> Result<Vec<bool>> {
        let map = CelldaMap::new(self.n);
        let w = bits_for(self.n);
        let ax = read_unsigned(&state[..w]);
        let ay = read_unsigned(&state[w..2 * w]);
        let e = read_unsigned(&state[2 * w..3 * w]);
        if ax >= map.n || ay >= map.n || e >= map.n {
            return Err(out_of_domain(format!("agent ({ax},{ay}), enemy {e}")));
        }
        let (ax, ay) = step_cell(map.n, (ax, ay), single_move(action)?);
        let toward = match self.policy.unwrap_or(Policy::XAxis) {
            Policy::XAxis => ax,
            Policy::YAxis => ay,
        };
        let e = match e.cmp(&toward) {
            std::cmp::Ordering::Less => e + 1,
            std::cmp::Ordering::Greater => e - 1,
            std::cmp::Ordering::Equal => e,
        };
        let enemy = match self.policy.unwrap_or(Policy::XAxis) {
            Policy::XAxis => (e, map.enemy_fixed),
            Policy::YAxis => (map.enemy_fixed, e),
        };
        let mut next = state.to_vec();
        write_unsigned(&mut next[..w], ax);
        write_unsigned(&mut next[w..2 * w], ay);
        write_unsigned(&mut next[2 * w..3 * w], e);
        next[3 * w] = state[3 * w] || (ax, ay) == map.key;
        next[3 * w + 1] = state[3 * w + 1] && (ax, ay) != enemy;
        Ok(next)
    }
}

/// `groundTruthStep` as a free function.
pub fn ground_truth_step(
    family: Family,
    n: usize,
    policy: Option<Policy>,
    state: &[bool],
    action: &[bool],
) -> Result<Vec<bool>> {
    GroundTruth::new(family, n, policy).step(state, action)
}

/// A generated benchmark instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub spec: DomainSpec,
    pub problem: PlanningProblem,
    pub bnn: Bnn,
    pub ground_truth: GroundTruth,
}

fn architecture(spec: &DomainSpec, inputs: usize, outputs: usize) -> Result<Vec<usize>> {
    if let Some(hidden) = &spec.hidden {
        if hidden.contains(&0) {
            return Err(Error::Configuration("hidden layer of width 0".into()));
        }
        let mut w = vec![inputs];
        w.extend(hidden);
        w.push(outputs);
        return Ok(w);
    }
    let w = table_architecture(spec.family, spec.n).ok_or_else(|| {
        Error::Configuration(format!(
            "no published architecture for {} N = {}; pass hidden widths explicitly",
            spec.family, spec.n
        ))
    })?;
    if w[0] != inputs || *w.last().expect("nonempty") != outputs {
        return Err(Error::Configuration(format!(
            "published architecture {w:?} does not fit {inputs} inputs and {outputs} outputs"
        )));
    }
    Ok(w)
}

/// Seeded `±1` weights with small integer biases.
pub fn random_layers(widths: &[usize], rng: &mut impl Rng) -> Result<Vec<BnnLayer>> {
    widths
        .windows(2)
        .map(|pair| {
            let (fan_in, width) = (pair[0], pair[1]);
            let spread = (fan_in / 4) as i64;
            let neurons = (0..width)
                .map(|_| {
                    let w = (0..fan_in)
                        .map(|_| if rng.gen() { 1 } else { -1 })
                        .collect();
                    Neuron::new(w, rng.gen_range(-spread..=spread))
                })
                .collect::<Result<Vec<_>>>()?;
            BnnLayer::new(fan_in, neurons)
        })
        .collect()
}

/// Neuron firing iff at least `k` of its literals hold, where the literal
/// of input `i` is the input itself when `positive[i]` and its negation
/// otherwise.
fn threshold_neuron(positive: &[bool], k: i64) -> Result<Neuron> {
    let weights = positive.iter().map(|&p| if p { 1 } else { -1 }).collect();
    Neuron::new(weights, positive.len() as i64 - 2 * k)
}

fn never_fires(fan_in: usize) -> Result<Neuron> {
    threshold_neuron(&vec![true; fan_in], fan_in as i64 + 1)
}

/// Three weight layers realizing the reference navigation dynamics on
/// one-hot positions with at most one move: exact-pattern detectors for
/// every moving `(cell, move)` pair and every staying cell, an OR per
/// destination cell, and a copy layer.
fn handcrafted_navigation(n: usize, widths: &[usize]) -> Result<Vec<BnnLayer>> {
    let cells = n * n;
    let inputs = cells + 4;
    let detectors_needed = 4 * n * (n - 1) + cells;
    if widths.len() != 4 || widths[1] < detectors_needed || widths[2] < cells {
        return Err(Error::Configuration(format!(
            "handcrafted navigation N = {n} needs widths {inputs}:>={detectors_needed}:>={cells}:{cells}, got {widths:?}"
        )));
    }
    let nn = n as u64;
    let dest = |c: usize, mv: Option<usize>| {
        let (x, y) = step_cell(nn, ((c % n) as u64, (c / n) as u64), mv);
        (y * nn + x) as usize
    };

    // detector -> destination cell
    let mut layer2 = Vec::new();
    let mut targets = Vec::new();
    for c in 0..cells {
        for mv in 0..4 {
            if dest(c, Some(mv)) != c {
                let mut pos = vec![false; inputs];
                pos[c] = true;
                pos[cells + mv] = true;
                layer2.push(threshold_neuron(&pos, inputs as i64)?);
                targets.push(dest(c, Some(mv)));
            }
        }
    }
    for c in 0..cells {
        let mut pos = vec![false; inputs];
        pos[c] = true;
        let mut blocked = 0;
        for mv in 0..4 {
            if dest(c, Some(mv)) == c {
                pos[cells + mv] = true;
                blocked += 1;
            }
        }
        let free = 4 - blocked;
        layer2.push(threshold_neuron(&pos, (cells + free) as i64)?);
        targets.push(c);
    }
    while layer2.len() < widths[1] {
        layer2.push(never_fires(inputs)?);
    }

    let w2 = widths[1];
    let mut layer3 = Vec::new();
    for c in 0..cells {
        let mut pos = vec![false; w2];
        for (d, &t) in targets.iter().enumerate() {
            pos[d] = t == c;
        }
        let members = pos.iter().filter(|p| **p).count();
        layer3.push(threshold_neuron(&pos, (w2 - members + 1) as i64)?);
    }
    while layer3.len() < widths[2] {
        layer3.push(never_fires(w2)?);
    }

    let w3 = widths[2];
    let layer4 = (0..cells)
        .map(|c| {
            let mut pos = vec![false; w3];
            pos[c] = true;
            threshold_neuron(&pos, w3 as i64)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(vec![
        BnnLayer::new(inputs, layer2)?,
        BnnLayer::new(w2, layer3)?,
        BnnLayer::new(w3, layer4)?,
    ])
}

/// Builds the problem, network and reference dynamics of `spec`.
pub fn generate(spec: &DomainSpec) -> Result<Instance> {
    spec.check()?;
    let Layout { problem, outputs } = layout(spec)?;
    let n_state = problem.num_state_bits();
    let inputs = n_state + problem.num_action_bits();
    let widths = architecture(spec, inputs, outputs.len())?;
    let layers = match spec.weight_mode {
        WeightMode::Random => random_layers(&widths, &mut ChaCha8Rng::seed_from_u64(spec.seed))?,
        WeightMode::Handcrafted => handcrafted_navigation(spec.n, &widths)?,
    };
    let uncovered = (0..n_state)
        .filter(|b| !outputs.contains(b))
        .map(|b| (b, UncoveredRule::Frozen))
        .collect();
    let bnn = Bnn::new(
        Bnn::standard_inputs(n_state, problem.num_action_bits()),
        layers,
        outputs,
        uncovered,
    )?;
    Ok(Instance {
        spec: spec.clone(),
        problem,
        bnn,
        ground_truth: GroundTruth::new(spec.family, spec.n, spec.policy),
    })
}

/// Shape of a random toy instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToyShape {
    pub state_bits: usize,
    pub action_bits: usize,
    pub hidden: Vec<usize>,
    pub horizon: usize,
}

/// A small random instance with mixed constraint and reward shapes: a
/// mutex over actions, a weighted row over a state bit and an action, a
/// goal pin and signed fractional rewards. Some state bits may be frozen.
pub fn random_toy(shape: &ToyShape, seed: u64) -> Result<(PlanningProblem, Bnn)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m) = (shape.state_bits, shape.action_bits);
    if n == 0 {
        return Err(Error::Configuration(
            "toy instances need a state bit".into(),
        ));
    }
    let mut b = ProblemBuilder::new();
    for i in 0..n {
        b.state_bit(format!("s{i}"), rng.gen());
    }
    for i in 0..m {
        b.action_bit(format!("a{i}"));
    }
    let rewards = ["0", "1", "-1", "0.5", "-2", "0"];
    for i in 0..n {
        b.state_reward(i, rewards[rng.gen_range(0..rewards.len())].parse()?);
    }
    for i in 0..m {
        b.action_reward(i, rewards[rng.gen_range(0..rewards.len())].parse()?);
    }
    if m >= 2 && rng.gen_bool(0.7) {
        b.global(vec![], (0..m).map(|i| (i, 1)).collect(), Comparison::Le, 1);
    }
    if m >= 1 && rng.gen_bool(0.5) {
        let s = rng.gen_range(0..n);
        b.global(
            vec![(s, 2)],
            vec![(rng.gen_range(0..m), 1)],
            Comparison::Le,
            2,
        );
    }
    if rng.gen_bool(0.7) {
        b.goal(
            vec![(rng.gen_range(0..n), 1)],
            Comparison::Eq,
            rng.gen_range(0..=1),
        );
    }
    let problem = b.build(shape.horizon)?;

    let produced = if n > 1 && rng.gen_bool(0.3) { n - 1 } else { n };
    let mut widths = vec![n + m];
    widths.extend(&shape.hidden);
    widths.push(produced);
    let layers = random_layers(&widths, &mut rng)?;
    let uncovered = (produced..n).map(|b| (b, UncoveredRule::Frozen)).collect();
    let bnn = Bnn::new(
        Bnn::standard_inputs(n, m),
        layers,
        (0..produced).collect(),
        uncovered,
    )?;
    Ok((problem, bnn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bnn::{action_vectors, brute_force_optimal};

    #[test]
    fn architectures_match_table() {
        for family in Family::ALL {
            for spec in parameter_grid(family) {
                let inst = generate(&spec).unwrap();
                assert_eq!(
                    Some(inst.bnn.widths()),
                    table_architecture(spec.family, spec.n),
                    "{}",
                    spec.file_stem()
                );
                assert!(inst.problem.validate().is_empty());
            }
        }
    }

    #[test]
    fn grid_sizes() {
        let sizes: Vec<usize> = Family::ALL
            .iter()
            .map(|&f| parameter_grid(f).len())
            .collect();
        assert_eq!(sizes, vec![21, 8, 6, 10]);
    }

    #[test]
    fn off_table_needs_override() {
        let spec = DomainSpec::new(Family::Navigation, 2, 3);
        assert!(matches!(generate(&spec), Err(Error::Configuration(_))));
        assert_eq!(spec.warnings().len(), 2);
        let inst = generate(&spec.with_hidden(vec![8])).unwrap();
        assert_eq!(inst.bnn.widths(), vec![8, 8, 4]);
    }

    #[test]
    fn random_weights_are_seeded() {
        let spec = DomainSpec::new(Family::Sysadmin, 4, 2).with_seed(9);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        assert_ne!(
            generate(&spec).unwrap().bnn,
            generate(&spec.clone().with_seed(10)).unwrap().bnn
        );
    }

    #[test]
    fn navigation_walls_clamp() {
        let gt = GroundTruth::new(Family::Navigation, 3, None);
        let mut s = vec![false; 9];
        s[1] = true;
        assert_eq!(gt.step(&s, &[true, false, false, false]).unwrap(), s);
        let mut below = vec![false; 9];
        below[4] = true;
        assert_eq!(gt.step(&s, &[false, true, false, false]).unwrap(), below);
        assert!(gt.step(&s, &[true, true, false, false]).is_err());
    }

    #[test]
    fn handcrafted_matches_ground_truth() {
        for n in 3..=5 {
            let spec =
                DomainSpec::new(Family::Navigation, n, 4).with_weight_mode(WeightMode::Handcrafted);
            let inst = generate(&spec).unwrap();
            let mut actions = vec![vec![false; 4]];
            actions.extend((0..4).map(|k| (0..4).map(|i| i == k).collect()));
            for c in 0..n * n {
                let s: Vec<bool> = (0..n * n).map(|i| i == c).collect();
                for a in &actions {
                    assert_eq!(
                        inst.bnn.forward(&s, a).unwrap(),
                        inst.ground_truth.step(&s, a).unwrap(),
                        "N={n} cell {c} action {a:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn handcrafted_optimum_is_manhattan() {
        let spec =
            DomainSpec::new(Family::Navigation, 3, 4).with_weight_mode(WeightMode::Handcrafted);
        let inst = generate(&spec).unwrap();
        let best = brute_force_optimal(&inst.bnn, &inst.problem)
            .unwrap()
            .unwrap();
        assert_eq!(best.scaled_reward, -4);
        let short = generate(
            &DomainSpec::new(Family::Navigation, 3, 3).with_weight_mode(WeightMode::Handcrafted),
        )
        .unwrap();
        assert!(brute_force_optimal(&short.bnn, &short.problem)
            .unwrap()
            .is_none());
    }

    #[test]
    fn inventory_dynamics() {
        let gt = GroundTruth::new(Family::Inventory, 2, None);
        // stock 0, phase 1 (peak), met: no order -> unmet
        let s = vec![false, false, false, false, true, true];
        assert_eq!(gt.step(&s, &[false]).unwrap(), vec![false; 6]);
        // ordering covers the demand, phase wraps to 0
        assert_eq!(
            gt.step(&s, &[true]).unwrap(),
            vec![false, false, false, false, false, true]
        );
        // off-peak: stock 2 stays 2 without an order
        let s = vec![false, true, false, false, false, true];
        assert_eq!(
            gt.step(&s, &[false]).unwrap(),
            vec![false, true, false, false, true, true]
        );
    }

    #[test]
    fn sysadmin_dynamics() {
        let gt = GroundTruth::new(Family::Sysadmin, 4, None);
        // computer 0 at age 2 fails next step unless rebooted
        let mut s = vec![false; 12];
        s[1] = true;
        s[8..12].fill(true);
        let next = gt.step(&s, &[false; 4]).unwrap();
        assert_eq!(&next[0..2], &[true, true]);
        assert!(!next[8]);
        assert_eq!(&next[2..4], &[true, false]);
        let next = gt.step(&s, &[true, false, false, false]).unwrap();
        assert_eq!(&next[0..2], &[false, false]);
        assert!(next[8]);
    }

    #[test]
    fn cellda_enemy_chases_along_axis() {
        let gt = GroundTruth::new(Family::Cellda, 4, Some(Policy::XAxis));
        let inst = generate(&DomainSpec::new(Family::Cellda, 4, 8)).unwrap();
        let s0 = inst.problem.initial.clone();
        // agent (0,0), enemy x = 3 at row 2; moving right pulls the enemy to x = 2
        let next = gt.step(&s0, &[false, false, true, false]).unwrap();
        assert_eq!(read_unsigned(&next[0..2]), 1);
        assert_eq!(read_unsigned(&next[4..6]), 2);
        assert!(next[7]);
        // agent walks into the enemy's row and column: dies
        let mut s = s0.clone();
        write_unsigned(&mut s[0..2], 2);
        write_unsigned(&mut s[2..4], 1);
        write_unsigned(&mut s[4..6], 2);
        let next = gt.step(&s, &[false, true, false, false]).unwrap();
        assert!(!next[7]);
        // the key cell sets the key flag
        let mut s = s0;
        write_unsigned(&mut s[0..2], 2);
        let next = gt.step(&s, &[false, false, true, false]).unwrap();
        assert!(next[6]);
        let ygt = GroundTruth::new(Family::Cellda, 4, Some(Policy::YAxis));
        assert!(ygt.step(&next, &[false; 4]).is_ok());
    }

    #[test]
    fn toy_instances_are_valid() {
        for seed in 0..50 {
            let shape = ToyShape {
                state_bits: 2,
                action_bits: 2,
                hidden: vec![3],
                horizon: 2,
            };
            let (p, bnn) = random_toy(&shape, seed).unwrap();
            assert!(p.validate().is_empty());
            bnn.check_problem(&p).unwrap();
            assert_eq!(action_vectors(2).count(), 4);
        }
    }
}
