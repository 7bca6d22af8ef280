//! Exhaustive cost-sequence tallies over every deterministic system on a
//! tiny discrete state-action space.
//!
//! A system is a complete table `f: O × U → O`. An exploration order lists
//! every scenario `(s0, ū) ∈ O × U^k` once. For each table the first `m`
//! scenarios of an order are executed and their costs recorded; the tally
//! counts how many tables produce each cost sequence. Two orders that are
//! permutations of each other can then be compared exactly.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{ActionVector, Dim, OssSpec, SpaceBox, StateVector, SystemModel};
use crate::error::{Error, Result};
use crate::seed::{self, RunRng};

/// Default bound on the number of enumerated tables.
pub const DEFAULT_CAP: u128 = 10_000_000;

/// A complete deterministic transition table.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemTable {
    pub n_states: usize,
    pub n_actions: usize,
    /// `table[s * n_actions + u] = f(s, u)`.
    pub table: Vec<usize>,
}

impl SystemTable {
    pub fn new(n_states: usize, n_actions: usize, table: Vec<usize>) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidArgument("state and action sets must be non-empty".into()));
        }
        if table.len() != n_states * n_actions {
            return Err(Error::InvalidArgument(format!(
                "table has {} entries, expected {}",
                table.len(),
                n_states * n_actions
            )));
        }
        if table.iter().any(|&s| s >= n_states) {
            return Err(Error::InvalidArgument("table maps outside the state set".into()));
        }
        Ok(SystemTable {
            n_states,
            n_actions,
            table,
        })
    }

    pub fn next(&self, s: usize, u: usize) -> usize {
        self.table[s * self.n_actions + u]
    }
}

/// `n_states^(n_states · n_actions)`, or `None` on overflow.
pub fn system_count(n_states: usize, n_actions: usize) -> Option<u128> {
    let exp = u32::try_from(n_states.checked_mul(n_actions)?).ok()?;
    (n_states as u128).checked_pow(exp)
}

fn checked_count(n_states: usize, n_actions: usize, cap: u128) -> Result<u128> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::InvalidArgument("state and action sets must be non-empty".into()));
    }
    match system_count(n_states, n_actions) {
        Some(c) if c <= cap => Ok(c),
        Some(c) => Err(Error::EnumerationCap { count: c, cap }),
        None => Err(Error::EnumerationCap { count: u128::MAX, cap }),
    }
}

/// The `index`-th table in lexicographic order (first entry most significant).
fn table_at(n_states: usize, n_actions: usize, mut index: u128) -> SystemTable {
    let len = n_states * n_actions;
    let mut table = vec![0; len];
    for slot in table.iter_mut().rev() {
        *slot = (index % n_states as u128) as usize;
        index /= n_states as u128;
    }
    SystemTable {
        n_states,
        n_actions,
        table,
    }
}

/// Every table `O × U → O` exactly once, in lexicographic order.
pub fn enumerate_systems(n_states: usize, n_actions: usize, cap: u128) -> Result<impl Iterator<Item = SystemTable>> {
    let count = checked_count(n_states, n_actions, cap)?;
    Ok((0..count).map(move |i| table_at(n_states, n_actions, i)))
}

/// Number of tables with `f(s0, u) = s_next`.
pub fn count_consistent(n_states: usize, n_actions: usize, s0: usize, u: usize, s_next: usize, cap: u128) -> Result<u128> {
    if s0 >= n_states || s_next >= n_states || u >= n_actions {
        return Err(Error::InvalidArgument("transition indices out of range".into()));
    }
    let count = checked_count(n_states, n_actions, cap)?;
    Ok((0..count)
        .into_par_iter()
        .filter(|&i| table_at(n_states, n_actions, i).next(s0, u) == s_next)
        .count() as u128)
}

// ---------------------------------------------------------------------------
// Orders, costs, tallies
// ---------------------------------------------------------------------------

/// One scenario: an initial state and a length-`k` action sequence.
pub type Scenario = (usize, Vec<usize>);

/// A permutation of `O × U^k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationOrder {
    pub n_states: usize,
    pub n_actions: usize,
    pub k: usize,
    pub entries: Vec<Scenario>,
}

fn all_scenarios(n_states: usize, n_actions: usize, k: usize) -> Vec<Scenario> {
    let per = n_actions.pow(k as u32);
    let mut out = Vec::with_capacity(n_states * per);
    for s in 0..n_states {
        for code in 0..per {
            let mut seq = vec![0; k];
            let mut c = code;
            for slot in seq.iter_mut().rev() {
                *slot = c % n_actions;
                c /= n_actions;
            }
            out.push((s, seq));
        }
    }
    out
}

impl ExplorationOrder {
    pub fn new(n_states: usize, n_actions: usize, k: usize, entries: Vec<Scenario>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        let mut sorted = entries.clone();
        sorted.sort();
        if sorted != all_scenarios(n_states, n_actions, k) {
            return Err(Error::InvalidArgument(
                "order must list every scenario of the product space exactly once".into(),
            ));
        }
        Ok(ExplorationOrder {
            n_states,
            n_actions,
            k,
            entries,
        })
    }

    /// Brute force in lexicographic order.
    pub fn lexicographic(n_states: usize, n_actions: usize, k: usize) -> Result<Self> {
        Self::new(n_states, n_actions, k, all_scenarios(n_states, n_actions, k))
    }

    pub fn reversed(&self) -> Self {
        let mut entries = self.entries.clone();
        entries.reverse();
        ExplorationOrder { entries, ..self.clone() }
    }

    /// A uniformly random permutation drawn from `seed`.
    pub fn shuffled(n_states: usize, n_actions: usize, k: usize, seed: u64) -> Result<Self> {
        let mut entries = all_scenarios(n_states, n_actions, k);
        let mut rng: RunRng = seed::rng(seed);
        entries.shuffle(&mut rng);
        Self::new(n_states, n_actions, k, entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn same_space(&self, other: &ExplorationOrder) -> bool {
        (self.n_states, self.n_actions, self.k) == (other.n_states, other.n_actions, other.k)
    }
}

/// Cost of a run, evaluated on the recorded states after the initial one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NflCost {
    /// Whether any recorded state is in the failure set.
    Failure { failure_states: Vec<usize> },
    /// The recorded state sequence itself. States in `absorbing` are
    /// absorbing.
    ScenarioIdentity { absorbing: Vec<usize> },
}

impl NflCost {
    fn absorbing(&self, n_states: usize) -> Vec<bool> {
        let list = match self {
            NflCost::Failure { failure_states } => failure_states,
            NflCost::ScenarioIdentity { absorbing } => absorbing,
        };
        let mut mask = vec![false; n_states];
        for &s in list {
            if s < n_states {
                mask[s] = true;
            }
        }
        mask
    }
}

/// Record a run of `scenario` against `f`: the states after each step, with
/// absorption once an absorbing state is reached.
pub fn simulate(f: &SystemTable, scenario: &Scenario, absorbing: &[bool]) -> Vec<usize> {
    let (s0, actions) = scenario;
    let mut s = *s0;
    let mut out = Vec::with_capacity(actions.len());
    let mut absorbed = false;
    for &u in actions {
        if !absorbed {
            s = f.next(s, u);
            absorbed = absorbing[s];
        }
        out.push(s);
    }
    out
}

/// A cost sequence `g_m`, flattened. Failure costs contribute one `0`/`1`
/// per run, identity costs the `k` recorded states per run.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CostSequence {
    pub values: Vec<usize>,
    pub per_run: usize,
    pub boolean: bool,
}

impl fmt::Display for CostSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        if self.per_run > 0 {
            for (i, chunk) in self.values.chunks(self.per_run).enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                if self.boolean {
                    write!(f, "{}", chunk[0] == 1)?;
                } else {
                    let parts: Vec<String> = chunk.iter().map(|s| s.to_string()).collect();
                    write!(f, "({})", parts.join(" "))?;
                }
            }
        }
        f.write_str("]")
    }
}

/// Exact count of tables per cost sequence.
pub type Tally = BTreeMap<CostSequence, u64>;

fn sequence_for(f: &SystemTable, order: &ExplorationOrder, m: usize, cost: &NflCost, absorbing: &[bool]) -> CostSequence {
    let mut values = Vec::new();
    let (per_run, boolean) = match cost {
        NflCost::Failure { .. } => (1, true),
        NflCost::ScenarioIdentity { .. } => (order.k, false),
    };
    for sc in &order.entries[..m] {
        let states = simulate(f, sc, absorbing);
        match cost {
            NflCost::Failure { .. } => values.push(usize::from(states.iter().any(|&s| absorbing[s]))),
            NflCost::ScenarioIdentity { .. } => values.extend(states),
        }
    }
    CostSequence {
        values,
        per_run,
        boolean,
    }
}

/// Tally of cost sequences over every table for the first `m` scenarios.
pub fn cost_distribution(order: &ExplorationOrder, m: usize, cost: &NflCost, cap: u128) -> Result<Tally> {
    if m > order.len() {
        return Err(Error::InvalidArgument(format!(
            "m = {m} exceeds the {} scenarios of the order",
            order.len()
        )));
    }
    let (n, a) = (order.n_states, order.n_actions);
    let count = checked_count(n, a, cap)?;
    let absorbing = cost.absorbing(n);
    let chunk = (count / 64).max(1);
    let chunks = count.div_ceil(chunk);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut local = Tally::new();
            for i in c * chunk..((c + 1) * chunk).min(count) {
                let f = table_at(n, a, i);
                *local.entry(sequence_for(&f, order, m, cost, &absorbing)).or_insert(0) += 1;
            }
            local
        })
        .reduce(Tally::new, |mut acc, part| {
            for (k, v) in part {
                *acc.entry(k).or_insert(0) += v;
            }
            acc
        });
    Ok(tally)
}

/// First cost sequence whose counts differ between two tallies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyDifference {
    pub sequence: String,
    pub count_first: u64,
    pub count_second: u64,
}

pub fn first_difference(a: &Tally, b: &Tally) -> Option<TallyDifference> {
    let keys: std::collections::BTreeSet<&CostSequence> = a.keys().chain(b.keys()).collect();
    keys.into_iter().find_map(|k| {
        let (x, y) = (a.get(k).copied().unwrap_or(0), b.get(k).copied().unwrap_or(0));
        (x != y).then(|| TallyDifference {
            sequence: k.to_string(),
            count_first: x,
            count_second: y,
        })
    })
}

#[derive(Clone, Debug)]
pub struct NflReport {
    pub equal: bool,
    pub m: usize,
    pub total_systems: u128,
    pub tally_first: Tally,
    pub tally_second: Tally,
    pub difference: Option<TallyDifference>,
}

/// Compare the tallies of two orders over the same product space.
pub fn verify_nfl(order1: &ExplorationOrder, order2: &ExplorationOrder, m: usize, cost: &NflCost, cap: u128) -> Result<NflReport> {
    if !order1.same_space(order2) {
        return Err(Error::InvalidArgument("orders cover different product spaces".into()));
    }
    let t1 = cost_distribution(order1, m, cost, cap)?;
    let t2 = cost_distribution(order2, m, cost, cap)?;
    let difference = first_difference(&t1, &t2);
    Ok(NflReport {
        equal: difference.is_none(),
        m,
        total_systems: checked_count(order1.n_states, order1.n_actions, cap)?,
        tally_first: t1,
        tally_second: t2,
        difference,
    })
}

/// Tally as `(sequence, count)` rows for serialization.
pub fn tally_rows(t: &Tally) -> Vec<(String, u64)> {
    t.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

// ---------------------------------------------------------------------------
// A table as an engine system
// ---------------------------------------------------------------------------

/// A [`SystemTable`] driven through the general engine, states and actions
/// encoded as single integer coordinates.
#[derive(Clone, Debug)]
pub struct TableSystem {
    pub table: SystemTable,
    oss: OssSpec,
}

impl TableSystem {
    pub fn new(table: SystemTable, failure_states: &[usize]) -> Result<Self> {
        let mask: Vec<bool> = (0..table.n_states).map(|s| failure_states.contains(&s)).collect();
        let space = SpaceBox::new(vec![Dim::integer("s", 0, table.n_states as i64 - 1)])?;
        let oss = OssSpec::new(space, move |s: &StateVector| mask.get(s.0[0] as usize).copied().unwrap_or(false))?;
        Ok(TableSystem { table, oss })
    }
}

impl SystemModel for TableSystem {
    type State = usize;

    fn label(&self) -> String {
        format!("table{:?}", self.table.table)
    }

    fn oss(&self) -> &OssSpec {
        &self.oss
    }

    fn init(&self, s0: &StateVector, _rng: &mut RunRng) -> usize {
        s0.0[0] as usize
    }

    fn step(&self, state: &usize, action: &ActionVector, _rng: &mut RunRng) -> usize {
        self.table.next(*state, action.0[0] as usize)
    }

    fn observe(&self, state: &usize) -> StateVector {
        StateVector(vec![*state as f64])
    }
}
