//! Testing-system engine.
//!
//! A testing system is a black-box discrete-time transition
//! `s(t+1) = f(s(t), u(t); w(t))` observed through an operational state
//! space (OSS) `O` with a failure region `C`. This module executes single
//! runs of a scenario with the recording rules used throughout the crate:
//!
//! * **absorb** - once an observed state falls in `C` the run has failed and
//!   every later recorded state is that failure state;
//! * **freeze** - while the underlying state is outside `O ∪ C` the recorded
//!   state is held at the last in-OSS state. The simulation itself keeps
//!   evolving and recording resumes as soon as it re-enters `O`.
//!
//! On top of single runs, [`run_algorithm`] drives the generic open-loop and
//! feedback testing loops until a termination rule fires.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, RunRng};

// ---------------------------------------------------------------------------
// States, actions and spaces
// ---------------------------------------------------------------------------

/// A point of the state space. Integer-kind coordinates hold exact integers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(pub Vec<f64>);

/// A testing action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionVector(pub Vec<f64>);

/// Exact, hashable identity of a vector (bit pattern, `-0.0` folded to `0.0`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(Vec<u64>);

fn bits_of(coords: &[f64]) -> StateKey {
    StateKey(
        coords
            .iter()
            .map(|&c| if c == 0.0 { 0.0f64.to_bits() } else { c.to_bits() })
            .collect(),
    )
}

impl StateVector {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        StateVector(coords.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn key(&self) -> StateKey {
        bits_of(&self.0)
    }
}

impl ActionVector {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        ActionVector(coords.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn key(&self) -> StateKey {
        bits_of(&self.0)
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(v: Vec<f64>) -> Self {
        StateVector(v)
    }
}

impl From<Vec<f64>> for ActionVector {
    fn from(v: Vec<f64>) -> Self {
        ActionVector(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimKind {
    Continuous,
    Integer,
}

/// One axis of a box-shaped space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dim {
    pub name: String,
    #[serde(default)]
    pub unit: String,
    pub kind: DimKind,
    pub lower: f64,
    pub upper: f64,
}

impl Dim {
    pub fn continuous(name: &str, unit: &str, lower: f64, upper: f64) -> Self {
        Dim {
            name: name.to_owned(),
            unit: unit.to_owned(),
            kind: DimKind::Continuous,
            lower,
            upper,
        }
    }

    pub fn integer(name: &str, lower: i64, upper: i64) -> Self {
        Dim {
            name: name.to_owned(),
            unit: String::new(),
            kind: DimKind::Integer,
            lower: lower as f64,
            upper: upper as f64,
        }
    }

    pub fn range(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Axis-aligned box of states (or actions).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceBox {
    pub dims: Vec<Dim>,
}

impl SpaceBox {
    pub fn new(dims: Vec<Dim>) -> Result<Self> {
        let space = SpaceBox { dims };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::InvalidSpace("space has no dimensions".into()));
        }
        for d in &self.dims {
            if !(d.lower.is_finite() && d.upper.is_finite()) {
                return Err(Error::InvalidSpace(format!("dimension {} has non-finite bounds", d.name)));
            }
            match d.kind {
                DimKind::Continuous if d.lower >= d.upper => {
                    return Err(Error::InvalidSpace(format!(
                        "continuous dimension {} needs lower < upper",
                        d.name
                    )))
                }
                DimKind::Integer if d.lower > d.upper || d.lower.fract() != 0.0 || d.upper.fract() != 0.0 => {
                    return Err(Error::InvalidSpace(format!(
                        "integer dimension {} needs integer bounds with lower <= upper",
                        d.name
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn check_dim(&self, coords: &[f64]) -> Result<()> {
        if coords.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                actual: coords.len(),
            });
        }
        Ok(())
    }

    /// Inclusive box membership; integer dimensions also require integrality.
    pub fn contains(&self, coords: &[f64]) -> bool {
        coords.len() == self.dims.len()
            && self.dims.iter().zip(coords).all(|(d, &x)| {
                x >= d.lower && x <= d.upper && (d.kind == DimKind::Continuous || x.fract() == 0.0)
            })
    }

    /// Uniform sample: continuous dimensions on `[lower, upper)`, integer ones
    /// over every admissible integer.
    pub fn sample_uniform(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.dims
            .iter()
            .map(|d| match d.kind {
                DimKind::Continuous => rng.gen_range(d.lower..d.upper),
                DimKind::Integer => rng.gen_range(d.lower as i64..=d.upper as i64) as f64,
            })
            .collect()
    }

    /// Coordinates scaled by each dimension's admissible range.
    pub fn normalize(&self, coords: &[f64]) -> Vec<f64> {
        self.dims
            .iter()
            .zip(coords)
            .map(|(d, &x)| {
                let r = d.range();
                if r > 0.0 {
                    (x - d.lower) / r
                } else {
                    0.0
                }
            })
            .collect()
    }
}

pub type FailurePredicate = Arc<dyn Fn(&StateVector) -> bool + Send + Sync>;

/// Operational state space `O` together with its failure region `C`.
#[derive(Clone)]
pub struct OssSpec {
    pub space: SpaceBox,
    failure: FailurePredicate,
}

impl fmt::Debug for OssSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OssSpec").field("space", &self.space).finish_non_exhaustive()
    }
}

impl OssSpec {
    pub fn new(space: SpaceBox, failure: impl Fn(&StateVector) -> bool + Send + Sync + 'static) -> Result<Self> {
        space.validate()?;
        Ok(OssSpec {
            space,
            failure: Arc::new(failure),
        })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn contains(&self, s: &StateVector) -> bool {
        self.space.contains(&s.0)
    }

    pub fn is_failure(&self, s: &StateVector) -> bool {
        (self.failure)(s)
    }

    pub fn failure_predicate(&self) -> FailurePredicate {
        Arc::clone(&self.failure)
    }

    /// The product space `O × U` used to quantify controlled safe sets with
    /// state-dependent actions folded into the initial state.
    pub fn product(&self, actions: &SpaceBox) -> Result<OssSpec> {
        let n = self.dim();
        let mut dims = self.space.dims.clone();
        dims.extend(actions.dims.iter().cloned());
        let failure = Arc::clone(&self.failure);
        OssSpec::new(SpaceBox { dims }, move |s: &StateVector| {
            failure(&StateVector(s.0[..n].to_vec()))
        })
    }
}

// ---------------------------------------------------------------------------
// Systems and policies
// ---------------------------------------------------------------------------

/// A black-box testing system.
///
/// `State` is the full underlying simulation state. The engine only ever
/// inspects it through [`SystemModel::observe`], which projects it onto the
/// OSS coordinates (the projection may fall outside `O`).
pub trait SystemModel: Sync {
    type State: Clone + Send;

    fn label(&self) -> String;

    fn oss(&self) -> &OssSpec;

    /// Realize an OSS state. Stochastic systems draw their per-run
    /// configuration (e.g. which subject variant is under test) from `rng`.
    fn init(&self, s0: &StateVector, rng: &mut RunRng) -> Self::State;

    fn step(&self, state: &Self::State, action: &ActionVector, rng: &mut RunRng) -> Self::State;

    fn observe(&self, state: &Self::State) -> StateVector;
}

/// Feedback testing policy `u = π(s)`.
pub trait PolicyModel<S>: Sync {
    fn label(&self) -> String;

    fn act(&self, state: &S, observed: &StateVector) -> ActionVector;
}

/// Draws open-loop action sequences (controlled-safe-set mode).
pub trait ActionSampler: Sync {
    fn label(&self) -> String;

    fn sample(&self, k: usize, rng: &mut RunRng) -> Vec<ActionVector>;
}

/// Uniform actions over a box. With `hold` one action is drawn per run and
/// repeated, otherwise every step draws a fresh action.
#[derive(Clone, Debug)]
pub struct UniformActions {
    pub space: SpaceBox,
    pub hold: bool,
}

impl ActionSampler for UniformActions {
    fn label(&self) -> String {
        let names: Vec<_> = self.space.dims.iter().map(|d| d.name.as_str()).collect();
        format!("uniform[{}]{}", names.join(","), if self.hold { "/hold" } else { "" })
    }

    fn sample(&self, k: usize, rng: &mut RunRng) -> Vec<ActionVector> {
        if self.hold {
            let u = ActionVector(self.space.sample_uniform(rng));
            vec![u; k]
        } else {
            (0..k).map(|_| ActionVector(self.space.sample_uniform(rng))).collect()
        }
    }
}

/// Where the testing actions of a single run come from.
pub enum ActionSource<'a, S> {
    Policy(&'a dyn PolicyModel<S>),
    Sequence(&'a [ActionVector]),
}

/// The tester side of validation and quantification: a feedback policy
/// (almost safe sets) or an admissible action set sampled i.i.d. per run
/// (almost controlled safe sets).
pub enum Actor<'a, S> {
    Policy(&'a dyn PolicyModel<S>),
    Controlled(&'a dyn ActionSampler),
}

impl<S> Clone for Actor<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S> Copy for Actor<'_, S> {}

impl<'a, S> Actor<'a, S> {
    pub fn label(&self) -> String {
        match self {
            Actor::Policy(p) => p.label(),
            Actor::Controlled(a) => a.label(),
        }
    }

    pub fn is_controlled(&self) -> bool {
        matches!(self, Actor::Controlled(_))
    }

    /// Execute one run. In controlled mode the action sequence is drawn from
    /// a sub-stream of `seed`, so the run is still a pure function of `seed`.
    pub fn run<M>(&self, system: &M, s0: &StateVector, k: usize, seed: u64) -> Result<RunRecord>
    where
        M: SystemModel<State = S> + ?Sized,
    {
        match *self {
            Actor::Policy(p) => execute_run(system, ActionSource::Policy(p), s0, k, seed),
            Actor::Controlled(sampler) => {
                let mut rng = seed::rng(seed::substream(seed, "actions"));
                let actions = sampler.sample(k, &mut rng);
                execute_run(system, ActionSource::Sequence(&actions), s0, k, seed)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

/// One run of a scenario. `states[t]` is the recorded state after step
/// `t + 1`; the state before `states[0]` is `s0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub s0: StateVector,
    pub states: Vec<StateVector>,
    pub actions: Vec<ActionVector>,
    pub seed: u64,
    pub hit_failure: bool,
    /// Indices into `states` where the freeze rule held the recording.
    #[serde(default)]
    pub left_oss_steps: Vec<usize>,
    #[serde(default)]
    pub failure_step: Option<usize>,
    /// Set when the underlying state never re-entered the OSS before the
    /// horizon; the run counts as a non-failure with a frozen tail.
    #[serde(default)]
    pub ended_outside_oss: bool,
}

impl RunRecord {
    pub fn horizon(&self) -> usize {
        self.states.len()
    }

    /// `s0` followed by the recorded states.
    pub fn trajectory(&self) -> impl Iterator<Item = &StateVector> {
        std::iter::once(&self.s0).chain(self.states.iter())
    }
}

/// Execute a single run of horizon `k` from `s0`.
pub fn execute_run<M>(
    system: &M,
    source: ActionSource<'_, M::State>,
    s0: &StateVector,
    k: usize,
    seed: u64,
) -> Result<RunRecord>
where
    M: SystemModel + ?Sized,
{
    let oss = system.oss();
    oss.space.check_dim(&s0.0)?;
    if k == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if oss.is_failure(s0) {
        return Err(Error::InitialStateInFailure(s0.0.clone()));
    }
    if !oss.contains(s0) {
        return Err(Error::InitialStateOutsideOss(s0.0.clone()));
    }
    if let ActionSource::Sequence(seq) = &source {
        if seq.len() != k {
            return Err(Error::ActionSequenceLength {
                expected: k,
                actual: seq.len(),
            });
        }
    }

    let mut rng = seed::rng(seed);
    let mut world = system.init(s0, &mut rng);
    let mut states = Vec::with_capacity(k);
    let mut actions: Vec<ActionVector> = Vec::with_capacity(k);
    let mut left_oss_steps = Vec::new();
    let mut failure_step = None;
    let mut last_in_oss = s0.clone();
    let mut outside = false;

    for t in 0..k {
        if let Some(fs) = failure_step {
            // Absorbed: no further simulation.
            let failed: &StateVector = &states[fs];
            states.push(failed.clone());
            let u = match &source {
                ActionSource::Sequence(seq) => seq[t].clone(),
                ActionSource::Policy(_) => actions[t - 1].clone(),
            };
            actions.push(u);
            continue;
        }
        let u = match &source {
            ActionSource::Sequence(seq) => seq[t].clone(),
            ActionSource::Policy(p) => {
                let observed = system.observe(&world);
                p.act(&world, &observed)
            }
        };
        world = system.step(&world, &u, &mut rng);
        actions.push(u);
        let obs = system.observe(&world);
        if oss.is_failure(&obs) {
            failure_step = Some(t);
            outside = false;
            states.push(obs);
        } else if oss.contains(&obs) {
            outside = false;
            last_in_oss = obs.clone();
            states.push(obs);
        } else {
            outside = true;
            left_oss_steps.push(t);
            states.push(last_in_oss.clone());
        }
    }

    Ok(RunRecord {
        s0: s0.clone(),
        states,
        actions,
        seed,
        hit_failure: failure_step.is_some(),
        left_oss_steps,
        failure_step,
        ended_outside_oss: outside,
    })
}

// ---------------------------------------------------------------------------
// Costs and termination
// ---------------------------------------------------------------------------

/// An element of the (finite) cost set. Equality is structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostValue {
    Flag(bool),
    Sequence(Vec<u64>),
}

pub trait CostFunction {
    fn cost(&self, run: &RunRecord) -> CostValue;
}

/// The failure-or-non-failure check: `true` iff the run reached `C`.
pub fn failure_cost(run: &RunRecord) -> CostValue {
    CostValue::Flag(run.hit_failure)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct FailureCost;

impl CostFunction for FailureCost {
    fn cost(&self, run: &RunRecord) -> CostValue {
        failure_cost(run)
    }
}

impl<F: Fn(&RunRecord) -> CostValue> CostFunction for F {
    fn cost(&self, run: &RunRecord) -> CostValue {
        self(run)
    }
}

/// Termination function over the cost sequence collected so far.
pub trait TerminationRule {
    fn check(&self, costs: &[CostValue]) -> bool;
}

impl<F: Fn(&[CostValue]) -> bool> TerminationRule for F {
    fn check(&self, costs: &[CostValue]) -> bool {
        self(costs)
    }
}

/// Stop at the first failing run.
#[derive(Clone, Copy, Debug, Default)]
pub struct FirstFailure;

impl TerminationRule for FirstFailure {
    fn check(&self, costs: &[CostValue]) -> bool {
        costs.iter().any(|c| *c == CostValue::Flag(true))
    }
}

// ---------------------------------------------------------------------------
// Testing algorithms
// ---------------------------------------------------------------------------

/// Chooses the next initial state, possibly from the cost history.
pub trait InitialStateSampler {
    fn label(&self) -> String;

    fn next(&mut self, history: &[CostValue], rng: &mut RunRng) -> Option<StateVector>;
}

/// Chooses the next `(s0, ū)` pair of an open-loop algorithm.
pub trait ScenarioSampler {
    fn label(&self) -> String;

    fn next(&mut self, history: &[CostValue], rng: &mut RunRng) -> Option<(StateVector, Vec<ActionVector>)>;
}

/// Uniform initial states over a box, ignoring history.
#[derive(Clone, Debug)]
pub struct UniformInitial {
    pub space: SpaceBox,
}

impl InitialStateSampler for UniformInitial {
    fn label(&self) -> String {
        "uniform".into()
    }

    fn next(&mut self, _history: &[CostValue], rng: &mut RunRng) -> Option<StateVector> {
        Some(StateVector(self.space.sample_uniform(rng)))
    }
}

/// A concrete exploration order over `S × U^k` (brute force).
#[derive(Clone, Debug)]
pub struct FixedOrder {
    pub label: String,
    pub scenarios: Vec<(StateVector, Vec<ActionVector>)>,
    cursor: usize,
}

impl FixedOrder {
    pub fn new(label: &str, scenarios: Vec<(StateVector, Vec<ActionVector>)>) -> Self {
        FixedOrder {
            label: label.to_owned(),
            scenarios,
            cursor: 0,
        }
    }

    pub fn reversed(&self) -> Self {
        let mut scenarios = self.scenarios.clone();
        scenarios.reverse();
        FixedOrder::new(&format!("{}-reversed", self.label), scenarios)
    }
}

impl ScenarioSampler for FixedOrder {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn next(&mut self, _history: &[CostValue], _rng: &mut RunRng) -> Option<(StateVector, Vec<ActionVector>)> {
        let item = self.scenarios.get(self.cursor).cloned();
        self.cursor += 1;
        item
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmKind {
    /// Explores `S × U^k` in a chosen order or distribution.
    OpenLoop,
    /// Follows a state-dependent testing policy.
    Feedback,
}

/// The testing-action source of an algorithm; exactly one per kind.
pub enum TestingActions<'a, S> {
    OpenLoop(Box<dyn ScenarioSampler + 'a>),
    Feedback {
        initial: Box<dyn InitialStateSampler + 'a>,
        policy: &'a dyn PolicyModel<S>,
    },
}

pub struct AlgorithmSpec<'a, S> {
    pub label: String,
    pub horizon: usize,
    pub actions: TestingActions<'a, S>,
    pub cost: Box<dyn CostFunction + 'a>,
    pub termination: Box<dyn TerminationRule + 'a>,
}

impl<S> AlgorithmSpec<'_, S> {
    pub fn kind(&self) -> AlgorithmKind {
        match self.actions {
            TestingActions::OpenLoop(_) => AlgorithmKind::OpenLoop,
            TestingActions::Feedback { .. } => AlgorithmKind::Feedback,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AlgorithmOutcome {
    pub costs: Vec<CostValue>,
    pub runs: Vec<RunRecord>,
    /// `false` when `max_runs` (or the sampler) ran out before termination.
    pub terminated: bool,
    pub duplicates_discarded: usize,
}

/// Attempts allowed per accepted run before giving up on a sampler that
/// keeps producing duplicates.
const DUPLICATE_ATTEMPT_FACTOR: usize = 64;

/// Iterate runs until the termination rule fires or `max_runs` distinct runs
/// were collected. Runs repeating an earlier (states, actions, cost) triple
/// carry no information and are dropped without being counted.
pub fn run_algorithm<M>(
    spec: &mut AlgorithmSpec<'_, M::State>,
    system: &M,
    max_runs: usize,
    seed: u64,
) -> Result<AlgorithmOutcome>
where
    M: SystemModel + ?Sized,
{
    if max_runs == 0 {
        return Err(Error::InvalidArgument("max_runs must be at least 1".into()));
    }
    let mut sampler_rng = seed::rng(seed::substream(seed, "sampler"));
    let mut costs = Vec::new();
    let mut runs = Vec::new();
    let mut seen: HashSet<(Vec<StateKey>, Vec<StateKey>, CostValue)> = HashSet::new();
    let mut duplicates = 0;
    let mut terminated = false;
    let max_attempts = max_runs.saturating_mul(DUPLICATE_ATTEMPT_FACTOR);
    let k = spec.horizon;

    for attempt in 0..max_attempts {
        if costs.len() >= max_runs {
            break;
        }
        let run_seed = seed::derive(seed, attempt as u64);
        let run = match &mut spec.actions {
            TestingActions::OpenLoop(sampler) => {
                let Some((s0, ubar)) = sampler.next(&costs, &mut sampler_rng) else {
                    break;
                };
                execute_run(system, ActionSource::Sequence(&ubar), &s0, k, run_seed)?
            }
            TestingActions::Feedback { initial, policy } => {
                let Some(s0) = initial.next(&costs, &mut sampler_rng) else {
                    break;
                };
                execute_run(system, ActionSource::Policy(*policy), &s0, k, run_seed)?
            }
        };
        let cost = spec.cost.cost(&run);
        let triple = (
            run.trajectory().map(StateVector::key).collect(),
            run.actions.iter().map(ActionVector::key).collect(),
            cost.clone(),
        );
        if !seen.insert(triple) {
            duplicates += 1;
            continue;
        }
        costs.push(cost);
        runs.push(run);
        if spec.termination.check(&costs) {
            terminated = true;
            break;
        }
    }

    Ok(AlgorithmOutcome {
        costs,
        runs,
        terminated,
        duplicates_discarded: duplicates,
    })
}

// ---------------------------------------------------------------------------
// State-dependent action sets folded into the state
// ---------------------------------------------------------------------------

/// A system over the product space `O × U`: the trailing coordinates of the
/// initial state select an action that is held for the whole run. Used to
/// quantify controlled safe sets with a state-dependent admissible set.
pub struct ProductSystem<'a, M: SystemModel + ?Sized> {
    inner: &'a M,
    oss: OssSpec,
    state_dim: usize,
}

impl<'a, M: SystemModel + ?Sized> ProductSystem<'a, M> {
    pub fn new(inner: &'a M, actions: &SpaceBox) -> Result<Self> {
        let state_dim = inner.oss().dim();
        Ok(ProductSystem {
            inner,
            oss: inner.oss().product(actions)?,
            state_dim,
        })
    }
}

impl<M: SystemModel + ?Sized> SystemModel for ProductSystem<'_, M> {
    type State = (M::State, ActionVector);

    fn label(&self) -> String {
        format!("{}×U", self.inner.label())
    }

    fn oss(&self) -> &OssSpec {
        &self.oss
    }

    fn init(&self, s0: &StateVector, rng: &mut RunRng) -> Self::State {
        let (s, u) = s0.0.split_at(self.state_dim);
        (self.inner.init(&StateVector(s.to_vec()), rng), ActionVector(u.to_vec()))
    }

    fn step(&self, state: &Self::State, _action: &ActionVector, rng: &mut RunRng) -> Self::State {
        (self.inner.step(&state.0, &state.1, rng), state.1.clone())
    }

    fn observe(&self, state: &Self::State) -> StateVector {
        let mut obs = self.inner.observe(&state.0).0;
        obs.extend_from_slice(&state.1 .0);
        StateVector(obs)
    }
}

/// Replays the action stored in a [`ProductSystem`] state.
#[derive(Clone, Copy, Debug, Default)]
pub struct HeldAction;

impl<S> PolicyModel<(S, ActionVector)> for HeldAction {
    fn label(&self) -> String {
        "held-action".into()
    }

    fn act(&self, state: &(S, ActionVector), _observed: &StateVector) -> ActionVector {
        state.1.clone()
    }
}
