//! Property checks shared by the property suite and the acceptance runner.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::Rng;

use safeset_core::seed;
use safeset_core::toy::{ToyDynamics, ToySystem};
use safeset_core::vehicle::{adversary, AdversaryKind, Subject, VehicleParams, VehicleSystem};
use safeset_core::*;

// ---------------------------------------------------------------------------
// Covering
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct CoverCase {
    pub dims: Vec<Dim>,
    pub delta: Vec<f64>,
    pub seed: u64,
}

fn dim_strategy() -> impl Strategy<Value = (Dim, f64)> {
    prop_oneof![
        (-50.0..50.0f64, 0.5..60.0f64, 0.05..20.0f64)
            .prop_map(|(lo, w, d)| (Dim::continuous("c", "", lo, lo + w), d)),
        (-20i64..20, 0i64..30, 0.0..4.0f64).prop_map(|(lo, w, d)| (Dim::integer("i", lo, lo + w), d)),
    ]
}

pub fn cover_case() -> impl Strategy<Value = CoverCase> {
    (prop::collection::vec(dim_strategy(), 1..=4), any::<u64>()).prop_map(|(dims, seed)| {
        let (dims, delta) = dims.into_iter().unzip();
        CoverCase { dims, delta, seed }
    })
}

/// Every sampled point of the space lies in the neighbourhood of the
/// centroid `membership` reports, and centroids stay inside the space.
pub fn covering_complete(case: &CoverCase, points: usize) -> Result<(), TestCaseError> {
    let space = SpaceBox::new(case.dims.clone()).unwrap();
    let delta = DeltaVector::new(case.delta.clone()).unwrap();
    let cover = build_covering(&space, &delta).unwrap();
    for c in cover.centroids() {
        prop_assert!(space.contains(&c.0), "centroid {:?} outside the space", c);
    }
    let mut rng = seed::rng(case.seed);
    for _ in 0..points {
        let s = StateVector(space.sample_uniform(&mut rng));
        let Some(i) = cover.membership(&s) else {
            return Err(TestCaseError::fail(format!("{s:?} not covered")));
        };
        prop_assert!(neighborhood_contains(&cover.centroids()[i], &delta, &s).unwrap());
    }
    // The upper corner is the hardest point to reach.
    let corner = StateVector(space.dims.iter().map(|d| d.upper).collect());
    prop_assert!(cover.covers(&corner));
    Ok(())
}

/// Dropping centroids never adds covered points.
pub fn covering_monotone(case: &CoverCase, keep_mask: u64, points: usize) -> Result<(), TestCaseError> {
    let space = SpaceBox::new(case.dims.clone()).unwrap();
    let delta = DeltaVector::new(case.delta.clone()).unwrap();
    let cover = build_covering(&space, &delta).unwrap();
    let sub = cover.retain(|i, _| keep_mask >> (i % 64) & 1 == 1);
    prop_assert!(sub.is_subset_of(&cover));
    let mut rng = seed::rng(case.seed ^ 0x5eed);
    for _ in 0..points {
        let s = StateVector(space.sample_uniform(&mut rng));
        prop_assert!(!sub.covers(&s) || cover.covers(&s));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Reachability
// ---------------------------------------------------------------------------

pub fn graph_case() -> impl Strategy<Value = (u64, f64)> {
    (any::<u64>(), 0.0..0.12f64)
}

/// DFS reachability on a random 50-vertex digraph equals the
/// Floyd–Warshall transitive closure (plus the vertex itself).
pub fn dfs_matches_closure(seed_value: u64, density: f64) -> Result<(), TestCaseError> {
    const N: usize = 50;
    let mut rng = seed::rng(seed_value);
    let vertex = |i: usize| StateVector::new(vec![i as f64, -(i as f64)]);
    let mut graph = StateGraph::new();
    for i in 0..N {
        graph.add_vertex(&vertex(i));
    }
    let mut closure = vec![vec![false; N]; N];
    for (i, row) in closure.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if rng.gen_bool(density) {
                graph.add_edge(&vertex(i), &vertex(j));
                *cell = true;
            }
        }
    }
    for k in 0..N {
        for i in 0..N {
            if closure[i][k] {
                for j in 0..N {
                    if closure[k][j] {
                        closure[i][j] = true;
                    }
                }
            }
        }
    }
    for (i, row) in closure.iter().enumerate() {
        let expected: Vec<usize> = (0..N).filter(|&j| j == i || row[j]).collect();
        prop_assert_eq!(graph.reachable_indices(&vertex(i)), expected);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sample size
// ---------------------------------------------------------------------------

pub fn confidence_case() -> impl Strategy<Value = (f64, f64)> {
    (1e-4..0.9f64, 1e-12..0.9f64)
}

/// `(1-ε)^N <= β < (1-ε)^(N-1)`, compared in log space with a small slack.
pub fn min_samples_brackets(epsilon: f64, beta: f64) -> Result<(), TestCaseError> {
    let n = min_samples(epsilon, beta).unwrap();
    let l = (-epsilon).ln_1p();
    let target = beta.ln();
    let slack = 1e-9 * target.abs().max(1.0);
    prop_assert!(n as f64 * l <= target + slack, "N={} too small", n);
    if n > 1 {
        prop_assert!((n - 1) as f64 * l > target - slack, "N={} not minimal", n);
    }
    let eps_back = epsilon_from_samples(n, beta).unwrap();
    prop_assert!(eps_back <= epsilon * (1.0 + 1e-9));
    Ok(())
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct VehicleCase {
    pub start: [f64; 4],
    pub subject: Subject,
    pub kind: AdversaryKind,
    pub seed: u64,
    pub horizon: usize,
}

pub fn vehicle_case() -> impl Strategy<Value = VehicleCase> {
    (
        (0.0..50.0f64, -3.7..3.7f64, 0.0..25.0f64, 0.0..25.0f64),
        prop::bool::ANY,
        0usize..5,
        any::<u64>(),
        1usize..120,
    )
        .prop_map(|((dx, dy, v0, v1), idm_only, k, seed, horizon)| VehicleCase {
            start: [dx, dy, v0, v1],
            subject: if idm_only { Subject::Idm } else { Subject::IdmMobil },
            kind: AdversaryKind::ALL[k],
            seed,
            horizon,
        })
}

fn vehicle_run(case: &VehicleCase) -> Option<(VehicleSystem, RunRecord)> {
    let p = VehicleParams::default();
    let sys = VehicleSystem::single(p.clone(), case.subject).unwrap();
    let s0 = StateVector::new(case.start.to_vec());
    if sys.oss().is_failure(&s0) {
        return None;
    }
    let adv = adversary(case.kind, &p, None);
    let run = execute_run(&sys, ActionSource::Policy(&adv), &s0, case.horizon, case.seed).unwrap();
    Some((sys, run))
}

/// Same inputs, same record.
pub fn engine_deterministic(case: &VehicleCase) -> Result<(), TestCaseError> {
    let p = VehicleParams::default();
    let sys = VehicleSystem::mixed(p.clone()).unwrap();
    let s0 = StateVector::new(case.start.to_vec());
    if sys.oss().is_failure(&s0) {
        return Ok(());
    }
    let adv = adversary(case.kind, &p, None);
    let a = execute_run(&sys, ActionSource::Policy(&adv), &s0, case.horizon, case.seed).unwrap();
    let b = execute_run(&sys, ActionSource::Policy(&adv), &s0, case.horizon, case.seed).unwrap();
    prop_assert_eq!(a, b);
    Ok(())
}

/// Failure is absorbing, recorded states never leave `O ∪ C`, frozen steps
/// repeat the previous recorded state.
pub fn absorb_and_freeze(run: &RunRecord, oss: &OssSpec) -> Result<(), TestCaseError> {
    prop_assert_eq!(run.hit_failure, run.failure_step.is_some());
    if let Some(t) = run.failure_step {
        prop_assert!(oss.is_failure(&run.states[t]));
        prop_assert!(run.states[..t].iter().all(|s| !oss.is_failure(s)));
        prop_assert!(run.states[t..].iter().all(|s| *s == run.states[t]));
        prop_assert!(run.left_oss_steps.iter().all(|&i| i < t));
    }
    for s in &run.states {
        prop_assert!(oss.contains(s) || oss.is_failure(s));
    }
    for &i in &run.left_oss_steps {
        let previous = if i == 0 { &run.s0 } else { &run.states[i - 1] };
        prop_assert_eq!(&run.states[i], previous);
    }
    prop_assert_eq!(run.states.len(), run.actions.len());
    Ok(())
}

pub fn vehicle_absorb_and_freeze(case: &VehicleCase) -> Result<(), TestCaseError> {
    match vehicle_run(case) {
        Some((sys, run)) => absorb_and_freeze(&run, sys.oss()),
        None => Ok(()),
    }
}

pub fn toy_case() -> impl Strategy<Value = (f64, Vec<f64>, u64)> {
    (0.0..10.0f64, prop::collection::vec(-3.0..3.0f64, 1..30), any::<u64>())
}

/// Open-loop toy runs: the shift toy leaves `[0, 10]` on both sides and
/// fails below `-1`.
pub fn toy_absorb_and_freeze(x0: f64, actions: &[f64], run_seed: u64) -> Result<(), TestCaseError> {
    let sys = ToySystem::new(ToyDynamics::Shift, 0.0, 10.0, |x| x < -1.0);
    let seq: Vec<ActionVector> = actions.iter().map(|&u| ActionVector::new(vec![u])).collect();
    let run = execute_run(&sys, ActionSource::Sequence(&seq), &StateVector::new(vec![x0]), seq.len(), run_seed).unwrap();
    absorb_and_freeze(&run, sys.oss())?;
    // Oracle: replay the raw trajectory by hand.
    let mut x = x0;
    let mut last_in = x0;
    for (t, u) in actions.iter().enumerate() {
        x += u;
        if x < -1.0 {
            prop_assert_eq!(run.failure_step, Some(t));
            return Ok(());
        }
        if (0.0..=10.0).contains(&x) {
            last_in = x;
        }
        prop_assert_eq!(run.states[t].0[0], last_in);
    }
    prop_assert!(!run.hit_failure);
    Ok(())
}

// ---------------------------------------------------------------------------
// Vehicle
// ---------------------------------------------------------------------------

/// Replays a vehicle run on the underlying world and checks that every
/// completed merge into the subject's lane happened with headway above the
/// gap-acceptance distance, and that the collision flag matches the failure
/// predicate on the observation.
pub fn gap_acceptance_and_collision(case: &VehicleCase) -> Result<(), TestCaseError> {
    let p = VehicleParams::default();
    let sys = VehicleSystem::single(p.clone(), case.subject).unwrap();
    let s0 = StateVector::new(case.start.to_vec());
    if sys.oss().is_failure(&s0) {
        return Ok(());
    }
    let adv = adversary(case.kind, &p, None);
    let mut rng = seed::rng(case.seed);
    let mut w = sys.init(&s0, &mut rng);
    for _ in 0..case.horizon {
        let obs = sys.observe(&w);
        let u = adv.act(&w, &obs);
        let next = sys.step(&w, &u, &mut rng);
        if next.merges > w.merges {
            let gap = next.gap(&p);
            prop_assert!(gap > p.gap_acceptance, "merge completed at headway {}", gap);
            prop_assert_eq!(next.last_merge_dx, Some(gap));
        }
        let obs = sys.observe(&next);
        prop_assert_eq!(next.collided, sys.oss().is_failure(&obs));
        w = next;
        if w.collided {
            break;
        }
    }
    Ok(())
}

/// Every observation is a well-formed 4-vector with `d_x` capped at the
/// OSS bound.
pub fn observation_total(case: &VehicleCase) -> Result<(), TestCaseError> {
    let p = VehicleParams::default();
    if let Some((_, run)) = vehicle_run(case) {
        for s in run.trajectory() {
            prop_assert_eq!(s.dim(), 4);
            prop_assert!(s.0.iter().all(|x| x.is_finite()));
            prop_assert!(s.0[0] <= p.dx_cap);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Aggressiveness order
// ---------------------------------------------------------------------------

fn grid(n: usize) -> CoveringSet {
    let space = SpaceBox::new(vec![Dim::continuous("x", "", 0.0, 2.0 * n as f64)]).unwrap();
    build_covering(&space, &DeltaVector::new(vec![1.0]).unwrap()).unwrap()
}

pub fn masks() -> impl Strategy<Value = (u16, u16, u16)> {
    // Narrow masks make comparable triples common.
    let m = prop_oneof![any::<u16>(), (0u32..16).prop_map(|k| ((1u32 << k) - 1) as u16)];
    (m.clone(), m.clone(), m)
}

fn leq(o: AggressivenessOrder) -> bool {
    matches!(o, AggressivenessOrder::More | AggressivenessOrder::Equal)
}

/// The order is a partial order induced by set inclusion.
pub fn order_is_partial((a, b, c): (u16, u16, u16)) -> Result<(), TestCaseError> {
    let all = grid(16);
    let pick = |m: u16| all.retain(|i, _| m >> i & 1 == 1);
    let (a, b, c) = (pick(a), pick(b), pick(c));
    let ab = aggressiveness_order(&a, &b).unwrap();
    let bc = aggressiveness_order(&b, &c).unwrap();
    let ac = aggressiveness_order(&a, &c).unwrap();
    let ba = aggressiveness_order(&b, &a).unwrap();
    prop_assert_eq!(aggressiveness_order(&a, &a).unwrap(), AggressivenessOrder::Equal);
    let flipped = match ab {
        AggressivenessOrder::More => AggressivenessOrder::Less,
        AggressivenessOrder::Less => AggressivenessOrder::More,
        o => o,
    };
    prop_assert_eq!(ba, flipped);
    if leq(ab) && leq(bc) {
        prop_assert!(leq(ac));
        if ab == AggressivenessOrder::More || bc == AggressivenessOrder::More {
            prop_assert_eq!(ac, AggressivenessOrder::More);
        }
    }
    let j = iou(&a, &b).unwrap();
    prop_assert!((0.0..=1.0).contains(&j));
    prop_assert_eq!(j, iou(&b, &a).unwrap());
    prop_assert_eq!(j == 1.0, ab == AggressivenessOrder::Equal);
    Ok(())
}
