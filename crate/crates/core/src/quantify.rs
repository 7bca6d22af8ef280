//! Almost-safe-set quantification.
//!
//! Starting from a regular δ-covering of the OSS, repeatedly run scenarios
//! from surviving centroids. Failure runs prune every centroid reachable in
//! the provenance graph from the failing trajectory and queue the trajectory
//! in a FIFO replay buffer, so the next initial states are the surviving
//! centroids nearest to it. The procedure stops once `min_samples(ε, β)`
//! consecutive runs were clean while the centroid set and the buffer stayed
//! unchanged.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::covering::{build_covering, CoveringSet, DeltaVector};
use crate::engine::{Actor, SpaceBox, StateKey, StateVector, SystemModel};
use crate::error::{Error, Result};
use crate::seed;
use crate::stats::ConfidenceSpec;

// ---------------------------------------------------------------------------
// Graph and buffer
// ---------------------------------------------------------------------------

/// Directed graph over states, vertices identified by exact value.
#[derive(Clone, Debug, Default)]
pub struct StateGraph {
    vertices: Vec<StateVector>,
    index: HashMap<StateKey, usize>,
    adjacency: Vec<Vec<usize>>,
    edges: HashSet<(usize, usize)>,
}

impl StateGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, s: &StateVector) -> usize {
        if let Some(&i) = self.index.get(&s.key()) {
            return i;
        }
        let i = self.vertices.len();
        self.vertices.push(s.clone());
        self.index.insert(s.key(), i);
        self.adjacency.push(Vec::new());
        i
    }

    /// Adds both endpoints if needed; parallel edges are merged.
    pub fn add_edge(&mut self, from: &StateVector, to: &StateVector) {
        let a = self.add_vertex(from);
        let b = self.add_vertex(to);
        if self.edges.insert((a, b)) {
            self.adjacency[a].push(b);
        }
    }

    pub fn vertex_index(&self, s: &StateVector) -> Option<usize> {
        self.index.get(&s.key()).copied()
    }

    pub fn vertex(&self, i: usize) -> &StateVector {
        &self.vertices[i]
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Indices of the vertices reachable from `s` by a depth-first search,
    /// `s` included, ascending. Empty if `s` is not a vertex.
    pub fn reachable_indices(&self, s: &StateVector) -> Vec<usize> {
        let Some(start) = self.vertex_index(s) else {
            return Vec::new();
        };
        let mut seen = vec![false; self.vertices.len()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }
}

/// All vertices of `graph` reachable from `s` (including `s` itself when it
/// is a vertex).
pub fn reachable(graph: &StateGraph, s: &StateVector) -> Vec<StateVector> {
    graph
        .reachable_indices(s)
        .into_iter()
        .map(|i| graph.vertex(i).clone())
        .collect()
}

/// FIFO replay buffer of states to revisit.
#[derive(Clone, Debug, Default)]
pub struct ReplayBuffer {
    queue: VecDeque<StateVector>,
}

impl ReplayBuffer {
    pub fn push(&mut self, s: StateVector) {
        self.queue.push_back(s);
    }

    pub fn pop(&mut self) -> Option<StateVector> {
        self.queue.pop_front()
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}

/// Index of the candidate closest to `s` in range-normalized ℓ2 distance,
/// lowest index on ties.
pub fn norm_nearest(candidates: &[StateVector], s: &StateVector, space: &SpaceBox) -> Result<usize> {
    nearest_among(candidates, 0..candidates.len(), s, space)
}

fn nearest_among(
    centroids: &[StateVector],
    pool: impl IntoIterator<Item = usize>,
    s: &StateVector,
    space: &SpaceBox,
) -> Result<usize> {
    space.check_dim(&s.0)?;
    let target = space.normalize(&s.0);
    let mut best: Option<(usize, f64)> = None;
    for i in pool {
        let c = space.normalize(&centroids[i].0);
        let d: f64 = c.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::EmptyCandidates)
}

// ---------------------------------------------------------------------------
// Quantification
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantifyOptions {
    /// Drop the initial centroid of a clean run whose trajectory left the
    /// current covered region. Without it such runs count as clean and the
    /// result need not re-validate.
    pub prune_on_escape: bool,
    /// Keep one audit entry per iteration.
    pub audit: bool,
}

impl Default for QuantifyOptions {
    fn default() -> Self {
        QuantifyOptions {
            prune_on_escape: true,
            audit: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuantifyParams {
    pub spec: ConfidenceSpec,
    pub delta: DeltaVector,
    pub horizon: usize,
    pub seed: u64,
    pub max_runs: u64,
    pub options: QuantifyOptions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialSource {
    Uniform,
    Buffer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationOutcome {
    Failure,
    Escape,
    Clean,
}

/// One iteration of the quantification loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub iteration: u64,
    pub s0: StateVector,
    pub s0_index: usize,
    pub source: InitialSource,
    pub seed: u64,
    pub outcome: IterationOutcome,
    /// Initial-cover indices removed in this iteration.
    pub pruned: Vec<usize>,
    pub surviving: usize,
    pub buffer_len: usize,
    pub clean_streak: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuantifyResult {
    /// Surviving centroids, in the order of the initial covering.
    pub cover: CoveringSet,
    pub initial_centroids: usize,
    /// Centroids excluded up front because they lie in the failure region.
    pub excluded_in_failure: usize,
    pub runs_total: u64,
    pub failure_runs: u64,
    pub escape_runs: u64,
    pub pruned_centroids: usize,
    pub required_clean_runs: u64,
    /// `false` when `max_runs` was reached first; the cover is then partial.
    pub converged: bool,
    pub graph_vertices: usize,
    pub provenance_edges: usize,
    pub failure_edges: usize,
    #[serde(skip)]
    pub audit: Vec<AuditEntry>,
    /// For each pruned initial-cover index, the iteration that pruned it.
    #[serde(skip)]
    pub pruned_at: HashMap<usize, u64>,
}

impl QuantifyResult {
    pub fn is_valid(&self) -> bool {
        self.converged
    }
}

struct Survivors {
    alive: Vec<bool>,
    list: Vec<usize>,
}

impl Survivors {
    fn remove(&mut self, i: usize) -> bool {
        if !self.alive[i] {
            return false;
        }
        self.alive[i] = false;
        if let Ok(pos) = self.list.binary_search(&i) {
            self.list.remove(pos);
        }
        true
    }
}

/// Quantify an almost safe set of `system` under `actor`.
pub fn quantify<M>(system: &M, actor: Actor<'_, M::State>, params: &QuantifyParams) -> Result<QuantifyResult>
where
    M: SystemModel + ?Sized,
{
    let oss = system.oss();
    let required = params.spec.min_samples()?;
    if params.max_runs < required {
        return Err(Error::InvalidArgument(format!(
            "max_runs {} is below the {} consecutive clean runs required",
            params.max_runs, required
        )));
    }
    let initial = build_covering(&oss.space, &params.delta)?;
    let centroids = initial.centroids();
    let n = centroids.len();

    let mut survivors = Survivors {
        alive: vec![true; n],
        list: (0..n).collect(),
    };
    let mut excluded = 0;
    for (i, c) in centroids.iter().enumerate() {
        if oss.is_failure(c) && survivors.remove(i) {
            excluded += 1;
        }
    }

    // G_s starts with every centroid as a vertex; vertex i is centroid i.
    let mut graph = StateGraph::new();
    for c in centroids {
        graph.add_vertex(c);
    }
    let mut failure_graph = StateGraph::new();
    let mut buffer = ReplayBuffer::default();
    let mut pick_rng = seed::rng(seed::substream(params.seed, "quantify/initial"));
    let run_master = seed::substream(params.seed, "quantify/run");

    let mut streak = 0u64;
    let mut runs_total = 0u64;
    let mut failure_runs = 0u64;
    let mut escape_runs = 0u64;
    let mut audit = Vec::new();
    let mut pruned_at = HashMap::new();
    let mut converged = false;

    loop {
        if streak >= required || survivors.list.is_empty() {
            converged = true;
            break;
        }
        if runs_total >= params.max_runs {
            break;
        }
        let (s0_index, source) = match buffer.pop() {
            None => (
                survivors.list[pick_rng.gen_range(0..survivors.list.len())],
                InitialSource::Uniform,
            ),
            Some(sb) => (
                nearest_among(centroids, survivors.list.iter().copied(), &sb, &oss.space)?,
                InitialSource::Buffer,
            ),
        };
        let s0 = &centroids[s0_index];
        let run_seed = seed::derive(run_master, runs_total);
        let iteration = runs_total;
        let run = actor.run(system, s0, params.horizon, run_seed)?;
        runs_total += 1;

        let mut pruned = Vec::new();
        let outcome = if let Some(fail_at) = run.failure_step {
            failure_runs += 1;
            let tau: Vec<&StateVector> = run.trajectory().take(fail_at + 2).collect();
            for pair in tau.windows(2) {
                buffer.push(pair[0].clone());
                for v in graph.reachable_indices(pair[0]) {
                    if v < n && survivors.remove(v) {
                        pruned.push(v);
                    }
                }
                failure_graph.add_edge(pair[0], pair[1]);
            }
            buffer.push(tau[tau.len() - 1].clone());
            streak = 0;
            IterationOutcome::Failure
        } else {
            let size_before = survivors.list.len();
            let alive = &survivors.alive;
            let mut anchor = s0.clone();
            let mut escaped = false;
            for s in &run.states {
                if initial.membership_where(s, |i| alive[i]).is_none() {
                    graph.add_edge(&anchor, s);
                    anchor = s.clone();
                    escaped = true;
                }
            }
            if escaped {
                escape_runs += 1;
                if params.options.prune_on_escape && survivors.remove(s0_index) {
                    pruned.push(s0_index);
                }
            }
            if size_before == survivors.list.len() && buffer.is_empty() {
                streak += 1;
            } else {
                streak = 0;
            }
            if escaped {
                IterationOutcome::Escape
            } else {
                IterationOutcome::Clean
            }
        };
        for &p in &pruned {
            pruned_at.insert(p, iteration);
        }
        if params.options.audit {
            audit.push(AuditEntry {
                iteration,
                s0: s0.clone(),
                s0_index,
                source,
                seed: run_seed,
                outcome,
                pruned,
                surviving: survivors.list.len(),
                buffer_len: buffer.len(),
                clean_streak: streak,
            });
        }
    }

    if !converged {
        log::warn!(
            "quantification stopped at {} runs with a clean streak of {}/{}",
            runs_total,
            streak,
            required
        );
    }
    let cover = initial.retain(|i, _| survivors.alive[i]);
    Ok(QuantifyResult {
        pruned_centroids: n - excluded - cover.len(),
        cover,
        initial_centroids: n,
        excluded_in_failure: excluded,
        runs_total,
        failure_runs,
        escape_runs,
        required_clean_runs: required,
        converged,
        graph_vertices: graph.vertex_count(),
        provenance_edges: graph.edge_count(),
        failure_edges: failure_graph.edge_count(),
        audit,
        pruned_at,
    })
}
