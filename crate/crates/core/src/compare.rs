//! Aggressiveness of testing algorithms.
//!
//! A tester is more aggressive than another when the almost safe set it
//! induces is strictly contained in the other's. [`Comparator`] decides the
//! "at least as aggressive" question for a pair without quantifying the
//! second tester whenever the first tester's safe set survives the second
//! tester's runs, with any escaping probability mass below `ε`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::{CoveringSet, DeltaVector};
use crate::engine::{Actor, RunRecord, SystemModel};
use crate::error::{Error, Result};
pub use crate::stats::MassFunction;
use crate::quantify::{quantify, QuantifyOptions, QuantifyParams, QuantifyResult};
use crate::seed;
use crate::stats::ConfidenceSpec;

// ---------------------------------------------------------------------------
// Set metrics
// ---------------------------------------------------------------------------

fn ensure_compatible(a: &CoveringSet, b: &CoveringSet) -> Result<()> {
    if a.compatible(b) {
        Ok(())
    } else {
        Err(Error::MismatchedCover)
    }
}

/// Intersection over union of centroid sets; `1` when both are empty.
pub fn iou(a: &CoveringSet, b: &CoveringSet) -> Result<f64> {
    ensure_compatible(a, b)?;
    let inter = a.intersection_count(b);
    let union = a.len() + b.len() - inter;
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// `|A \ B| / |O|` on centroid counts.
pub fn diff_fraction(a: &CoveringSet, b: &CoveringSet, whole: &CoveringSet) -> Result<f64> {
    ensure_compatible(a, b)?;
    ensure_compatible(a, whole)?;
    if whole.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let diff = a.len() - a.intersection_count(b);
    Ok(diff as f64 / whole.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggressivenessOrder {
    /// The first tester's safe set is a strict subset of the second's.
    More,
    Less,
    Equal,
    Incomparable,
}

/// Order two testers by their safe sets `Φ₁`, `Φ₂` (centroid level).
pub fn aggressiveness_order(phi1: &CoveringSet, phi2: &CoveringSet) -> Result<AggressivenessOrder> {
    ensure_compatible(phi1, phi2)?;
    let sub = phi1.is_subset_of(phi2);
    let sup = phi2.is_subset_of(phi1);
    Ok(match (sub, sup) {
        (true, true) => AggressivenessOrder::Equal,
        (true, false) => AggressivenessOrder::More,
        (false, true) => AggressivenessOrder::Less,
        (false, false) => AggressivenessOrder::Incomparable,
    })
}

/// `Σ_{Φ' \ Φ} p / Σ_{Φ'} p`, requiring `Φ ⊆ Φ'`.
pub fn mass_ratio(phi_prime: &CoveringSet, phi: &CoveringSet, p: &MassFunction) -> Result<f64> {
    ensure_compatible(phi_prime, phi)?;
    if !phi.is_subset_of(phi_prime) {
        return Err(Error::NotSubset);
    }
    let mut extra = 0.0;
    let mut total = 0.0;
    for c in phi_prime.centroids() {
        let w = p.weight(c);
        if w < 0.0 || !w.is_finite() {
            return Err(Error::InvalidArgument("mass function returned a negative or non-finite weight".into()));
        }
        total += w;
        if !phi.has_centroid(c) {
            extra += w;
        }
    }
    if total == 0.0 {
        return if phi_prime.is_empty() {
            Ok(0.0)
        } else {
            Err(Error::InvalidArgument("mass function has zero total mass on the set".into()))
        };
    }
    Ok(extra / total)
}

// ---------------------------------------------------------------------------
// Pairwise comparison
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComparisonOutcome {
    /// The second tester produced a failure from the first tester's set.
    FalsifiedBy2,
    /// Every run of the second tester stayed inside the first tester's set.
    Contained,
    /// Runs escaped, but the escaped mass is below `ε`.
    ContainedWithSmallEscape,
    /// Decided by quantifying the second tester's safe set.
    FullQuantification,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AggressivenessVerdict {
    pub te1: String,
    pub te2: String,
    /// `te1` is almost as aggressive as or more aggressive than `te2`.
    pub agg: bool,
    pub outcome: ComparisonOutcome,
    /// Runs spent after the shared quantification of `te1`.
    pub runs_used: u64,
    pub validation_runs: u64,
    pub te2_quantify_runs: Option<u64>,
    pub te1_quantify_runs: u64,
    pub escape_mass_ratio: f64,
    pub escaped_states: usize,
    pub te1_centroids: usize,
    pub te2_centroids: Option<usize>,
    pub same_descriptor: bool,
    #[serde(skip)]
    pub failing_run: Option<RunRecord>,
}

#[derive(Clone, Debug)]
pub struct CompareParams {
    pub spec: ConfidenceSpec,
    pub delta: DeltaVector,
    pub horizon: usize,
    pub seed: u64,
    pub max_runs: u64,
    pub mass: MassFunction,
    pub quantify_options: QuantifyOptions,
}

impl CompareParams {
    /// Quantification parameters for the tester labelled `label`. The seed
    /// depends only on the master seed and the label, so a tester's set is
    /// the same whichever side of a comparison it appears on.
    pub fn quantify_params(&self, label: &str) -> QuantifyParams {
        QuantifyParams {
            spec: self.spec,
            delta: self.delta.clone(),
            horizon: self.horizon,
            seed: seed::substream(self.seed, &format!("compare/quantify/{label}")),
            max_runs: self.max_runs,
            options: self.quantify_options,
        }
    }

    fn validation_seed(&self, te1: &str, te2: &str) -> u64 {
        seed::substream(self.seed, &format!("compare/validate/{te1}/{te2}"))
    }
}

/// Runs simulated per parallel batch in the validation phase.
const BATCH: u64 = 64;

/// Pairwise comparisons over one system, memoizing quantified sets by
/// tester label.
pub struct Comparator<'a, M: SystemModel + ?Sized> {
    system: &'a M,
    params: CompareParams,
    cache: HashMap<String, QuantifyResult>,
}

impl<'a, M: SystemModel + ?Sized> Comparator<'a, M> {
    pub fn new(system: &'a M, params: CompareParams) -> Self {
        Comparator {
            system,
            params,
            cache: HashMap::new(),
        }
    }

    pub fn params(&self) -> &CompareParams {
        &self.params
    }

    /// The quantified safe set of `actor`, computed once per label.
    pub fn quantified(&mut self, actor: Actor<'_, M::State>) -> Result<&QuantifyResult> {
        let label = actor.label();
        if !self.cache.contains_key(&label) {
            let q = quantify(self.system, actor, &self.params.quantify_params(&label))?;
            if !q.converged {
                return Err(Error::NotConverged {
                    label,
                    runs: q.runs_total,
                });
            }
            self.cache.insert(label.clone(), q);
        }
        Ok(&self.cache[&label])
    }

    /// Decide whether `te1` is almost at least as aggressive as `te2`.
    pub fn compare(&mut self, te1: Actor<'_, M::State>, te2: Actor<'_, M::State>) -> Result<AggressivenessVerdict> {
        let (l1, l2) = (te1.label(), te2.label());
        let q1 = self.quantified(te1)?;
        let phi1 = q1.cover.clone();
        let te1_quantify_runs = q1.runs_total;
        let mut verdict = AggressivenessVerdict {
            te1: l1.clone(),
            te2: l2.clone(),
            agg: true,
            outcome: ComparisonOutcome::Contained,
            runs_used: 0,
            validation_runs: 0,
            te2_quantify_runs: None,
            te1_quantify_runs,
            escape_mass_ratio: 0.0,
            escaped_states: 0,
            te1_centroids: phi1.len(),
            te2_centroids: None,
            same_descriptor: l1 == l2,
            failing_run: None,
        };
        if phi1.is_empty() {
            // Nothing to contain: vacuously at least as aggressive.
            return Ok(verdict);
        }

        let n = self.params.spec.min_samples()?;
        let sampler = self.params.mass.sampler(phi1.centroids())?;
        let vseed = self.params.validation_seed(&l1, &l2);
        let pick_seed = seed::substream(vseed, "initial");
        let run_seed = seed::substream(vseed, "run");
        let mut phi2 = phi1.clone();
        let system = self.system;
        let horizon = self.params.horizon;

        let mut start = 0;
        'batches: while start < n {
            let end = (start + BATCH).min(n);
            let runs: Vec<Result<RunRecord>> = (start..end)
                .into_par_iter()
                .map(|i| {
                    let mut rng = seed::rng(seed::derive(pick_seed, i));
                    let s0 = &phi1.centroids()[sampler.sample(&mut rng)];
                    te2.run(system, s0, horizon, seed::derive(run_seed, i))
                })
                .collect();
            for run in runs {
                let run = run?;
                verdict.validation_runs += 1;
                if run.hit_failure {
                    verdict.agg = false;
                    verdict.outcome = ComparisonOutcome::FalsifiedBy2;
                    verdict.failing_run = Some(run);
                    break 'batches;
                }
                for s in &run.states {
                    if !phi2.covers(s) {
                        phi2.push(s.clone())?;
                        verdict.escaped_states += 1;
                    }
                }
            }
            start = end;
        }
        verdict.runs_used = verdict.validation_runs;
        verdict.escape_mass_ratio = mass_ratio(&phi2, &phi1, &self.params.mass)?;
        if verdict.outcome == ComparisonOutcome::FalsifiedBy2 {
            return Ok(verdict);
        }
        if verdict.escape_mass_ratio < self.params.spec.epsilon() {
            verdict.outcome = if verdict.escaped_states == 0 {
                ComparisonOutcome::Contained
            } else {
                ComparisonOutcome::ContainedWithSmallEscape
            };
            return Ok(verdict);
        }

        let q2 = self.quantified(te2)?;
        verdict.outcome = ComparisonOutcome::FullQuantification;
        verdict.te2_quantify_runs = Some(q2.runs_total);
        verdict.te2_centroids = Some(q2.cover.len());
        verdict.runs_used += q2.runs_total;
        verdict.agg = phi1.is_subset_of(&q2.cover);
        Ok(verdict)
    }
}

/// One-shot comparison of two testers.
pub fn compare_algorithms<M>(
    system: &M,
    te1: Actor<'_, M::State>,
    te2: Actor<'_, M::State>,
    params: CompareParams,
) -> Result<AggressivenessVerdict>
where
    M: SystemModel + ?Sized,
{
    Comparator::new(system, params).compare(te1, te2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::build_covering;
    use crate::engine::{Dim, SpaceBox, StateVector};
    use crate::stats::min_samples;
    use crate::toy::{ConstantPolicy, ThresholdPolicy, ToyDynamics, ToySystem};

    fn grid(n: usize) -> CoveringSet {
        let space = SpaceBox::new(vec![Dim::continuous("x", "", 0.0, 2.0 * n as f64)]).unwrap();
        build_covering(&space, &DeltaVector::new(vec![1.0]).unwrap()).unwrap()
    }

    fn pick(all: &CoveringSet, idx: &[usize]) -> CoveringSet {
        all.retain(|i, _| idx.contains(&i))
    }

    #[test]
    fn iou_examples() {
        let all = grid(10);
        let a = pick(&all, &[0, 1, 2]);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&a, &pick(&all, &[5, 6])).unwrap(), 0.0);
        assert_eq!(iou(&pick(&all, &[]), &pick(&all, &[])).unwrap(), 1.0);
        assert!((iou(&a, &pick(&all, &[1, 2, 3])).unwrap() - 0.5).abs() < 1e-12);
        assert!(iou(&a, &grid(3)).is_err());
    }

    #[test]
    fn diff_fraction_examples() {
        let all = grid(45);
        let a = pick(&all, &[0, 1, 2, 10, 11]);
        let b = pick(&all, &[10, 11, 12]);
        assert_eq!(diff_fraction(&b.retain(|i, _| i < 2), &b, &all).unwrap(), 0.0);
        assert_eq!(diff_fraction(&all, &pick(&all, &[]), &all).unwrap(), 1.0);
        assert!((diff_fraction(&a, &b, &all).unwrap() - 3.0 / 45.0).abs() < 1e-12);
    }

    #[test]
    fn order_examples() {
        let all = grid(10);
        let small = pick(&all, &[1, 2]);
        let big = pick(&all, &[1, 2, 3]);
        let other = pick(&all, &[3, 4, 5, 6]);
        assert_eq!(aggressiveness_order(&small, &small).unwrap(), AggressivenessOrder::Equal);
        assert_eq!(aggressiveness_order(&small, &big).unwrap(), AggressivenessOrder::More);
        assert_eq!(aggressiveness_order(&big, &small).unwrap(), AggressivenessOrder::Less);
        // Smaller set, yet not comparable.
        assert_eq!(aggressiveness_order(&small, &other).unwrap(), AggressivenessOrder::Incomparable);
    }

    #[test]
    fn mass_ratio_examples() {
        let all = grid(10);
        let phi = pick(&all, &[0, 1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(mass_ratio(&phi, &phi, &MassFunction::Uniform).unwrap(), 0.0);
        assert!((mass_ratio(&all, &phi, &MassFunction::Uniform).unwrap() - 0.1).abs() < 1e-12);
        let heavy = MassFunction::weighted(|s: &StateVector| if s.0[0] < 18.0 { 5.0 } else { 1.0 });
        let r = mass_ratio(&all, &phi, &heavy).unwrap();
        assert!((r - 1.0 / 46.0).abs() < 1e-12);
        assert!(mass_ratio(&phi, &all, &MassFunction::Uniform).is_err());
    }

    fn toy_params() -> CompareParams {
        CompareParams {
            spec: ConfidenceSpec::new(0.1, 0.01).unwrap(),
            delta: DeltaVector::new(vec![0.5]).unwrap(),
            horizon: 8,
            seed: 5,
            max_runs: 100_000,
            mass: MassFunction::Uniform,
            quantify_options: QuantifyOptions::default(),
        }
    }

    fn threshold(name: &str, u_low: f64, u_high: f64) -> ThresholdPolicy {
        ThresholdPolicy {
            threshold: 5.0,
            u_low,
            u_high,
            name: name.into(),
        }
    }

    #[test]
    fn same_policy_is_contained() {
        // Below 5 the tester drives the state into failure, above it holds.
        let sys = ToySystem::new(ToyDynamics::Shift, 0.0, 10.0, |x| x < 0.0);
        let te = threshold("sink", -1.0, 0.0);
        let v = compare_algorithms(&sys, Actor::Policy(&te), Actor::Policy(&te), toy_params()).unwrap();
        assert!(v.agg);
        assert!(v.same_descriptor);
        assert_eq!(v.te1_centroids, 5);
        assert_eq!(v.outcome, ComparisonOutcome::Contained);
        assert_eq!(v.runs_used, min_samples(0.1, 0.01).unwrap());
    }

    #[test]
    fn weaker_tester_is_falsified_by_stronger_one() {
        // s' = s + (s - 4)/2 + u has an unstable fixed point at 4 - 2u, so
        // the slow push keeps {4.5, ..., 9.5} and the fast one {8.5, 9.5}.
        let sys = ToySystem::new(ToyDynamics::Repel { pivot: 4.0, gain: 0.5 }, 0.0, 10.0, |x| x < 0.0);
        let slow = ConstantPolicy::named(-0.25, "slow");
        let fast = ConstantPolicy::named(-2.0, "fast");
        let v = compare_algorithms(&sys, Actor::Policy(&slow), Actor::Policy(&fast), toy_params()).unwrap();
        assert_eq!(v.te1_centroids, 6);
        assert!(!v.agg);
        assert_eq!(v.outcome, ComparisonOutcome::FalsifiedBy2);
        assert!(v.failing_run.unwrap().hit_failure);
        let r = compare_algorithms(&sys, Actor::Policy(&fast), Actor::Policy(&slow), toy_params()).unwrap();
        assert_eq!(r.te1_centroids, 2);
        assert!(r.agg, "{r:?}");
        assert_eq!(r.outcome, ComparisonOutcome::Contained);
    }

    #[test]
    fn large_escape_falls_back_to_quantification() {
        // te2 oscillates around 5, leaving te1's set {5.5, ..., 9.5} for 4.5
        // without ever failing.
        let sys = ToySystem::new(ToyDynamics::Shift, 0.0, 10.0, |x| x < 0.0);
        let sink = threshold("sink", -1.0, 0.0);
        let wobble = threshold("wobble", 1.0, -1.0);
        let v = compare_algorithms(&sys, Actor::Policy(&sink), Actor::Policy(&wobble), toy_params()).unwrap();
        assert_eq!(v.outcome, ComparisonOutcome::FullQuantification, "{v:?}");
        assert!((v.escape_mass_ratio - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(v.te2_centroids, Some(10));
        assert!(v.agg);
        assert_eq!(v.runs_used, v.validation_runs + v.te2_quantify_runs.unwrap());
    }
}
