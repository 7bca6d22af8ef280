//! Pairwise comparison verdicts.

use proptest::prelude::*;
use safeset_core::toy::{ConstantPolicy, ToyDynamics, ToySystem};
use safeset_core::vehicle::{adversary, AdversaryKind, VehicleParams, VehicleSystem};
use safeset_core::*;

fn toy_params(eps: f64, seed: u64) -> CompareParams {
    CompareParams {
        spec: ConfidenceSpec::new(eps, 0.01).unwrap(),
        delta: DeltaVector::new(vec![0.5]).unwrap(),
        horizon: 12,
        seed,
        max_runs: 200_000,
        mass: MassFunction::Uniform,
        quantify_options: QuantifyOptions::default(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn verdicts_are_consistent(u1 in -1.5..1.5f64, u2 in -1.5..1.5f64, pivot in 1.0..9.0f64, eps in 0.02..0.3f64, seed in any::<u64>()) {
        let sys = ToySystem::new(ToyDynamics::Repel { pivot, gain: 0.4 }, 0.0, 10.0, |x| x < 0.0);
        let te1 = ConstantPolicy::named(u1, "one");
        let te2 = ConstantPolicy::named(u2, "two");
        let params = toy_params(eps, seed);
        let n = params.spec.min_samples().unwrap();
        let mut c = Comparator::new(&sys, params);
        let v = c.compare(Actor::Policy(&te1), Actor::Policy(&te2)).unwrap();
        prop_assert!((0.0..=1.0).contains(&v.escape_mass_ratio));
        match v.outcome {
            ComparisonOutcome::FalsifiedBy2 => {
                prop_assert!(!v.agg);
                prop_assert!(v.failing_run.as_ref().is_some_and(|r| r.hit_failure));
                prop_assert!(v.validation_runs <= n);
            }
            ComparisonOutcome::Contained => {
                prop_assert_eq!(v.escape_mass_ratio, 0.0);
                prop_assert!(v.agg);
                // An empty te1 set is contained without any runs.
                prop_assert_eq!(v.runs_used, if v.te1_centroids == 0 { 0 } else { n });
            }
            ComparisonOutcome::ContainedWithSmallEscape => {
                prop_assert!(v.escape_mass_ratio > 0.0 && v.escape_mass_ratio < eps);
                prop_assert!(v.agg);
                prop_assert_eq!(v.runs_used, n);
            }
            ComparisonOutcome::FullQuantification => {
                prop_assert!(v.escape_mass_ratio >= eps);
                let phi1 = c.quantified(Actor::Policy(&te1)).unwrap().cover.clone();
                let phi2 = c.quantified(Actor::Policy(&te2)).unwrap().cover.clone();
                prop_assert_eq!(v.agg, phi1.is_subset_of(&phi2));
                prop_assert_eq!(v.runs_used, n + v.te2_quantify_runs.unwrap());
            }
        }
    }
}

#[test]
fn sets_do_not_depend_on_the_side_of_the_comparison() {
    let sys = ToySystem::new(ToyDynamics::Repel { pivot: 4.0, gain: 0.5 }, 0.0, 10.0, |x| x < 0.0);
    let a = ConstantPolicy::named(-0.25, "a");
    let b = ConstantPolicy::named(-1.0, "b");
    let mut first = Comparator::new(&sys, toy_params(0.1, 4));
    first.compare(Actor::Policy(&a), Actor::Policy(&b)).unwrap();
    let mut second = Comparator::new(&sys, toy_params(0.1, 4));
    second.compare(Actor::Policy(&b), Actor::Policy(&a)).unwrap();
    for p in [&a, &b] {
        let x = first.quantified(Actor::Policy(p)).unwrap().cover.clone();
        let y = second.quantified(Actor::Policy(p)).unwrap().cover.clone();
        assert_eq!(x, y);
    }
}

fn vehicle_params(seed: u64) -> CompareParams {
    CompareParams {
        spec: ConfidenceSpec::new(0.01, 1e-4).unwrap(),
        delta: DeltaVector::new(vec![10.0, 3.7, 5.0, 5.0]).unwrap(),
        horizon: 100,
        seed,
        max_runs: 1_000_000,
        mass: MassFunction::Uniform,
        quantify_options: QuantifyOptions::default(),
    }
}

#[test]
fn vehicle_self_comparison_is_contained() {
    let p = VehicleParams::default();
    let sys = VehicleSystem::mixed(p.clone()).unwrap();
    let brake = adversary(AdversaryKind::Brake, &p, None);
    let v = compare_algorithms(&sys, Actor::Policy(&brake), Actor::Policy(&brake), vehicle_params(3)).unwrap();
    assert!(v.agg);
    assert!(v.same_descriptor);
    assert_eq!(v.outcome, ComparisonOutcome::Contained);
    assert_eq!(v.validation_runs, 917);
}

#[test]
fn braking_is_at_least_as_aggressive_as_steady_driving() {
    let p = VehicleParams::default();
    let sys = VehicleSystem::mixed(p.clone()).unwrap();
    let brake = adversary(AdversaryKind::Brake, &p, None);
    let steady = adversary(AdversaryKind::Steady, &p, None);
    let v = compare_algorithms(&sys, Actor::Policy(&brake), Actor::Policy(&steady), vehicle_params(3)).unwrap();
    assert!(v.agg, "{v:?}");
}
