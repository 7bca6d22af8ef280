//! Sample-size arithmetic and statistical validation of almost safe sets.

use std::fmt;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::{CoveringSet, DeltaVector};
use crate::engine::{Actor, OssSpec, RunRecord, StateVector, SystemModel};
use crate::error::{Error, Result};
use crate::seed::{self, RunRng};

/// Admissible escape probability `ε` and confidence parameter `β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ConfidenceSpec {
    epsilon: f64,
    beta: f64,
}

#[derive(Deserialize)]
struct RawSpec {
    epsilon: f64,
    beta: f64,
}

impl TryFrom<RawSpec> for ConfidenceSpec {
    type Error = Error;

    fn try_from(r: RawSpec) -> Result<Self> {
        ConfidenceSpec::new(r.epsilon, r.beta)
    }
}

fn check_unit(name: &'static str, value: f64, allow_one: bool) -> Result<()> {
    let ok = value > 0.0 && (value < 1.0 || (allow_one && value == 1.0));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidProbability {
            name,
            value,
            range: if allow_one { "(0, 1]" } else { "(0, 1)" },
        })
    }
}

impl ConfidenceSpec {
    pub fn new(epsilon: f64, beta: f64) -> Result<Self> {
        check_unit("epsilon", epsilon, true)?;
        check_unit("beta", beta, true)?;
        Ok(ConfidenceSpec { epsilon, beta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn min_samples(&self) -> Result<u64> {
        min_samples(self.epsilon, self.beta)
    }
}

/// Smallest `N` with `(1 - ε)^N <= β`.
pub fn min_samples(epsilon: f64, beta: f64) -> Result<u64> {
    check_unit("epsilon", epsilon, false)?;
    check_unit("beta", beta, false)?;
    let ratio = beta.ln() / (-epsilon).ln_1p();
    // Shave off rounding noise so exact integer ratios are not bumped up.
    let n = (ratio - ratio * 1e-12).ceil().max(1.0);
    Ok(n as u64)
}

/// `ε_m = 1 - exp(ln β / m)`, the escape bound certified by `m` clean runs.
pub fn epsilon_from_samples(m: u64, beta: f64) -> Result<f64> {
    if m < 1 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    check_unit("beta", beta, false)?;
    Ok(-(beta.ln() / m as f64).exp_m1())
}

/// Weights of initial states over a finite centroid set.
#[derive(Clone, Default)]
pub enum MassFunction {
    #[default]
    Uniform,
    Weighted(Arc<dyn Fn(&StateVector) -> f64 + Send + Sync>),
}

impl fmt::Debug for MassFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MassFunction::Uniform => f.write_str("Uniform"),
            MassFunction::Weighted(_) => f.write_str("Weighted(..)"),
        }
    }
}

impl MassFunction {
    pub fn weighted(w: impl Fn(&StateVector) -> f64 + Send + Sync + 'static) -> Self {
        MassFunction::Weighted(Arc::new(w))
    }

    pub fn weight(&self, s: &StateVector) -> f64 {
        match self {
            MassFunction::Uniform => 1.0,
            MassFunction::Weighted(w) => w(s),
        }
    }

    /// Sampler over `centroids` with `p` restricted and renormalized to them.
    pub fn sampler(&self, centroids: &[StateVector]) -> Result<CentroidSampler> {
        if centroids.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        match self {
            MassFunction::Uniform => Ok(CentroidSampler::Uniform(centroids.len())),
            MassFunction::Weighted(w) => {
                let weights: Vec<f64> = centroids.iter().map(|c| w(c)).collect();
                if weights.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::InvalidArgument("mass function returned a negative or non-finite weight".into()));
                }
                WeightedIndex::new(&weights)
                    .map(CentroidSampler::Weighted)
                    .map_err(|e| Error::InvalidArgument(format!("mass function: {e}")))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum CentroidSampler {
    Uniform(usize),
    Weighted(WeightedIndex<f64>),
}

impl CentroidSampler {
    pub fn sample(&self, rng: &mut RunRng) -> usize {
        match self {
            CentroidSampler::Uniform(n) => rng.gen_range(0..*n),
            CentroidSampler::Weighted(w) => w.sample(rng),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMode {
    /// Testing actions come from a feedback policy.
    Policy,
    /// Testing actions are drawn from an admissible action set.
    Controlled,
}

/// A validated (or quantified) almost safe set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafeSetCertificate {
    pub cover: CoveringSet,
    pub spec: ConfidenceSpec,
    pub actor: String,
    pub system: String,
    pub mode: CertificateMode,
    pub horizon: usize,
    pub runs_used: u64,
    pub master_seed: u64,
}

impl SafeSetCertificate {
    pub fn delta(&self) -> &DeltaVector {
        self.cover.delta()
    }

    /// Run budget and failure-disjointness hold.
    pub fn is_consistent(&self, oss: &OssSpec) -> bool {
        self.spec
            .min_samples()
            .is_ok_and(|n| self.runs_used >= n)
            && check_disjoint(&self.cover, oss).is_ok()
    }
}

/// Reject covers with a centroid in the failure region.
pub fn check_disjoint(cover: &CoveringSet, oss: &OssSpec) -> Result<()> {
    match cover.centroids().iter().find(|c| oss.is_failure(c)) {
        Some(c) => Err(Error::CandidateInFailure(c.0.clone())),
        None => Ok(()),
    }
}

/// Index of the first recorded state that fails or leaves `cover`.
pub fn first_violation(run: &RunRecord, cover: &CoveringSet) -> Option<usize> {
    if let Some(t) = run.failure_step {
        if let Some(esc) = run.states[..t].iter().position(|s| !cover.covers(s)) {
            return Some(esc);
        }
        return Some(t);
    }
    run.states.iter().position(|s| !cover.covers(s))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ValidationOutcome {
    Certified(SafeSetCertificate),
    Falsified { run_index: u64, run: RunRecord },
}

impl ValidationOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, ValidationOutcome::Certified(_))
    }
}

/// Parameters shared by validation calls.
#[derive(Clone, Debug)]
pub struct ValidationParams {
    pub spec: ConfidenceSpec,
    pub horizon: usize,
    pub seed: u64,
    pub mass: MassFunction,
}

/// Draw `min_samples(ε, β)` runs from the candidate's centroids and certify
/// the candidate iff every run stays in `Φ_δ` and avoids `C`. Runs execute
/// in parallel; the reported violation is the one with the lowest run index.
pub fn validate_safe_set<M>(
    candidate: &CoveringSet,
    actor: Actor<'_, M::State>,
    system: &M,
    params: &ValidationParams,
) -> Result<ValidationOutcome>
where
    M: SystemModel + ?Sized,
{
    let oss = system.oss();
    if candidate.space() != &oss.space {
        return Err(Error::MismatchedCover);
    }
    check_disjoint(candidate, oss)?;
    let n = params.spec.min_samples()?;
    let sampler = params.mass.sampler(candidate.centroids())?;
    let pick_seed = seed::substream(params.seed, "validate/initial");
    let run_seed = seed::substream(params.seed, "validate/run");

    let violation = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Option<(u64, RunRecord)>> {
            let mut rng = seed::rng(seed::derive(pick_seed, i));
            let s0 = &candidate.centroids()[sampler.sample(&mut rng)];
            let run = actor.run(system, s0, params.horizon, seed::derive(run_seed, i))?;
            Ok(first_violation(&run, candidate).map(|_| (i, run)))
        })
        .find_first(|r| !matches!(r, Ok(None)));

    match violation {
        Some(Err(e)) => Err(e),
        Some(Ok(Some((run_index, run)))) => Ok(ValidationOutcome::Falsified { run_index, run }),
        _ => Ok(ValidationOutcome::Certified(SafeSetCertificate {
            cover: candidate.clone(),
            spec: params.spec,
            actor: actor.label(),
            system: system.label(),
            mode: if actor.is_controlled() {
                CertificateMode::Controlled
            } else {
                CertificateMode::Policy
            },
            horizon: params.horizon,
            runs_used: n,
            master_seed: params.seed,
        })),
    }
}
