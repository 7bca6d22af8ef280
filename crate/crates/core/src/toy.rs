//! One-dimensional toy systems with hand-checkable behaviour.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{ActionVector, Dim, OssSpec, PolicyModel, SpaceBox, StateVector, SystemModel};
use crate::seed::RunRng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ToyDynamics {
    /// `s' = s`
    Identity,
    /// `s' = s + u`
    Shift,
    /// `s' = s - rate + u`
    Drift { rate: f64 },
    /// `s' = s + gain (s - pivot) + u`: states drift away from `pivot`.
    Repel { pivot: f64, gain: f64 },
    /// `s' = s + u`, except that with probability `p` per run the first
    /// step jumps to `to`.
    Jump { p: f64, to: f64 },
}

/// Underlying toy state: the position and the per-run jump draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToyState {
    pub x: f64,
    pub jump: bool,
    pub steps: usize,
}

#[derive(Clone)]
pub struct ToySystem {
    pub dynamics: ToyDynamics,
    oss: OssSpec,
}

impl fmt::Debug for ToySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ToySystem")
            .field("dynamics", &self.dynamics)
            .field("oss", &self.oss)
            .finish()
    }
}

impl ToySystem {
    /// Toy on `O = [lower, upper]` with failure region `{x : failure(x)}`.
    pub fn new(dynamics: ToyDynamics, lower: f64, upper: f64, failure: impl Fn(f64) -> bool + Send + Sync + 'static) -> Self {
        let space = SpaceBox::new(vec![Dim::continuous("x", "", lower, upper)]).expect("valid toy interval");
        let failure = Arc::new(failure);
        let oss = OssSpec::new(space, move |s: &StateVector| failure(s.0[0])).expect("valid toy space");
        ToySystem { dynamics, oss }
    }

    pub fn next_x(&self, x: f64, u: f64, state: &ToyState) -> f64 {
        match self.dynamics {
            ToyDynamics::Identity => x,
            ToyDynamics::Shift => x + u,
            ToyDynamics::Drift { rate } => x - rate + u,
            ToyDynamics::Repel { pivot, gain } => x + gain * (x - pivot) + u,
            ToyDynamics::Jump { to, .. } => {
                if state.jump && state.steps == 0 {
                    to
                } else {
                    x + u
                }
            }
        }
    }
}

impl SystemModel for ToySystem {
    type State = ToyState;

    fn label(&self) -> String {
        match self.dynamics {
            ToyDynamics::Identity => "toy-identity".into(),
            ToyDynamics::Shift => "toy-shift".into(),
            ToyDynamics::Drift { rate } => format!("toy-drift({rate})"),
            ToyDynamics::Repel { pivot, gain } => format!("toy-repel({pivot},{gain})"),
            ToyDynamics::Jump { p, to } => format!("toy-jump({p},{to})"),
        }
    }

    fn oss(&self) -> &OssSpec {
        &self.oss
    }

    fn init(&self, s0: &StateVector, rng: &mut RunRng) -> ToyState {
        let jump = match self.dynamics {
            ToyDynamics::Jump { p, .. } => rng.gen_bool(p.clamp(0.0, 1.0)),
            _ => false,
        };
        ToyState {
            x: s0.0[0],
            jump,
            steps: 0,
        }
    }

    fn step(&self, state: &ToyState, action: &ActionVector, _rng: &mut RunRng) -> ToyState {
        let u = action.0.first().copied().unwrap_or(0.0);
        ToyState {
            x: self.next_x(state.x, u, state),
            jump: state.jump,
            steps: state.steps + 1,
        }
    }

    fn observe(&self, state: &ToyState) -> StateVector {
        StateVector(vec![state.x])
    }
}

/// Always plays the same scalar action.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantPolicy {
    pub u: f64,
    pub name: String,
}

impl ConstantPolicy {
    pub fn new(u: f64) -> Self {
        ConstantPolicy {
            u,
            name: format!("constant({u})"),
        }
    }

    pub fn named(u: f64, name: &str) -> Self {
        ConstantPolicy { u, name: name.into() }
    }
}

impl<S> PolicyModel<S> for ConstantPolicy {
    fn label(&self) -> String {
        self.name.clone()
    }

    fn act(&self, _state: &S, _observed: &StateVector) -> ActionVector {
        ActionVector(vec![self.u])
    }
}

/// Plays `u_low` at or below `threshold` and `u_high` above it.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdPolicy {
    pub threshold: f64,
    pub u_low: f64,
    pub u_high: f64,
    pub name: String,
}

impl<S> PolicyModel<S> for ThresholdPolicy {
    fn label(&self) -> String {
        self.name.clone()
    }

    fn act(&self, _state: &S, observed: &StateVector) -> ActionVector {
        let u = if observed.0[0] <= self.threshold { self.u_low } else { self.u_high };
        ActionVector(vec![u])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{execute_run, ActionSource};

    #[test]
    fn repel_diverges_from_pivot() {
        let sys = ToySystem::new(ToyDynamics::Repel { pivot: 4.0, gain: 0.5 }, 0.0, 10.0, |x| x < 0.0);
        let hold = ConstantPolicy::new(0.0);
        let below = execute_run(&sys, ActionSource::Policy(&hold), &StateVector::new(vec![3.5]), 10, 0).unwrap();
        assert!(below.hit_failure);
        let above = execute_run(&sys, ActionSource::Policy(&hold), &StateVector::new(vec![4.5]), 10, 0).unwrap();
        assert!(!above.hit_failure);
        // 4.5 -> 4.75 -> 5.125
        assert_eq!(above.states[0].0[0], 4.75);
        assert_eq!(above.states[1].0[0], 5.125);
    }

    #[test]
    fn jump_frequency_matches_probability() {
        let sys = ToySystem::new(ToyDynamics::Jump { p: 0.3, to: 9.0 }, 0.0, 10.0, |x| x < 0.0);
        let hold = ConstantPolicy::new(0.0);
        let jumps = (0..2000)
            .filter(|&i| {
                let r = execute_run(&sys, ActionSource::Policy(&hold), &StateVector::new(vec![1.0]), 2, i).unwrap();
                r.states[0].0[0] == 9.0
            })
            .count();
        let rate = jumps as f64 / 2000.0;
        assert!((rate - 0.3).abs() < 0.04, "rate {rate}");
    }
}
