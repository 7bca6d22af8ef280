//! Testing policies that drive the adversary's car.

use serde::{Deserialize, Serialize};

use super::driver::idm_accel;
use super::net::Mlp;
use super::params::{IdmParams, TtcFormula, VehicleParams};
use super::world::{lateral_track, Vehicle, VehicleWorld};
use crate::engine::{ActionVector, PolicyModel, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    /// Keeps its initial speed and lane.
    Steady,
    /// Brakes to a stop in its lane.
    Brake,
    /// Gets beside the subject, waits for a short time to collision, cuts in
    /// and brakes.
    Hybrid,
    /// Greedy one-second look-ahead that minimises the distance to the
    /// subject.
    Predictive,
    /// Small network trained by evolution strategies.
    Learned,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 5] = [
        AdversaryKind::Steady,
        AdversaryKind::Brake,
        AdversaryKind::Hybrid,
        AdversaryKind::Predictive,
        AdversaryKind::Learned,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            AdversaryKind::Steady => "steady",
            AdversaryKind::Brake => "brake",
            AdversaryKind::Hybrid => "hybrid",
            AdversaryKind::Predictive => "predictive",
            AdversaryKind::Learned => "learned",
        }
    }

    pub fn parse(s: &str) -> Option<AdversaryKind> {
        AdversaryKind::ALL.into_iter().find(|k| k.label() == s)
    }
}

/// Lateral mode chosen by the learned policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LateralMode {
    Keep,
    Left,
    Right,
}

#[derive(Clone, Debug)]
pub struct Adversary {
    pub kind: AdversaryKind,
    pub params: VehicleParams,
    pub net: Option<Mlp>,
}

impl Adversary {
    /// A rule-based adversary. Use [`Adversary::learned`] for the network.
    pub fn new(kind: AdversaryKind, params: VehicleParams) -> Self {
        assert!(kind != AdversaryKind::Learned, "the learned adversary needs weights");
        Adversary { kind, params, net: None }
    }

    pub fn learned(net: Mlp, params: VehicleParams) -> Self {
        Adversary {
            kind: AdversaryKind::Learned,
            params,
            net: Some(net),
        }
    }

    /// `(a1, lane1)` for the current world.
    pub fn decide(&self, world: &VehicleWorld) -> (f64, usize) {
        let p = &self.params;
        match self.kind {
            AdversaryKind::Steady => (0.0, world.pov.target),
            AdversaryKind::Brake => (p.brake, world.pov.target),
            AdversaryKind::Hybrid => hybrid(world, p),
            AdversaryKind::Predictive => predictive(world, p),
            AdversaryKind::Learned => learned(self.net.as_ref().expect("learned adversary without weights"), world, p),
        }
    }
}

impl PolicyModel<VehicleWorld> for Adversary {
    fn label(&self) -> String {
        self.kind.label().into()
    }

    fn act(&self, state: &VehicleWorld, _observed: &StateVector) -> ActionVector {
        let (a, lane) = self.decide(state);
        ActionVector(vec![a, lane as f64])
    }
}

/// Time to collision as seen by the hybrid policy; infinite when not closing.
pub fn time_to_collision(world: &VehicleWorld, params: &VehicleParams) -> f64 {
    let rel = world.relative(params);
    let closing = rel.v0 - rel.v1;
    if closing <= 0.0 {
        return f64::INFINITY;
    }
    match params.hybrid.ttc_formula {
        TtcFormula::Longitudinal => rel.dx / closing,
        TtcFormula::Lateral => rel.dy.abs() / closing,
    }
}

/// Speed regulation that steers the time to collision towards its target.
fn regulate(world: &VehicleWorld, params: &VehicleParams) -> f64 {
    let h = &params.hybrid;
    let gap = world.gap(params);
    if gap < params.gap_acceptance {
        return params.a_max;
    }
    let wanted = world.sv.v - gap.min(params.dx_cap) / h.ttc_target;
    (h.gain * (wanted - world.pov.v)).clamp(params.a_min, params.a_max)
}

fn hybrid(world: &VehicleWorld, params: &VehicleParams) -> (f64, usize) {
    let sv_lane = world.sv.lane(params);
    let pov = &world.pov;
    let pov_lane = pov.lane(params);
    if world.started_in_lane || world.merges > 0 || pov_lane == sv_lane {
        return (params.brake, pov.target);
    }
    let a = regulate(world, params);
    if pov.target == sv_lane {
        // Cut-in under way.
        return (a, sv_lane);
    }
    let beside = pov_lane.abs_diff(sv_lane) == 1;
    if !beside {
        let toward = if pov_lane > sv_lane { sv_lane + 1 } else { sv_lane - 1 };
        return (a, toward);
    }
    if !pov.settled(params) {
        return (a, pov.target);
    }
    let h = &params.hybrid;
    let tau = time_to_collision(world, params);
    let window = tau >= h.ttc_min && tau <= h.ttc_max;
    if window && world.gap(params) >= params.gap_acceptance {
        (a, sv_lane)
    } else {
        (a, pov.target)
    }
}

/// Lanes the adversary may target from its current state.
fn lane_options(pov: &Vehicle, params: &VehicleParams) -> Vec<usize> {
    if !pov.settled(params) {
        return vec![pov.target];
    }
    let mut lanes = vec![pov.target];
    if pov.target + 1 < params.lanes {
        lanes.push(pov.target + 1);
    }
    if pov.target > 0 {
        lanes.push(pov.target - 1);
    }
    lanes
}

fn predictive(world: &VehicleWorld, params: &VehicleParams) -> (f64, usize) {
    let pr = &params.predictive;
    let sv = &world.sv;
    let sv_lane = sv.lane(params);
    let steps = (pr.horizon / params.dt).round().max(1.0) as usize;
    let t = steps as f64 * params.dt;
    let sv_x = sv.x + sv.v * t;
    let sv_y = (sv.y + sv.vy * t).clamp(params.y_min(), params.y_max());

    let mut best = (f64::INFINITY, pr.accels[0], world.pov.target);
    for lane in lane_options(&world.pov, params) {
        let entering = lane == sv_lane && world.pov.lane(params) != sv_lane;
        if entering && world.gap(params) <= params.gap_acceptance {
            continue;
        }
        for &a in &pr.accels {
            let mut pov = world.pov;
            pov.target = lane;
            let a = a.clamp(params.a_min, params.a_max);
            for _ in 0..steps {
                pov.x += pov.v * params.dt;
                pov.v = (pov.v + a * params.dt).clamp(0.0, params.v_max);
                let (y, vy) = lateral_track(pov.y, pov.vy, params.lane_center(lane), params.lateral_omega, params.dt);
                pov.y = y;
                pov.vy = vy;
            }
            let dx = pov.x - sv_x - params.length;
            let dy = pov.y - sv_y;
            let d = dx.hypot(dy);
            if d < best.0 {
                best = (d, a, lane);
            }
        }
    }
    (best.1, best.2)
}

/// Desired speed and lateral mode from the network outputs.
pub fn decode_outputs(out: &[f64], v_max: f64) -> (f64, LateralMode) {
    let v_des = v_max / (1.0 + (-out[0]).exp());
    let lateral = &out[1..4];
    let mut arg = 0;
    for i in 1..3 {
        if lateral[i] > lateral[arg] {
            arg = i;
        }
    }
    let mode = match arg {
        0 => LateralMode::Keep,
        1 => LateralMode::Left,
        _ => LateralMode::Right,
    };
    (v_des, mode)
}

fn learned(net: &Mlp, world: &VehicleWorld, params: &VehicleParams) -> (f64, usize) {
    let rel = world.relative(params);
    let out = net.forward(&rel.to_vec());
    let (v_des, mode) = decode_outputs(&out, params.v_max);
    let idm = IdmParams {
        v_des: v_des.max(0.1),
        ..params.idm
    };
    let a = idm_accel(world.pov.v, None, &idm, params.a_min, params.a_max);
    let pov = &world.pov;
    let lane = if !pov.settled(params) {
        pov.target
    } else {
        match mode {
            LateralMode::Keep => pov.target,
            LateralMode::Left => (pov.target + 1).min(params.lanes - 1),
            LateralMode::Right => pov.target.saturating_sub(1),
        }
    };
    (a, lane)
}
