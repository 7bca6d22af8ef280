//! Subject vehicle controllers: IDM car following and MOBIL lane changes.

use super::params::{IdmParams, VehicleParams};
use super::world::{Subject, Vehicle, VehicleWorld};

/// A leading car as seen by the follower.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lead {
    pub v: f64,
    /// Bumper-to-bumper gap.
    pub gap: f64,
}

/// IDM acceleration, clamped to `[a_min, a_max]`. A non-positive gap gives
/// maximum braking.
pub fn idm_accel(v: f64, lead: Option<Lead>, idm: &IdmParams, a_min: f64, a_max: f64) -> f64 {
    let free = 1.0 - (v / idm.v_des).powf(idm.exponent);
    let a = match lead {
        None => idm.a_max * free,
        Some(l) if l.gap <= 0.0 => return a_min,
        Some(l) => {
            let dv = v - l.v;
            let dynamic = v * idm.t_headway + v * dv / (2.0 * (idm.a_max * idm.b).sqrt());
            let s_star = idm.s0 + dynamic.max(0.0);
            idm.a_max * (free - (s_star / l.gap).powi(2))
        }
    };
    a.clamp(a_min, a_max)
}

fn idm(v: f64, lead: Option<Lead>, params: &VehicleParams) -> f64 {
    idm_accel(v, lead, &params.idm, params.a_min, params.a_max)
}

/// `other` as a leader of `car` if it is ahead and already in `lane`.
fn lead_in(car: &Vehicle, other: &Vehicle, lane: usize, params: &VehicleParams) -> Option<Lead> {
    (other.x >= car.x && other.lane(params) == lane).then(|| Lead {
        v: other.v,
        gap: other.x - car.x - params.length,
    })
}

/// `other` as a follower of `car` if it is behind and already in `lane`.
fn follower_in(car: &Vehicle, other: &Vehicle, lane: usize, params: &VehicleParams) -> Option<Lead> {
    (other.x < car.x && other.lane(params) == lane).then(|| Lead {
        v: car.v,
        gap: car.x - other.x - params.length,
    })
}

/// Lane decision for the subject vehicle.
///
/// A neighbouring lane is chosen when the new follower would not have to
/// brake harder than `b_safe`, the subject itself would not either, and the
/// politeness-weighted acceleration gain exceeds the threshold. No new change
/// is started before the previous one has settled, and decisions are only
/// taken every `decision_period` steps.
pub fn mobil_decision(world: &VehicleWorld, params: &VehicleParams) -> usize {
    let sv = &world.sv;
    let pov = &world.pov;
    let period = params.mobil.decision_period.max(1);
    if !sv.settled(params) || world.steps % period != world.decision_phase % period {
        return sv.target;
    }
    let current = sv.target;
    let m = &params.mobil;
    let a_here = idm(sv.v, lead_in(sv, pov, current, params), params);
    let pov_free = idm(pov.v, None, params);

    // The adversary's gain when the subject leaves its lane from in front of it.
    let old_follower_gain = match follower_in(sv, pov, current, params) {
        Some(l) => pov_free - idm(pov.v, Some(l), params),
        _ => 0.0,
    };

    let mut best: Option<(usize, f64)> = None;
    let candidates = [current.checked_sub(1), Some(current + 1).filter(|&l| l < params.lanes)];
    for lane in candidates.into_iter().flatten() {
        let a_there = idm(sv.v, lead_in(sv, pov, lane, params), params);
        if a_there < -m.b_safe {
            continue;
        }
        let new_follower_gain = match follower_in(sv, pov, lane, params) {
            Some(l) => {
                let after = idm(pov.v, Some(l), params);
                if after < -m.b_safe {
                    continue;
                }
                after - pov_free
            }
            None => 0.0,
        };
        let incentive = a_there - a_here + m.politeness * (new_follower_gain + old_follower_gain);
        if incentive > m.threshold && best.map_or(true, |(_, b)| incentive > b) {
            best = Some((lane, incentive));
        }
    }
    best.map_or(current, |(lane, _)| lane)
}

/// `(a0, lane0)` chosen by the subject controller.
pub fn subject_act(world: &VehicleWorld, params: &VehicleParams) -> (f64, usize) {
    let lane = match world.subject {
        Subject::Idm => world.sv.target,
        Subject::IdmMobil => mobil_decision(world, params),
    };
    let sv = &world.sv;
    let pov = &world.pov;
    let lead = [sv.lane(params), lane]
        .into_iter()
        .filter_map(|l| lead_in(sv, pov, l, params))
        .next();
    (idm(sv.v, lead, params), lane)
}
