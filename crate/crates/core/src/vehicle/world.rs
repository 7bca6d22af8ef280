//! Two-vehicle point kinematics on a straight three-lane road.

use serde::{Deserialize, Serialize};

use super::params::VehicleParams;

/// One car. `x` is the rear-bumper position, `y` the lateral position of the
/// car's centre line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    /// Lateral velocity of the lane tracker.
    pub vy: f64,
    pub target: usize,
}

impl Vehicle {
    pub fn lane(&self, params: &VehicleParams) -> usize {
        params.lane_of(self.y)
    }

    /// Lanes the car currently occupies or is heading into.
    pub fn occupies(&self, lane: usize, params: &VehicleParams) -> bool {
        self.lane(params) == lane || self.target == lane
    }

    /// True once the car sits on its target lane centre.
    pub fn settled(&self, params: &VehicleParams) -> bool {
        (self.y - params.lane_center(self.target)).abs() < params.settle_tolerance && self.vy.abs() < params.settle_tolerance
    }
}

/// Which subject controller drives the subject vehicle for this run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    /// IDM car following only.
    Idm,
    /// IDM car following with MOBIL lane changes.
    IdmMobil,
}

impl Subject {
    pub fn label(&self) -> &'static str {
        match self {
            Subject::Idm => "idm",
            Subject::IdmMobil => "idm-mobil",
        }
    }

    pub fn parse(s: &str) -> Option<Subject> {
        match s {
            "idm" | "c" => Some(Subject::Idm),
            "idm-mobil" | "idm_mobil" | "a" => Some(Subject::IdmMobil),
            _ => None,
        }
    }
}

/// Full simulator state: subject vehicle (`sv`), the adversary's car (`pov`)
/// and bookkeeping used by the adversaries and the test suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleWorld {
    pub sv: Vehicle,
    pub pov: Vehicle,
    pub subject: Subject,
    /// Step offset of the subject's lane-change decisions.
    pub decision_phase: u32,
    pub collided: bool,
    pub steps: u32,
    /// The adversary started in the subject's lane.
    pub started_in_lane: bool,
    /// Completed adversary lane changes into the subject's lane.
    pub merges: u32,
    /// Headway `d_x` at the most recent completed merge.
    pub last_merge_dx: Option<f64>,
    /// Merges aborted or rejected by gap acceptance.
    pub rejected_merges: u32,
}

/// Relative coordinates seen by the testing machinery.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relative {
    pub dx: f64,
    pub dy: f64,
    pub v0: f64,
    pub v1: f64,
}

impl Relative {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.dx, self.dy, self.v0, self.v1]
    }
}

/// Shared collision predicate: bumper gap closed and lateral overlap of at
/// least half a car width.
pub fn is_collision(dx: f64, dy: f64, params: &VehicleParams) -> bool {
    dx <= 0.0 && dx >= -2.0 * params.length && dy.abs() <= params.width / 2.0
}

impl VehicleWorld {
    /// World for the relative state `(d_x, d_y, v0, v1)`: the subject starts
    /// at the origin of the middle lane and the adversary ahead of it.
    pub fn from_relative(rel: Relative, subject: Subject, params: &VehicleParams) -> Self {
        let y0 = params.lane_center(params.start_lane);
        let y1 = (y0 + rel.dy).clamp(params.y_min(), params.y_max());
        let sv = Vehicle {
            x: 0.0,
            y: y0,
            v: rel.v0.clamp(0.0, params.v_max),
            vy: 0.0,
            target: params.start_lane,
        };
        let pov_lane = params.lane_of(y1);
        let pov = Vehicle {
            x: rel.dx + params.length,
            y: y1,
            v: rel.v1.clamp(0.0, params.v_max),
            vy: 0.0,
            target: pov_lane,
        };
        VehicleWorld {
            sv,
            pov,
            subject,
            decision_phase: 0,
            collided: false,
            steps: 0,
            started_in_lane: pov_lane == params.start_lane,
            merges: 0,
            last_merge_dx: None,
            rejected_merges: 0,
        }
    }

    /// Uncapped bumper-to-bumper headway.
    pub fn gap(&self, params: &VehicleParams) -> f64 {
        self.pov.x - self.sv.x - params.length
    }

    pub fn relative(&self, params: &VehicleParams) -> Relative {
        Relative {
            dx: self.gap(params).min(params.dx_cap),
            dy: self.pov.y - self.sv.y,
            v0: self.sv.v,
            v1: self.pov.v,
        }
    }
}

/// Critically damped tracking of `target` from `(y, vy)` over `dt`, in
/// closed form.
pub fn lateral_track(y: f64, vy: f64, target: f64, omega: f64, dt: f64) -> (f64, f64) {
    let e0 = y - target;
    let b = vy + omega * e0;
    let decay = (-omega * dt).exp();
    let e = (e0 + b * dt) * decay;
    let ve = (vy - omega * b * dt) * decay;
    (target + e, ve)
}

fn longitudinal(v: &mut Vehicle, a: f64, params: &VehicleParams) {
    v.x += v.v * params.dt;
    v.v = (v.v + a * params.dt).clamp(0.0, params.v_max);
}

fn lateral(v: &mut Vehicle, params: &VehicleParams) {
    let (y, vy) = lateral_track(v.y, v.vy, params.lane_center(v.target), params.lateral_omega, params.dt);
    v.y = y.clamp(params.y_min(), params.y_max());
    v.vy = vy;
}

/// Headway predicted one step ahead under the given accelerations.
fn predicted_gap(world: &VehicleWorld, a0: f64, a1: f64, params: &VehicleParams) -> f64 {
    let mut sv = world.sv;
    let mut pov = world.pov;
    longitudinal(&mut sv, a0, params);
    longitudinal(&mut pov, a1, params);
    pov.x - sv.x - params.length
}

/// Advance the world by one period.
///
/// Accelerations are clamped to the actuator range and lane indices to the
/// road. An adversary lane change into the subject's lane is refused (or
/// aborted mid-manoeuvre) unless the current and the predicted headway both
/// exceed the gap-acceptance distance; a merge can therefore never complete
/// with `d_x` at or below it.
pub fn world_step(world: &VehicleWorld, a0: f64, lane0: usize, a1: f64, lane1: usize, params: &VehicleParams) -> VehicleWorld {
    let mut next = world.clone();
    let a0 = a0.clamp(params.a_min, params.a_max);
    let a1 = a1.clamp(params.a_min, params.a_max);
    let last_lane = params.lanes - 1;
    next.sv.target = lane0.min(last_lane);
    next.pov.target = lane1.min(last_lane);

    let sv_lane = world.sv.lane(params);
    let pov_lane = world.pov.lane(params);
    let entering = next.pov.target == sv_lane && pov_lane != sv_lane;
    if entering {
        let gap_now = world.gap(params);
        let gap_next = predicted_gap(world, a0, a1, params);
        if gap_now <= params.gap_acceptance || gap_next <= params.gap_acceptance {
            next.pov.target = pov_lane;
            next.rejected_merges += 1;
        }
    }

    longitudinal(&mut next.sv, a0, params);
    longitudinal(&mut next.pov, a1, params);
    lateral(&mut next.sv, params);
    lateral(&mut next.pov, params);

    // Merge completion: the adversary's centre crosses into the lane the
    // subject occupied at the start of the step.
    if pov_lane != sv_lane && next.pov.lane(params) == sv_lane {
        let gap = next.gap(params);
        if gap <= params.gap_acceptance {
            // Momentum would carry it over the line: stop on the boundary.
            let boundary = params.lane_boundary(pov_lane, sv_lane);
            let side = if pov_lane < sv_lane { -1.0 } else { 1.0 };
            next.pov.y = boundary + side * 1e-6;
            next.pov.vy = 0.0;
            next.pov.target = pov_lane;
            next.rejected_merges += 1;
        } else {
            next.merges += 1;
            next.last_merge_dx = Some(gap);
        }
    }

    next.steps += 1;
    let rel = next.relative(params);
    if is_collision(rel.dx, rel.dy, params) {
        next.collided = true;
    }
    next
}
