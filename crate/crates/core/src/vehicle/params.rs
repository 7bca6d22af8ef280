use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdmParams {
    pub v_des: f64,
    pub a_max: f64,
    /// Comfortable deceleration.
    pub b: f64,
    /// Jam distance.
    pub s0: f64,
    /// Time headway.
    pub t_headway: f64,
    pub exponent: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        IdmParams {
            v_des: 25.0,
            a_max: 3.0,
            b: 5.0,
            s0: 2.0,
            t_headway: 1.5,
            exponent: 4.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilParams {
    pub politeness: f64,
    pub b_safe: f64,
    pub threshold: f64,
    /// Steps between lane-change decisions.
    pub decision_period: u32,
}

impl Default for MobilParams {
    fn default() -> Self {
        MobilParams {
            politeness: 0.3,
            b_safe: 5.0,
            threshold: 0.2,
            decision_period: 10,
        }
    }
}

/// How the hybrid adversary measures time to collision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TtcFormula {
    /// `d_x / (v0 - v1)`
    Longitudinal,
    /// `d_y / (v0 - v1)`
    Lateral,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridParams {
    pub ttc_min: f64,
    pub ttc_max: f64,
    pub ttc_formula: TtcFormula,
    /// Time-to-collision the longitudinal regulator aims for.
    pub ttc_target: f64,
    /// Proportional gain of the regulator on the speed error.
    pub gain: f64,
}

impl Default for HybridParams {
    fn default() -> Self {
        HybridParams {
            ttc_min: 0.0,
            ttc_max: 2.0,
            ttc_formula: TtcFormula::Longitudinal,
            ttc_target: 1.0,
            gain: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictiveParams {
    /// Prediction horizon in seconds.
    pub horizon: f64,
    pub accels: Vec<f64>,
}

impl Default for PredictiveParams {
    fn default() -> Self {
        PredictiveParams {
            horizon: 1.0,
            accels: vec![-6.0, -3.0, 0.0, 3.0],
        }
    }
}

/// Every constant of the testbed. All fields can be overridden from a config
/// file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    pub dt: f64,
    pub lanes: usize,
    pub lane_width: f64,
    pub start_lane: usize,
    pub length: f64,
    pub width: f64,
    pub v_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub lateral_omega: f64,
    pub settle_tolerance: f64,
    pub dx_cap: f64,
    pub gap_acceptance: f64,
    pub brake: f64,
    pub idm: IdmParams,
    pub mobil: MobilParams,
    pub hybrid: HybridParams,
    pub predictive: PredictiveParams,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            dt: 0.1,
            lanes: 3,
            lane_width: 3.7,
            start_lane: 1,
            length: 5.0,
            width: 2.0,
            v_max: 25.0,
            a_min: -6.0,
            a_max: 3.0,
            lateral_omega: 2.5,
            settle_tolerance: 0.1,
            dx_cap: 50.0,
            gap_acceptance: 2.0,
            brake: -6.0,
            idm: IdmParams::default(),
            mobil: MobilParams::default(),
            hybrid: HybridParams::default(),
            predictive: PredictiveParams::default(),
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("vehicle parameter {what}")));
        let positive = [
            ("dt", self.dt),
            ("lane_width", self.lane_width),
            ("length", self.length),
            ("width", self.width),
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("lateral_omega", self.lateral_omega),
            ("settle_tolerance", self.settle_tolerance),
            ("dx_cap", self.dx_cap),
            ("idm.v_des", self.idm.v_des),
            ("idm.a_max", self.idm.a_max),
            ("idm.b", self.idm.b),
            ("idm.exponent", self.idm.exponent),
            ("mobil.b_safe", self.mobil.b_safe),
            ("predictive.horizon", self.predictive.horizon),
            ("hybrid.gain", self.hybrid.gain),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive, got {v}"));
            }
        }
        if self.lanes == 0 || self.start_lane >= self.lanes {
            return bad("start_lane must name one of the lanes");
        }
        if !(self.a_min < 0.0 && self.brake < 0.0 && self.brake >= self.a_min) {
            return bad("brake must lie in [a_min, 0)");
        }
        if !(self.gap_acceptance >= 0.0) {
            return bad("gap_acceptance must be non-negative");
        }
        if !(self.idm.s0 >= 0.0 && self.idm.t_headway >= 0.0 && self.mobil.politeness >= 0.0) {
            return bad("idm.s0, idm.t_headway and mobil.politeness must be non-negative");
        }
        if !(self.hybrid.ttc_min < self.hybrid.ttc_max) {
            return bad("hybrid TTC window is empty");
        }
        if self.predictive.accels.is_empty() {
            return bad("predictive.accels is empty");
        }
        Ok(())
    }

    pub fn lane_center(&self, lane: usize) -> f64 {
        lane as f64 * self.lane_width
    }

    pub fn lane_of(&self, y: f64) -> usize {
        let raw = (y / self.lane_width).round();
        (raw.max(0.0) as usize).min(self.lanes - 1)
    }

    /// The line separating two neighbouring lanes.
    pub fn lane_boundary(&self, a: usize, b: usize) -> f64 {
        (self.lane_center(a) + self.lane_center(b)) / 2.0
    }

    pub fn y_min(&self) -> f64 {
        self.lane_center(0)
    }

    pub fn y_max(&self) -> f64 {
        self.lane_center(self.lanes - 1)
    }

    /// `(d_x, d_y, v0, v1)` bounds of the operational state space.
    pub fn oss_bounds(&self) -> [(f64, f64); 4] {
        [
            (0.0, self.dx_cap),
            (-self.lane_width, self.lane_width),
            (0.0, self.v_max),
            (0.0, self.v_max),
        ]
    }
}
