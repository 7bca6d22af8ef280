//! Two-vehicle highway testbed: a subject car driven by IDM (optionally with
//! MOBIL lane changes) and an adversary car driven by one of five testing
//! policies. The operational state is `(d_x, d_y, v0, v1)`: headway,
//! lateral offset, subject speed and adversary speed.

mod adversary;
mod driver;
mod es;
mod net;
mod params;
mod world;

use rand::Rng;

pub use adversary::{decode_outputs, time_to_collision, Adversary, AdversaryKind, LateralMode};
pub use driver::{idm_accel, mobil_decision, subject_act, Lead};
pub use es::{es_train, EsLogEntry, EsOutcome, EsParams, RewardSpec};
pub use net::Mlp;
pub use params::{HybridParams, IdmParams, MobilParams, PredictiveParams, TtcFormula, VehicleParams};
pub use world::{is_collision, lateral_track, world_step, Relative, Subject, Vehicle, VehicleWorld};

use crate::engine::{ActionVector, Dim, OssSpec, SpaceBox, StateVector, SystemModel};
use crate::error::{Error, Result};
use crate::seed::RunRng;

/// Weights of the bundled learned adversary.
pub const DEFAULT_THETA: &str = include_str!("../../data/learned_adversary.txt");

/// The bundled learned adversary network.
pub fn default_network() -> Mlp {
    Mlp::from_text(DEFAULT_THETA).expect("bundled weights parse")
}

/// Input normalisation of the learned adversary.
pub fn network_norm(params: &VehicleParams) -> Vec<f64> {
    vec![params.dx_cap, params.lane_width, params.v_max, params.v_max]
}

/// Build any of the five adversaries; the learned one uses `net`, falling
/// back to the bundled weights.
pub fn adversary(kind: AdversaryKind, params: &VehicleParams, net: Option<&Mlp>) -> Adversary {
    match kind {
        AdversaryKind::Learned => Adversary::learned(net.cloned().unwrap_or_else(default_network), params.clone()),
        k => Adversary::new(k, params.clone()),
    }
}

/// The operational state space `D_x × D_y × V_0 × V_1`.
pub fn oss_space(params: &VehicleParams) -> SpaceBox {
    let [dx, dy, v0, v1] = params.oss_bounds();
    SpaceBox::new(vec![
        Dim::continuous("dx", "m", dx.0, dx.1),
        Dim::continuous("dy", "m", dy.0, dy.1),
        Dim::continuous("v0", "m/s", v0.0, v0.1),
        Dim::continuous("v1", "m/s", v1.0, v1.1),
    ])
    .expect("valid vehicle space")
}

/// The testbed as a black-box system. The adversary supplies actions
/// `[a1, lane1]`; the subject controller is drawn per run from `subjects`.
#[derive(Clone, Debug)]
pub struct VehicleSystem {
    pub params: VehicleParams,
    pub subjects: Vec<Subject>,
    oss: OssSpec,
}

impl VehicleSystem {
    pub fn new(params: VehicleParams, subjects: Vec<Subject>) -> Result<Self> {
        params.validate()?;
        if subjects.is_empty() {
            return Err(Error::InvalidArgument("at least one subject controller is required".into()));
        }
        let p = params.clone();
        let oss = OssSpec::new(oss_space(&params), move |s: &StateVector| is_collision(s.0[0], s.0[1], &p))?;
        Ok(VehicleSystem { params, subjects, oss })
    }

    pub fn single(params: VehicleParams, subject: Subject) -> Result<Self> {
        VehicleSystem::new(params, vec![subject])
    }

    /// Subject drawn uniformly from both controllers.
    pub fn mixed(params: VehicleParams) -> Result<Self> {
        VehicleSystem::new(params, vec![Subject::IdmMobil, Subject::Idm])
    }
}

impl SystemModel for VehicleSystem {
    type State = VehicleWorld;

    fn label(&self) -> String {
        let names: Vec<&str> = self.subjects.iter().map(Subject::label).collect();
        format!("vehicle({})", names.join("|"))
    }

    fn oss(&self) -> &OssSpec {
        &self.oss
    }

    fn init(&self, s0: &StateVector, rng: &mut RunRng) -> VehicleWorld {
        let subject = if self.subjects.len() == 1 {
            self.subjects[0]
        } else {
            self.subjects[rng.gen_range(0..self.subjects.len())]
        };
        let c = &s0.0;
        let rel = Relative {
            dx: c[0],
            dy: c[1],
            v0: c[2],
            v1: c[3],
        };
        let mut world = VehicleWorld::from_relative(rel, subject, &self.params);
        if subject == Subject::IdmMobil {
            world.decision_phase = rng.gen_range(0..self.params.mobil.decision_period.max(1));
        }
        world
    }

    fn step(&self, state: &VehicleWorld, action: &ActionVector, _rng: &mut RunRng) -> VehicleWorld {
        let (a0, lane0) = subject_act(state, &self.params);
        let a1 = action.0.first().copied().unwrap_or(0.0);
        let lane1 = action.0.get(1).map_or(state.pov.target, |l| l.round().max(0.0) as usize);
        world_step(state, a0, lane0, a1, lane1, &self.params)
    }

    fn observe(&self, state: &VehicleWorld) -> StateVector {
        StateVector(state.relative(&self.params).to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{execute_run, ActionSource, PolicyModel};

    fn run(subject: Subject, kind: AdversaryKind, s0: [f64; 4], k: usize) -> (crate::engine::RunRecord, VehicleWorld) {
        let p = VehicleParams::default();
        let sys = VehicleSystem::single(p.clone(), subject).unwrap();
        let adv = adversary(kind, &p, None);
        let s0 = StateVector::new(s0.to_vec());
        let rec = execute_run(&sys, ActionSource::Policy(&adv), &s0, k, 7).unwrap();
        // Replay the world to inspect it.
        let mut rng = crate::seed::rng(7);
        let mut w = sys.init(&s0, &mut rng);
        for _ in 0..k {
            if w.collided {
                break;
            }
            let obs = sys.observe(&w);
            let u = adv.act(&w, &obs);
            w = sys.step(&w, &u, &mut rng);
        }
        (rec, w)
    }

    #[test]
    fn bundled_network_loads() {
        let net = default_network();
        assert_eq!(net.theta.len(), 292);
        assert_eq!(net.norm, network_norm(&VehicleParams::default()));
    }

    #[test]
    fn cut_in_scenario_hybrid_collides() {
        let (rec, _) = run(Subject::IdmMobil, AdversaryKind::Hybrid, [10.0, -3.7, 5.0, 20.0], 150);
        assert!(rec.hit_failure);
    }

    #[test]
    fn brake_in_lane_with_room_stops_both() {
        let (rec, w) = run(Subject::Idm, AdversaryKind::Brake, [25.0, 0.0, 10.0, 10.0], 150);
        assert!(!rec.hit_failure);
        assert_eq!(w.pov.v, 0.0);
        // IDM creeps up to the jam distance.
        assert!(w.sv.v < 0.05);
        let gap = w.gap(&VehicleParams::default());
        assert!(gap > 2.0 && gap < 3.0, "gap {gap}");
    }

    #[test]
    fn unavoidable_rear_end() {
        let (rec, _) = run(Subject::Idm, AdversaryKind::Steady, [2.0, 0.0, 25.0, 0.0], 50);
        assert!(rec.hit_failure);
        assert_eq!(rec.failure_step, Some(rec.states.iter().position(|s| s.0[0] <= 0.0).unwrap()));
    }

    #[test]
    fn observation_stays_in_box_or_leaves_cleanly() {
        let p = VehicleParams::default();
        let sys = VehicleSystem::mixed(p.clone()).unwrap();
        for kind in AdversaryKind::ALL {
            let adv = adversary(kind, &p, None);
            let rec = execute_run(&sys, ActionSource::Policy(&adv), &StateVector::new(vec![30.0, 3.7, 20.0, 10.0]), 100, 1).unwrap();
            for s in &rec.states {
                assert!(s.0[0] <= 50.0);
                assert!(sys.oss().contains(s) || sys.oss().is_failure(s));
            }
        }
    }
}
