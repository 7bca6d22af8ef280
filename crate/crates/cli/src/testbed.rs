//! Systems and testers built from a configuration.

use anyhow::{anyhow, bail, Context, Result};

use safeset_core::toy::{ConstantPolicy, ToySystem};
use safeset_core::vehicle::{adversary, AdversaryKind, Mlp, Subject, VehicleParams, VehicleSystem, VehicleWorld};
use safeset_core::{Actor, DeltaVector, PolicyModel, SystemModel};

use crate::config::{ExperimentConfig, TestbedConfig};

/// A system together with its named testers.
pub struct Bench<M: SystemModel> {
    pub system: M,
    pub actors: Vec<(String, Box<dyn PolicyModel<M::State>>)>,
    pub default_delta: Vec<f64>,
}

impl<M: SystemModel> Bench<M> {
    pub fn actor(&self, name: &str) -> Result<Actor<'_, M::State>> {
        self.actors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, p)| Actor::Policy(p.as_ref()))
            .ok_or_else(|| {
                let known: Vec<&str> = self.actors.iter().map(|(n, _)| n.as_str()).collect();
                anyhow!("unknown tester {name:?}; configured: {}", known.join(", "))
            })
    }

    pub fn names(&self) -> Vec<String> {
        self.actors.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn delta(&self, cfg: &ExperimentConfig) -> Result<DeltaVector> {
        let d = if cfg.covering.delta.is_empty() {
            self.default_delta.clone()
        } else {
            cfg.covering.delta.clone()
        };
        let dim = self.system.oss().dim();
        if d.len() != dim {
            bail!("covering.delta has {} entries, the testbed has {dim} dimensions", d.len());
        }
        Ok(DeltaVector::new(d)?)
    }
}

pub enum Testbed {
    Vehicle(Bench<VehicleSystem>),
    Toy(Bench<ToySystem>),
    Nfl,
}

pub fn parse_subjects(names: &[String]) -> Result<Vec<Subject>> {
    names
        .iter()
        .map(|s| Subject::parse(s).ok_or_else(|| anyhow!("unknown subject controller {s:?}")))
        .collect()
}

pub fn vehicle_bench(subjects: Vec<Subject>, params: &VehicleParams, network: Option<&Mlp>) -> Result<Bench<VehicleSystem>> {
    let system = VehicleSystem::new(params.clone(), subjects)?;
    let actors = AdversaryKind::ALL
        .iter()
        .map(|&k| {
            let adv = adversary(k, params, network);
            (k.label().to_string(), Box::new(adv) as Box<dyn PolicyModel<VehicleWorld>>)
        })
        .collect();
    Ok(Bench {
        system,
        actors,
        default_delta: vec![5.0, params.lane_width, 5.0, 5.0],
    })
}

pub fn build(cfg: &ExperimentConfig) -> Result<Testbed> {
    match &cfg.testbed {
        TestbedConfig::Vehicle {
            subjects,
            params,
            network,
        } => {
            let net = match network {
                Some(p) => {
                    let path = cfg.resolve(p);
                    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    Some(Mlp::from_text(&text)?)
                }
                None => None,
            };
            Ok(Testbed::Vehicle(vehicle_bench(parse_subjects(subjects)?, params, net.as_ref())?))
        }
        TestbedConfig::Toy {
            dynamics,
            lower,
            upper,
            failure_below,
            failure_above,
            policies,
        } => {
            let (below, above) = (failure_below.unwrap_or(f64::NEG_INFINITY), failure_above.unwrap_or(f64::INFINITY));
            let system = ToySystem::new(*dynamics, *lower, *upper, move |x| x < below || x > above);
            let actors = policies
                .iter()
                .map(|(name, &u)| {
                    let p = ConstantPolicy::named(u, name);
                    (name.clone(), Box::new(p) as Box<dyn PolicyModel<_>>)
                })
                .collect();
            Ok(Testbed::Toy(Bench {
                system,
                actors,
                default_delta: vec![(upper - lower) / 20.0],
            }))
        }
        TestbedConfig::Nfl => Ok(Testbed::Nfl),
    }
}
