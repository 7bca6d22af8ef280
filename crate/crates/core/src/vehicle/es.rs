//! Evolution-strategies training of the learned adversary.

use rand_distr::StandardNormal;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adversary::Adversary;
use super::net::Mlp;
use super::{network_norm, VehicleSystem};
use crate::engine::{execute_run, ActionSource, RunRecord, StateVector, SystemModel};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardSpec {
    /// `bonus` for a collision minus `weight` times the mean normalised
    /// distance between the cars.
    CollisionDistance { bonus: f64, weight: f64 },
    Constant { value: f64 },
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec::CollisionDistance { bonus: 10.0, weight: 1.0 }
    }
}

impl RewardSpec {
    pub fn episode_reward(&self, run: &RunRecord, dx_cap: f64) -> f64 {
        match *self {
            RewardSpec::Constant { value } => value,
            RewardSpec::CollisionDistance { bonus, weight } => {
                let n = run.states.len().max(1) as f64;
                let mean = run.states.iter().map(|s| s.0[0].hypot(s.0[1]).min(dx_cap) / dx_cap).sum::<f64>() / n;
                let hit = if run.hit_failure { bonus } else { 0.0 };
                hit - weight * mean
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsParams {
    /// Even: members come in antithetic pairs.
    pub population: usize,
    pub iterations: usize,
    pub sigma: f64,
    pub learning_rate: f64,
    /// Episodes shared by all members within one iteration.
    pub episodes: usize,
    /// Fixed episodes used to pick the best parameters.
    pub eval_episodes: usize,
    pub horizon: usize,
    pub hidden: usize,
    pub init_scale: f64,
}

impl Default for EsParams {
    fn default() -> Self {
        EsParams {
            population: 32,
            iterations: 200,
            sigma: 0.1,
            learning_rate: 0.05,
            episodes: 16,
            eval_episodes: 64,
            horizon: 150,
            hidden: 32,
            init_scale: 0.1,
        }
    }
}

impl EsParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 || self.population % 2 != 0 {
            return Err(Error::InvalidArgument("population must be a positive even number".into()));
        }
        if !(self.sigma > 0.0 && self.learning_rate > 0.0 && self.init_scale >= 0.0) {
            return Err(Error::InvalidArgument("sigma and learning_rate must be positive".into()));
        }
        if self.episodes == 0 || self.eval_episodes == 0 || self.horizon == 0 || self.hidden == 0 {
            return Err(Error::InvalidArgument("episodes, eval_episodes, horizon and hidden must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsLogEntry {
    pub iteration: usize,
    pub population_mean: f64,
    pub eval_reward: f64,
    pub best_reward: f64,
    pub improved: bool,
}

#[derive(Clone, Debug)]
pub struct EsOutcome {
    pub net: Mlp,
    pub initial_reward: f64,
    pub best_reward: f64,
    pub best_iteration: Option<usize>,
    pub curve: Vec<EsLogEntry>,
}

/// An initial state and a run seed.
type Episode = (StateVector, u64);

fn episodes(system: &VehicleSystem, master: u64, first: u64, count: usize) -> Vec<Episode> {
    let oss = system.oss();
    (0..count as u64)
        .map(|j| {
            let s = seed::derive(master, first + j);
            let mut rng = seed::rng(s);
            loop {
                let s0 = StateVector(oss.space.sample_uniform(&mut rng));
                if !oss.is_failure(&s0) {
                    return (s0, seed::derive(s, 1));
                }
            }
        })
        .collect()
}

fn mean_reward(system: &VehicleSystem, net: &Mlp, reward: &RewardSpec, horizon: usize, eps: &[Episode]) -> f64 {
    let adv = Adversary::learned(net.clone(), system.params.clone());
    let total: f64 = eps
        .iter()
        .map(|(s0, run_seed)| {
            let run = execute_run(system, ActionSource::Policy(&adv), s0, horizon, *run_seed).expect("valid episode");
            reward.episode_reward(&run, system.params.dx_cap)
        })
        .sum();
    total / eps.len() as f64
}

/// Centred ranks in `[-0.5, 0.5]`; ties broken by index.
fn centred_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    for (r, &i) in idx.iter().enumerate() {
        ranks[i] = if n > 1 { r as f64 / (n - 1) as f64 - 0.5 } else { 0.0 };
    }
    ranks
}

/// Antithetic evolution strategies with rank-normalised fitness.
///
/// Every member of an iteration is scored on the same episodes. After each
/// update the new parameters are scored on a fixed evaluation set and kept
/// as the best only on strict improvement.
pub fn es_train(system: &VehicleSystem, reward: &RewardSpec, es: &EsParams, master_seed: u64) -> Result<EsOutcome> {
    es.validate()?;
    let norm = network_norm(&system.params);
    let mut init_rng = seed::rng(seed::substream(master_seed, "es/init"));
    let mut net = Mlp::random(norm.len(), es.hidden, 4, norm, es.init_scale, &mut init_rng)?;
    let eval_set = episodes(system, seed::substream(master_seed, "es/eval"), 0, es.eval_episodes);
    let train_master = seed::substream(master_seed, "es/episodes");
    let noise_master = seed::substream(master_seed, "es/noise");
    let dim = net.theta.len();

    let initial_reward = mean_reward(system, &net, reward, es.horizon, &eval_set);
    let mut best = (net.clone(), initial_reward, None);
    let mut curve = Vec::with_capacity(es.iterations);
    let pairs = es.population / 2;

    for it in 0..es.iterations {
        let eps = episodes(system, train_master, (it * es.episodes) as u64, es.episodes);
        let mut noise_rng = seed::rng(seed::derive(noise_master, it as u64));
        let noise: Vec<Vec<f64>> = (0..pairs)
            .map(|_| (0..dim).map(|_| noise_rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let fitness: Vec<f64> = (0..es.population)
            .into_par_iter()
            .map(|m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let e = &noise[m / 2];
                let theta = net.theta.iter().zip(e).map(|(t, n)| t + sign * es.sigma * n).collect();
                mean_reward(system, &net.with_theta(theta), reward, es.horizon, &eps)
            })
            .collect();
        let ranks = centred_ranks(&fitness);
        let scale = es.learning_rate / (es.population as f64 * es.sigma);
        let mut theta = net.theta.clone();
        for (j, e) in noise.iter().enumerate() {
            let w = ranks[2 * j] - ranks[2 * j + 1];
            for (t, n) in theta.iter_mut().zip(e) {
                *t += scale * w * n;
            }
        }
        net = net.with_theta(theta);

        let eval_reward = mean_reward(system, &net, reward, es.horizon, &eval_set);
        let improved = eval_reward > best.1;
        if improved {
            best = (net.clone(), eval_reward, Some(it));
        }
        let population_mean = fitness.iter().sum::<f64>() / fitness.len() as f64;
        log::debug!("es iteration {it}: population {population_mean:.4}, eval {eval_reward:.4}, best {:.4}", best.1);
        curve.push(EsLogEntry {
            iteration: it,
            population_mean,
            eval_reward,
            best_reward: best.1,
            improved,
        });
    }

    Ok(EsOutcome {
        net: best.0,
        initial_reward,
        best_reward: best.1,
        best_iteration: best.2,
        curve,
    })
}
