//! One function per subcommand. Each writes into the configured output
//! directory and reports how it finished.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use log::{info, warn};
use serde::Serialize;

use safeset_core::nflbench::{first_difference, tally_rows, TallyDifference};
use safeset_core::vehicle::{es_train, VehicleSystem};
use safeset_core::{
    aggressiveness_order, build_covering, diff_fraction, iou, quantify, seed, validate_safe_set, AggressivenessOrder,
    AggressivenessVerdict, CompareParams, Comparator, ComparisonOutcome, CoveringSet, DeltaVector, ExplorationOrder,
    MassFunction, NflCost, OssSpec, QuantifyOptions, QuantifyParams, QuantifyResult, StateVector, SystemModel,
    ValidationOutcome, ValidationParams,
};

use crate::config::{CompareConfig, ExperimentConfig, NflConfig, QuantifyConfig, TestbedConfig, ValidateConfig};
use crate::output::{ensure_dir, write_csv, write_json, write_jsonl};
use crate::testbed::{self, parse_subjects, Bench, Testbed};
use crate::Status;

fn prepare(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    Ok(dir)
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T> {
    s.as_ref().ok_or_else(|| anyhow!("config has no [{name}] section"))
}

fn remove_stale(path: &Path) -> Result<()> {
    if path.exists() {
        std::fs::remove_file(path).with_context(|| format!("removing {}", path.display()))?;
    }
    Ok(())
}

/// The covering of the whole space minus centroids in the failure region.
fn safe_covering(oss: &OssSpec, delta: &DeltaVector) -> Result<CoveringSet> {
    Ok(build_covering(&oss.space, delta)?.retain(|_, c| !oss.is_failure(c)))
}

pub fn read_cover(path: &Path) -> Result<CoveringSet> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn num(x: f64) -> String {
    format!("{x}")
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

pub fn validate(cfg: &ExperimentConfig) -> Result<Status> {
    let vc = section(&cfg.validate, "validate")?;
    match testbed::build(cfg)? {
        Testbed::Vehicle(b) => validate_on(cfg, vc, &b),
        Testbed::Toy(b) => validate_on(cfg, vc, &b),
        Testbed::Nfl => bail!("validate needs a vehicle or toy testbed"),
    }
}

fn validate_on<M: SystemModel>(cfg: &ExperimentConfig, vc: &ValidateConfig, bench: &Bench<M>) -> Result<Status> {
    let actor = bench.actor(&vc.actor)?;
    let cover = match &vc.cover {
        Some(p) => read_cover(&cfg.resolve(p))?,
        None => safe_covering(bench.system.oss(), &bench.delta(cfg)?)?,
    };
    let params = ValidationParams {
        spec: cfg.confidence.spec()?,
        horizon: cfg.run.horizon,
        seed: cfg.seed,
        mass: MassFunction::Uniform,
    };
    info!("validating {} centroids against {}", cover.len(), vc.actor);
    let outcome = validate_safe_set(&cover, actor, &bench.system, &params)?;
    let dir = prepare(cfg)?;
    let (cert, fals) = (dir.join("certificate.json"), dir.join("falsification.json"));
    match &outcome {
        ValidationOutcome::Certified(c) => {
            remove_stale(&fals)?;
            write_json(&cert, c)?;
            println!("certified: {} runs, {} centroids", c.runs_used, c.cover.len());
            Ok(Status::Ok)
        }
        ValidationOutcome::Falsified { run_index, run } => {
            remove_stale(&cert)?;
            write_json(&fals, &outcome)?;
            println!(
                "falsified by run {run_index} from {:?}",
                run.states.first().map(|s| s.coords().to_vec()).unwrap_or_default()
            );
            Ok(Status::Falsified)
        }
    }
}

// ---------------------------------------------------------------------------
// quantify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct QuantifySummary<'a> {
    system: String,
    actor: String,
    epsilon: f64,
    beta: f64,
    horizon: usize,
    seed: u64,
    max_runs: u64,
    options: QuantifyOptions,
    result: &'a QuantifyResult,
}

pub fn quantify_cmd(cfg: &ExperimentConfig) -> Result<Status> {
    let qc = section(&cfg.quantify, "quantify")?;
    match testbed::build(cfg)? {
        Testbed::Vehicle(b) => quantify_on(cfg, qc, &b),
        Testbed::Toy(b) => quantify_on(cfg, qc, &b),
        Testbed::Nfl => bail!("quantify needs a vehicle or toy testbed"),
    }
}

fn quantify_on<M: SystemModel>(cfg: &ExperimentConfig, qc: &QuantifyConfig, bench: &Bench<M>) -> Result<Status> {
    let actor = bench.actor(&qc.actor)?;
    let spec = cfg.confidence.spec()?;
    let options = QuantifyOptions {
        prune_on_escape: qc.prune_on_escape,
        audit: qc.audit,
    };
    let params = QuantifyParams {
        spec,
        delta: bench.delta(cfg)?,
        horizon: cfg.run.horizon,
        seed: cfg.seed,
        max_runs: cfg.run.max_runs,
        options,
    };
    info!("quantifying the safe set of {}", qc.actor);
    let res = quantify(&bench.system, actor, &params)?;
    let dir = prepare(cfg)?;
    write_json(
        &dir.join("quantify.json"),
        &QuantifySummary {
            system: bench.system.label(),
            actor: actor.label(),
            epsilon: spec.epsilon(),
            beta: spec.beta(),
            horizon: cfg.run.horizon,
            seed: cfg.seed,
            max_runs: cfg.run.max_runs,
            options,
            result: &res,
        },
    )?;
    write_json(&dir.join("cover.json"), &res.cover)?;
    let names: Vec<&str> = res.cover.space().dims.iter().map(|d| d.name.as_str()).collect();
    write_csv(
        &dir.join("centroids.csv"),
        &names,
        res.cover.centroids().iter().map(|c| c.coords().iter().copied().map(num).collect()),
    )?;
    let audit = dir.join("audit.jsonl");
    if qc.audit {
        write_jsonl(&audit, &res.audit)?;
    } else {
        remove_stale(&audit)?;
    }
    println!(
        "{} of {} centroids kept after {} runs ({} failures){}",
        res.cover.len(),
        res.initial_centroids,
        res.runs_total,
        res.failure_runs,
        if res.converged { "" } else { "; not converged" }
    );
    if res.converged {
        Ok(Status::Ok)
    } else {
        warn!("max_runs reached before {} consecutive clean runs", res.required_clean_runs);
        Ok(Status::NotConverged)
    }
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

pub fn compare(cfg: &ExperimentConfig, matrix: bool) -> Result<Status> {
    let cc = section(&cfg.compare, "compare")?;
    match testbed::build(cfg)? {
        Testbed::Vehicle(b) => compare_on(cfg, cc, &b, matrix),
        Testbed::Toy(b) => compare_on(cfg, cc, &b, matrix),
        Testbed::Nfl => bail!("compare needs a vehicle or toy testbed"),
    }
}

fn order_label(o: AggressivenessOrder) -> &'static str {
    match o {
        AggressivenessOrder::More => "more",
        AggressivenessOrder::Less => "less",
        AggressivenessOrder::Equal => "equal",
        AggressivenessOrder::Incomparable => "incomparable",
    }
}

fn outcome_label(o: ComparisonOutcome) -> &'static str {
    match o {
        ComparisonOutcome::FalsifiedBy2 => "falsified-by2",
        ComparisonOutcome::Contained => "contained",
        ComparisonOutcome::ContainedWithSmallEscape => "contained-with-small-escape",
        ComparisonOutcome::FullQuantification => "full-quantification",
    }
}

fn compare_on<M: SystemModel>(cfg: &ExperimentConfig, cc: &CompareConfig, bench: &Bench<M>, matrix: bool) -> Result<Status> {
    let delta = bench.delta(cfg)?;
    let params = CompareParams {
        spec: cfg.confidence.spec()?,
        delta: delta.clone(),
        horizon: cfg.run.horizon,
        seed: cfg.seed,
        max_runs: cfg.run.max_runs,
        mass: MassFunction::Uniform,
        quantify_options: QuantifyOptions {
            prune_on_escape: cc.prune_on_escape,
            audit: false,
        },
    };
    let mut cmp = Comparator::new(&bench.system, params);
    if !matrix {
        let (Some(a), Some(b)) = (&cc.te1, &cc.te2) else {
            bail!("compare needs te1 and te2 (or pass --matrix)");
        };
        let v = cmp.compare(bench.actor(a)?, bench.actor(b)?)?;
        let dir = prepare(cfg)?;
        write_json(&dir.join("verdict.json"), &v)?;
        println!("{a} vs {b}: agg={} ({})", v.agg, outcome_label(v.outcome));
        return Ok(Status::Ok);
    }

    let names = if cc.actors.is_empty() { bench.names() } else { cc.actors.clone() };
    ensure!(names.len() >= 2, "the comparison matrix needs at least two testers");
    let mut covers = Vec::with_capacity(names.len());
    for n in &names {
        info!("quantifying {n}");
        covers.push(cmp.quantified(bench.actor(n)?)?.cover.clone());
    }
    let whole = safe_covering(bench.system.oss(), &delta)?;
    let dir = prepare(cfg)?;
    let cover_dir = dir.join("covers");
    ensure_dir(&cover_dir)?;
    for (n, c) in names.iter().zip(&covers) {
        write_json(&cover_dir.join(format!("{n}.json")), c)?;
    }

    let mut rows = Vec::new();
    let mut verdicts: Vec<AggressivenessVerdict> = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for (j, b) in names.iter().enumerate() {
            if i == j {
                continue;
            }
            info!("comparing {a} with {b}");
            let v = cmp.compare(bench.actor(a)?, bench.actor(b)?)?;
            let (p1, p2) = (&covers[i], &covers[j]);
            rows.push(vec![
                a.clone(),
                b.clone(),
                p1.len().to_string(),
                p2.len().to_string(),
                num(iou(p1, p2)?),
                num(diff_fraction(p1, p2, &whole)?),
                num(diff_fraction(p2, p1, &whole)?),
                order_label(aggressiveness_order(p1, p2)?).to_string(),
                v.agg.to_string(),
                outcome_label(v.outcome).to_string(),
                v.runs_used.to_string(),
            ]);
            verdicts.push(v);
        }
    }
    write_csv(
        &dir.join("matrix.csv"),
        &[
            "te1", "te2", "phi1", "phi2", "iou", "diff_1_2", "diff_2_1", "order", "agg", "outcome", "runs_used",
        ],
        rows,
    )?;
    write_json(&dir.join("matrix.json"), &verdicts)?;
    println!("{} ordered pairs over {} testers", verdicts.len(), names.len());
    Ok(Status::Ok)
}

// ---------------------------------------------------------------------------
// nfl
// ---------------------------------------------------------------------------

fn parse_order(s: &str, nc: &NflConfig) -> Result<ExplorationOrder> {
    let (n, a, k) = (nc.states, nc.actions, nc.k);
    Ok(match s {
        "lexicographic" => ExplorationOrder::lexicographic(n, a, k)?,
        "reversed" => ExplorationOrder::lexicographic(n, a, k)?.reversed(),
        _ => match s.strip_prefix("shuffled:") {
            Some(seed) => {
                let seed = seed.parse().with_context(|| format!("bad shuffle seed in {s:?}"))?;
                ExplorationOrder::shuffled(n, a, k, seed)?
            }
            None => bail!("unknown order {s:?}; expected lexicographic, reversed or shuffled:<seed>"),
        },
    })
}

#[derive(Serialize)]
struct NflSummary<'a> {
    states: usize,
    actions: usize,
    k: usize,
    m: usize,
    orders: &'a [String; 2],
    cost: &'a NflCost,
    total_systems: u128,
    equal: bool,
    corrupted: bool,
    difference: Option<TallyDifference>,
    tally_first: Vec<(String, u64)>,
    tally_second: Vec<(String, u64)>,
}

/// `corrupt` bumps one count of the second tally before comparing, as a
/// negative control for the comparison itself.
pub fn nfl(cfg: &ExperimentConfig, corrupt: bool) -> Result<Status> {
    let nc = section(&cfg.nfl, "nfl")?;
    let o1 = parse_order(&nc.orders[0], nc)?;
    let o2 = parse_order(&nc.orders[1], nc)?;
    let mut report = safeset_core::verify_nfl(&o1, &o2, nc.m, &nc.cost, nc.cap)?;
    if corrupt {
        if let Some(v) = report.tally_second.values_mut().next() {
            *v += 1;
        }
        report.difference = first_difference(&report.tally_first, &report.tally_second);
        report.equal = report.difference.is_none();
    }
    let dir = prepare(cfg)?;
    write_json(
        &dir.join("nfl.json"),
        &NflSummary {
            states: nc.states,
            actions: nc.actions,
            k: nc.k,
            m: nc.m,
            orders: &nc.orders,
            cost: &nc.cost,
            total_systems: report.total_systems,
            equal: report.equal,
            corrupted: corrupt,
            difference: report.difference.clone(),
            tally_first: tally_rows(&report.tally_first),
            tally_second: tally_rows(&report.tally_second),
        },
    )?;
    match &report.difference {
        None => {
            println!("tallies equal over {} systems", report.total_systems);
            Ok(Status::Ok)
        }
        Some(d) => {
            println!(
                "tallies differ at {}: {} vs {}",
                d.sequence, d.count_first, d.count_second
            );
            Ok(Status::Differ)
        }
    }
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

pub fn report(cfg: &ExperimentConfig) -> Result<Status> {
    let rc = section(&cfg.report, "report")?;
    let artifacts = cfg.resolve(&rc.artifacts);
    let cover_path = artifacts.join("cover.json");
    ensure!(
        cover_path.is_file(),
        "no cover.json in {}; run quantify first",
        artifacts.display()
    );
    let cover = read_cover(&cover_path)?;
    let TestbedConfig::Vehicle { subjects, params, .. } = &cfg.testbed else {
        bail!("report needs a vehicle testbed");
    };
    let Testbed::Vehicle(bench) = testbed::build(cfg)? else {
        unreachable!("vehicle config builds a vehicle testbed");
    };
    ensure!(
        cover.space() == &bench.system.oss().space,
        "the artifact cover was computed over a different space"
    );
    ensure!(rc.runs >= 1, "report.runs must be at least 1");
    let dir = prepare(cfg)?;

    let start_seed = seed::substream(cfg.seed, "report/starts");
    let run_seed = seed::substream(cfg.seed, "report/run");
    let mut rows = Vec::new();
    for subject in parse_subjects(subjects)? {
        let sys = VehicleSystem::single(params.clone(), subject)?;
        let oss = sys.oss();
        let starts: Vec<StateVector> = (0..rc.runs)
            .map(|i| {
                let mut rng = seed::rng(seed::derive(start_seed, i));
                loop {
                    let s = StateVector(oss.space.sample_uniform(&mut rng));
                    if !oss.is_failure(&s) {
                        break s;
                    }
                }
            })
            .collect();
        let mut row = vec![subject.label().to_string()];
        for name in bench.names() {
            let actor = bench.actor(&name)?;
            let mut hits = 0u64;
            for (i, s0) in starts.iter().enumerate() {
                if actor.run(&sys, s0, cfg.run.horizon, seed::derive(run_seed, i as u64))?.hit_failure {
                    hits += 1;
                }
            }
            info!("{} vs {name}: {hits}/{} failures", subject.label(), rc.runs);
            row.push(num(hits as f64 / rc.runs as f64));
        }
        rows.push(row);
    }
    let mut header = vec!["subject".to_string()];
    header.extend(bench.names());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&dir.join("failure_rates.csv"), &header, rows)?;

    let (n_slice, shown) = write_slice(&dir.join("slice.csv"), &cover, bench.system.oss(), rc.slice)?;
    println!(
        "failure rates written; slice at v0={}, v1={} has {shown} covered of {n_slice} cells",
        rc.slice[0], rc.slice[1]
    );
    Ok(Status::Ok)
}

/// Cells of the full covering at the grid speeds nearest to `slice`,
/// flagged by whether the cover keeps them.
fn write_slice(path: &Path, cover: &CoveringSet, oss: &OssSpec, slice: [f64; 2]) -> Result<(usize, usize)> {
    let full = build_covering(cover.space(), cover.delta())?;
    let nearest = |axis: usize, target: f64| {
        full.centroids()
            .iter()
            .map(|c| c.coords()[axis])
            .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
            .unwrap_or(target)
    };
    let (v0, v1) = (nearest(2, slice[0]), nearest(3, slice[1]));
    let cells: Vec<&StateVector> = full
        .centroids()
        .iter()
        .filter(|c| c.coords()[2] == v0 && c.coords()[3] == v1)
        .collect();
    let covered = cells.iter().filter(|c| cover.has_centroid(c)).count();
    write_csv(
        path,
        &["dx", "dy", "v0", "v1", "failure", "covered"],
        cells.iter().map(|c| {
            let x = c.coords();
            vec![
                num(x[0]),
                num(x[1]),
                num(x[2]),
                num(x[3]),
                u8::from(oss.is_failure(c)).to_string(),
                u8::from(cover.has_centroid(c)).to_string(),
            ]
        }),
    )?;
    Ok((cells.len(), covered))
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct TrainSummary {
    initial_reward: f64,
    best_reward: f64,
    best_iteration: Option<usize>,
}

pub fn train(cfg: &ExperimentConfig) -> Result<Status> {
    let tc = section(&cfg.train, "train")?;
    let TestbedConfig::Vehicle { subjects, params, .. } = &cfg.testbed else {
        bail!("train needs a vehicle testbed");
    };
    let system = VehicleSystem::new(params.clone(), parse_subjects(subjects)?)?;
    info!("training for {} iterations", tc.es.iterations);
    let out = es_train(&system, &tc.reward, &tc.es, cfg.seed)?;
    let dir = prepare(cfg)?;
    std::fs::write(dir.join("weights.txt"), out.net.to_text()).context("writing weights.txt")?;
    write_csv(
        &dir.join("es_curve.csv"),
        &["iteration", "population_mean", "eval_reward", "best_reward", "improved"],
        out.curve.iter().map(|e| {
            vec![
                e.iteration.to_string(),
                num(e.population_mean),
                num(e.eval_reward),
                num(e.best_reward),
                e.improved.to_string(),
            ]
        }),
    )?;
    write_json(
        &dir.join("train.json"),
        &TrainSummary {
            initial_reward: out.initial_reward,
            best_reward: out.best_reward,
            best_iteration: out.best_iteration,
        },
    )?;
    println!("reward {:.3} -> {:.3}", out.initial_reward, out.best_reward);
    Ok(Status::Ok)
}
