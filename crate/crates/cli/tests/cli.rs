use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const TOY_IDENTITY: &str = r#"
seed = 1
output = "out"

[testbed]
kind = "toy"
dynamics = { kind = "identity" }
lower = 0.0
upper = 10.0
policies = { idle = 0.0 }

[confidence]
epsilon = 0.1
beta = 0.01

[covering]
delta = [0.5]

[run]
horizon = 10

[validate]
actor = "idle"

[quantify]
actor = "idle"
"#;

const TOY_DRIFT: &str = r#"
seed = 7
output = "out"

[testbed]
kind = "toy"
dynamics = { kind = "drift", rate = 1.0 }
lower = -5.0
upper = 10.0
failure_below = 0.0
policies = { idle = 0.0, push = -0.5 }

[confidence]
epsilon = 0.1
beta = 0.01

[covering]
delta = [0.5]

[run]
horizon = 5

[validate]
actor = "idle"
cover = "candidate.json"

[quantify]
actor = "idle"

[compare]
te1 = "idle"
te2 = "idle"
"#;

const NFL: &str = r#"
output = "out"

[testbed]
kind = "nfl"

[nfl]
states = 2
actions = 2
k = 1
m = 2
orders = ["shuffled:1", "shuffled:2"]
cost = { kind = "scenario_identity", absorbing = [] }
"#;

const VEHICLE: &str = r#"
seed = 3
output = "out"

[testbed]
kind = "vehicle"

[confidence]
epsilon = 0.01
beta = 1e-4

[covering]
delta = [5.0, 3.7, 2.5, 2.5]

[validate]
actor = "brake"
cover = "out/cover.json"

[quantify]
actor = "brake"

[report]
artifacts = "out"
runs = 200
slice = [5.0, 20.0]
"#;

struct Case {
    dir: TempDir,
}

impl Case {
    fn new(config: &str) -> Case {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("exp.toml"), config).unwrap();
        Case { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn run(&self, args: &[&str]) -> Output {
        let config = self.path("exp.toml");
        Command::new(env!("CARGO_BIN_EXE_safeset"))
            .args(args)
            .arg("--config")
            .arg(&config)
            .env("RUST_LOG", "warn")
            .output()
            .unwrap()
    }

    fn json(&self, rel: &str) -> Value {
        serde_json::from_str(&fs::read_to_string(self.path(rel)).unwrap()).unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read_tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Cover over the drift toy's space with the given centroids.
fn drift_candidate(centroids: &[f64]) -> String {
    let cs: Vec<Vec<f64>> = centroids.iter().map(|&c| vec![c]).collect();
    serde_json::json!({
        "space": { "dims": [{ "name": "x", "unit": "", "kind": "continuous", "lower": -5.0, "upper": 10.0 }] },
        "delta": [0.5],
        "centroids": cs,
    })
    .to_string()
}

#[test]
fn identity_toy_is_certified() {
    let c = Case::new(TOY_IDENTITY);
    let o = c.run(&["validate"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cert = c.json("out/certificate.json");
    assert_eq!(cert["runs_used"], 44);
    assert!(!c.path("out/falsification.json").exists());
}

#[test]
fn oversized_drift_candidate_is_falsified() {
    let c = Case::new(TOY_DRIFT);
    fs::write(c.path("candidate.json"), drift_candidate(&[5.5, 6.5, 7.5, 8.5, 9.5])).unwrap();
    let o = c.run(&["validate"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let f = c.json("out/falsification.json");
    assert_eq!(f["verdict"], "falsified");
    assert_eq!(f["run_index"], 0);
    assert!(f["run"]["states"].as_array().unwrap().len() > 1);
}

#[test]
fn unreachable_failure_keeps_the_whole_covering() {
    let c = Case::new(TOY_IDENTITY);
    let o = c.run(&["quantify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let q = c.json("out/quantify.json");
    assert_eq!(q["result"]["runs_total"], 44);
    assert_eq!(q["result"]["converged"], true);
    assert_eq!(c.json("out/cover.json")["centroids"].as_array().unwrap().len(), 10);
    let csv = fs::read_to_string(c.path("out/centroids.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    assert_eq!(fs::read_to_string(c.path("out/audit.jsonl")).unwrap().lines().count(), 44);
}

#[test]
fn run_cap_reports_non_convergence() {
    let config = r#"
seed = 2
output = "out"

[testbed]
kind = "toy"
dynamics = { kind = "jump", p = 0.2, to = -1.0 }
lower = -2.0
upper = 10.0
failure_below = 0.0
policies = { idle = 0.0 }

[confidence]
epsilon = 0.1
beta = 0.01

[covering]
delta = [0.05]

[run]
horizon = 3
max_runs = 44

[quantify]
actor = "idle"
"#;
    let c = Case::new(config);
    let o = c.run(&["quantify"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let q = c.json("out/quantify.json");
    assert_eq!(q["result"]["converged"], false);
    assert_eq!(q["result"]["runs_total"], 44);
}

#[test]
fn self_comparison_is_contained() {
    let c = Case::new(TOY_DRIFT);
    let o = c.run(&["compare"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = c.json("out/verdict.json");
    assert_eq!(v["agg"], true);
    assert_eq!(v["outcome"], "contained");
}

#[test]
fn matrix_lists_every_ordered_pair() {
    let c = Case::new(TOY_DRIFT);
    let o = c.run(&["compare", "--matrix"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(c.path("out/matrix.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert!(rows[0].starts_with("te1,te2,phi1,phi2,iou"));
    assert_eq!(rows.len(), 3);
    assert!(c.path("out/covers/idle.json").is_file());
    assert!(c.path("out/covers/push.json").is_file());
}

#[test]
fn nfl_tallies_agree_and_corruption_is_caught() {
    let c = Case::new(NFL);
    let o = c.run(&["nfl"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(c.json("out/nfl.json")["equal"], true);

    let o = c.run(&["nfl", "--corrupt"]);
    assert_eq!(code(&o), 2);
    let r = c.json("out/nfl.json");
    assert_eq!(r["equal"], false);
    assert!(r["difference"]["sequence"].is_string());
    assert!(String::from_utf8_lossy(&o.stdout).contains("differ"));
}

#[test]
fn identical_nfl_orders_agree() {
    let c = Case::new(&NFL.replace(r#"["shuffled:1", "shuffled:2"]"#, r#"["reversed", "reversed"]"#));
    assert_eq!(code(&c.run(&["nfl"])), 0);
}

#[test]
fn report_without_artifacts_fails() {
    let c = Case::new(VEHICLE);
    fs::create_dir_all(c.path("out")).unwrap();
    let o = c.run(&["report"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cover.json"));
}

#[test]
fn malformed_configs_are_rejected() {
    for bad in [
        "this is not toml",
        "seed = 1\n[testbed]\nkind = \"submarine\"\n",
        &TOY_IDENTITY.replace("horizon = 10", "horizon = 10\nspeed = 3"),
        &TOY_IDENTITY.replace("epsilon = 0.1", "epsilon = 1.5"),
        &TOY_IDENTITY.replace("horizon = 10", "horizon = 10\nmax_runs = 5"),
    ] {
        let c = Case::new(bad);
        let o = c.run(&["validate"]);
        assert_eq!(code(&o), 1, "{bad}");
    }
    let c = Case::new(TOY_IDENTITY);
    let o = Command::new(env!("CARGO_BIN_EXE_safeset")).arg("validate").output().unwrap();
    assert_eq!(code(&o), 1);
    assert_eq!(code(&c.run(&["compare"])), 1);
}

#[test]
fn reruns_are_byte_identical() {
    let c = Case::new(TOY_DRIFT);
    fs::write(c.path("candidate.json"), drift_candidate(&[5.5, 6.5])).unwrap();
    let go = || {
        c.run(&["quantify"]);
        c.run(&["validate"]);
        c.run(&["compare", "--matrix"]);
        read_tree(&c.path("out"))
    };
    let first = go();
    assert!(first.len() >= 8);
    assert_eq!(first, go());
}

#[test]
fn seed_and_output_overrides_apply() {
    let c = Case::new(TOY_IDENTITY);
    let alt = c.path("alt");
    let o = c.run(&["quantify", "--seed", "9", "--out", alt.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(c.json("alt/quantify.json")["seed"], 9);
    assert!(!c.path("out").exists());
}

#[test]
fn vehicle_quantify_validate_report() {
    let c = Case::new(VEHICLE);
    assert_eq!(code(&c.run(&["quantify"])), 0);
    let o = c.run(&["validate", "--seed", "1234"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let o = c.run(&["report"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let rates = fs::read_to_string(c.path("out/failure_rates.csv")).unwrap();
    let lines: Vec<&str> = rates.lines().collect();
    assert_eq!(lines[0], "subject,steady,brake,hybrid,predictive,learned");
    assert_eq!(lines.len(), 3);

    let cover = c.json("out/cover.json");
    let kept: Vec<Vec<f64>> = serde_json::from_value(cover["centroids"].clone()).unwrap();
    let slice = fs::read_to_string(c.path("out/slice.csv")).unwrap();
    let mut cells = 0;
    for line in slice.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let covered = kept.iter().any(|k| k[..] == f[..4]);
        assert_eq!(f[5] == 1.0, covered, "{line}");
        cells += 1;
    }
    assert!(cells > 0);
}
