//! Experiment configuration files (TOML).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;

use safeset_core::toy::ToyDynamics;
use safeset_core::vehicle::{EsParams, RewardSpec, VehicleParams};
use safeset_core::{ConfidenceSpec, NflCost};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random draw of a command derives from it.
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the config file.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub testbed: TestbedConfig,
    #[serde(default)]
    pub confidence: ConfidenceConfig,
    #[serde(default)]
    pub covering: CoveringConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub validate: Option<ValidateConfig>,
    #[serde(default)]
    pub quantify: Option<QuantifyConfig>,
    #[serde(default)]
    pub compare: Option<CompareConfig>,
    #[serde(default)]
    pub nfl: Option<NflConfig>,
    #[serde(default)]
    pub report: Option<ReportConfig>,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    /// Directory the config was read from; relative paths resolve here.
    #[serde(skip)]
    pub base: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestbedConfig {
    Vehicle {
        /// Subject controllers drawn uniformly per run.
        #[serde(default = "default_subjects")]
        subjects: Vec<String>,
        #[serde(default)]
        params: VehicleParams,
        /// Learned-adversary weights; the bundled ones when absent.
        #[serde(default)]
        network: Option<PathBuf>,
    },
    Toy {
        dynamics: ToyDynamics,
        lower: f64,
        upper: f64,
        /// Failure region `x < failure_below` and/or `x > failure_above`.
        #[serde(default)]
        failure_below: Option<f64>,
        #[serde(default)]
        failure_above: Option<f64>,
        /// Named constant-action testers.
        policies: BTreeMap<String, f64>,
    },
    Nfl,
}

fn default_subjects() -> Vec<String> {
    vec!["idm-mobil".into(), "idm".into()]
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfidenceConfig {
    pub epsilon: f64,
    pub beta: f64,
}

impl Default for ConfidenceConfig {
    fn default() -> Self {
        ConfidenceConfig { epsilon: 0.01, beta: 1e-4 }
    }
}

impl ConfidenceConfig {
    pub fn spec(&self) -> Result<ConfidenceSpec> {
        Ok(ConfidenceSpec::new(self.epsilon, self.beta)?)
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringConfig {
    /// Per-dimension resolution; the testbed default when empty.
    #[serde(default)]
    pub delta: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: usize,
    pub max_runs: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            horizon: 100,
            max_runs: 2_000_000,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub actor: String,
    /// A cover file written by `quantify`; the full covering when absent.
    #[serde(default)]
    pub cover: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantifyConfig {
    pub actor: String,
    #[serde(default = "yes")]
    pub prune_on_escape: bool,
    #[serde(default = "yes")]
    pub audit: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    #[serde(default)]
    pub te1: Option<String>,
    #[serde(default)]
    pub te2: Option<String>,
    /// Testers of the pairwise matrix; every configured tester when empty.
    #[serde(default)]
    pub actors: Vec<String>,
    #[serde(default = "yes")]
    pub prune_on_escape: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NflConfig {
    pub states: usize,
    pub actions: usize,
    pub k: usize,
    pub m: usize,
    /// Two orders: `lexicographic`, `reversed` or `shuffled:<seed>`.
    pub orders: [String; 2],
    pub cost: NflCost,
    #[serde(default = "default_cap")]
    pub cap: u128,
}

fn default_cap() -> u128 {
    safeset_core::nflbench::DEFAULT_CAP
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// Directory holding earlier `quantify` output.
    pub artifacts: PathBuf,
    #[serde(default = "default_report_runs")]
    pub runs: u64,
    /// `(v0, v1)` of the `d_x`–`d_y` slice.
    #[serde(default = "default_slice")]
    pub slice: [f64; 2],
}

fn default_report_runs() -> u64 {
    1000
}

fn default_slice() -> [f64; 2] {
    [5.0, 20.0]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default)]
    pub es: EsParams,
    #[serde(default)]
    pub reward: RewardSpec,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.check()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output)
    }

    /// Checks that do not need the testbed.
    fn check(&self) -> Result<()> {
        self.confidence.spec()?;
        ensure!(self.run.horizon >= 1, "run.horizon must be at least 1");
        let needed = self.confidence.spec()?.min_samples()?;
        ensure!(
            self.run.max_runs >= needed,
            "run.max_runs = {} is below min_samples = {needed}",
            self.run.max_runs
        );
        if let TestbedConfig::Toy {
            lower,
            upper,
            policies,
            ..
        } = &self.testbed
        {
            ensure!(lower < upper, "toy bounds need lower < upper");
            ensure!(!policies.is_empty(), "toy testbed needs at least one policy");
        }
        if let Some(n) = &self.nfl {
            ensure!(n.states >= 1 && n.actions >= 1 && n.k >= 1, "nfl sizes must be positive");
        }
        if let Some(c) = &self.compare {
            if c.te1.is_some() != c.te2.is_some() {
                bail!("compare needs both te1 and te2, or neither");
            }
        }
        Ok(())
    }
}
