use std::fs;
use std::path::Path;

use abctrack::evaluation::{ExperimentBase, ExperimentGrid, Layout};
use abctrack::inference::{Algorithm, EstimateMode, Ladder, PriorMode, SamplerConfig, Tolerance};
use abctrack::metrics::PseudoLikelihoodParams;
use abctrack::sim::{MotionParams, ScenarioOptions};
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// Parsed configuration file plus the digest of its raw bytes.
#[derive(Debug)]
pub struct Loaded {
    pub config: RunConfig,
    pub sha256: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub scenario: Option<ScenarioSection>,
    #[serde(default)]
    pub sampler: SamplerSection,
    pub experiment: Option<ExperimentSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(default = "defaults::n_targets")]
    pub n_targets: usize,
    #[serde(default = "defaults::n_sensors")]
    pub n_sensors: usize,
    #[serde(default = "defaults::layout")]
    pub layout: Layout,
    #[serde(default = "defaults::half_width")]
    pub half_width: f64,
    #[serde(default)]
    pub p_e: f64,
    pub sigma2: f64,
    #[serde(default = "defaults::steps")]
    pub steps: usize,
    #[serde(default = "defaults::start_radius")]
    pub start_radius: f64,
    #[serde(default = "defaults::initial_speed")]
    pub initial_speed: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum EpsilonValue {
    Fixed(f64),
    Named(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    #[serde(default = "defaults::n_particles")]
    pub n_particles: usize,
    pub epsilon: Option<EpsilonValue>,
    #[serde(default = "defaults::sigma_bearing")]
    pub sigma_bearing: f64,
    #[serde(default = "defaults::sigma_speed")]
    pub sigma_speed: f64,
    #[serde(default = "defaults::n_chains")]
    pub n_chains: usize,
    pub ladder_ratio: Option<f64>,
    pub ladder: Option<Vec<f64>>,
    pub swap_pairs_per_sweep: Option<usize>,
    #[serde(default = "defaults::burn_in")]
    pub burn_in: f64,
    #[serde(default)]
    pub estimator: EstimateMode,
    #[serde(default)]
    pub prior: PriorMode,
    #[serde(default = "defaults::init_radius")]
    pub init_radius: f64,
    #[serde(default = "defaults::init_velocity_sd")]
    pub init_velocity_sd: f64,
}

impl Default for SamplerSection {
    fn default() -> Self {
        toml::from_str("").expect("every sampler key has a default")
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub n_targets: Vec<usize>,
    pub n_sensors: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "defaults::checkpoints")]
    pub checkpoints: Vec<usize>,
    #[serde(default = "defaults::n_reps")]
    pub n_reps: usize,
}

mod defaults {
    use super::Layout;

    pub fn n_targets() -> usize {
        2
    }
    pub fn n_sensors() -> usize {
        16
    }
    pub fn layout() -> Layout {
        Layout::Grid
    }
    pub fn half_width() -> f64 {
        50.0
    }
    pub fn steps() -> usize {
        30
    }
    pub fn start_radius() -> f64 {
        40.0
    }
    pub fn initial_speed() -> f64 {
        2.0
    }
    pub fn n_particles() -> usize {
        300
    }
    pub fn sigma_bearing() -> f64 {
        std::f64::consts::FRAC_PI_8
    }
    pub fn sigma_speed() -> f64 {
        0.5
    }
    pub fn n_chains() -> usize {
        5
    }
    pub fn burn_in() -> f64 {
        0.5
    }
    pub fn init_radius() -> f64 {
        10.0
    }
    pub fn init_velocity_sd() -> f64 {
        0.5
    }
    pub fn checkpoints() -> Vec<usize> {
        vec![10, 20, 30]
    }
    pub fn n_reps() -> usize {
        30
    }
}

pub fn load(path: &Path) -> Result<Loaded, String> {
    let bytes = fs::read(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| format!("config {} is not UTF-8", path.display()))?;
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().replace('\n', " ");
        format!("invalid config {}: {msg}", path.display())
    })?;
    Ok(Loaded {
        config,
        sha256: format!("{:x}", Sha256::digest(&bytes)),
    })
}

impl RunConfig {
    pub fn seed(&self, cli_seed: Option<u64>) -> Result<u64, String> {
        cli_seed
            .or(self.seed)
            .ok_or_else(|| "missing field `seed` (set it in the config or pass --seed)".to_string())
    }

    pub fn scenario(&self) -> Result<&ScenarioSection, String> {
        self.scenario
            .as_ref()
            .ok_or_else(|| "missing section `[scenario]` (it must at least set `sigma2`)".to_string())
    }

    pub fn experiment(&self) -> Result<&ExperimentSection, String> {
        self.experiment
            .as_ref()
            .ok_or_else(|| "missing section `[experiment]`".to_string())
    }

    pub fn sampler(&self, seed: u64) -> Result<SamplerConfig, String> {
        let s = &self.sampler;
        let epsilon = match &s.epsilon {
            None => Tolerance::Auto,
            Some(EpsilonValue::Fixed(eps)) => Tolerance::Fixed(*eps),
            Some(EpsilonValue::Named(name)) if name == "auto" => Tolerance::Auto,
            Some(EpsilonValue::Named(name)) => {
                return Err(format!("sampler.epsilon must be a number or \"auto\", got {name:?}"))
            }
        };
        let ladder = match (&s.ladder, s.ladder_ratio) {
            (Some(_), Some(_)) => return Err("set at most one of sampler.ladder and sampler.ladder_ratio".into()),
            (Some(values), None) => Ladder::Explicit(values.clone()),
            (None, Some(ratio)) => Ladder::Geometric(ratio),
            (None, None) => Ladder::default(),
        };
        let pseudo = PseudoLikelihoodParams::new(s.sigma_bearing, s.sigma_speed).map_err(|e| format!("sampler: {e}"))?;
        let cfg = SamplerConfig {
            n_particles: s.n_particles,
            epsilon,
            pseudo,
            n_chains: s.n_chains,
            ladder,
            swap_pairs_per_sweep: s.swap_pairs_per_sweep,
            burn_in: s.burn_in,
            estimator: s.estimator,
            prior: s.prior,
            init_radius: s.init_radius,
            init_velocity_sd: s.init_velocity_sd,
            seed,
            parallel: true,
            record: false,
        };
        cfg.validate().map_err(|e| format!("sampler: {e}"))?;
        Ok(cfg)
    }
}

impl ScenarioSection {
    pub fn motion(&self) -> Result<MotionParams, String> {
        MotionParams::new(self.sigma2).map_err(|e| format!("scenario.sigma2: {e}"))
    }

    pub fn options(&self) -> ScenarioOptions {
        ScenarioOptions {
            start_radius: self.start_radius,
            initial_speed: self.initial_speed,
        }
    }

    pub fn experiment_base(&self, sampler: SamplerConfig) -> Result<ExperimentBase, String> {
        Ok(ExperimentBase {
            motion: self.motion()?,
            steps: self.steps,
            options: self.options(),
            layout: self.layout,
            half_width: self.half_width,
            p_e: self.p_e,
            sampler,
        })
    }
}

impl ExperimentSection {
    pub fn grid(&self) -> ExperimentGrid {
        ExperimentGrid {
            n_targets: self.n_targets.clone(),
            n_sensors: self.n_sensors.clone(),
            algorithms: self.algorithms.clone(),
            checkpoints: self.checkpoints.clone(),
        }
    }
}
