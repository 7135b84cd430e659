use serde::{Deserialize, Serialize};

use safebai::bai::{AlgoConfig, Criterion, NuMode, Variant};
use safebai::estimation::SafetyWidth;
use safebai::instance::{hard_instance, Instance};
use safebai::safety::Sampler;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceSection {
    pub d: usize,
    pub omega: f64,
    pub eta0: f64,
    pub gamma_lb: f64,
    pub sigma_r: f64,
    pub sigma_s: f64,
    /// Replaces the hard instance's reward parameter.
    pub theta: Option<Vec<f64>>,
    /// Replaces the hard instance's safety parameter.
    pub mu: Option<Vec<f64>>,
}

impl Default for InstanceSection {
    fn default() -> Self {
        Self { d: 3, omega: 0.1, eta0: -0.5, gamma_lb: 0.2, sigma_r: 1.0, sigma_s: 0.1, theta: None, mu: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmSection {
    /// Defaults to `2(1 − cos ω)`.
    pub epsilon: Option<f64>,
    pub delta_r: f64,
    pub delta_s_prime: f64,
    pub lambda: f64,
    /// Defaults to the instance's `sigma_r`.
    pub noise_r: Option<f64>,
    /// Defaults to the instance's `sigma_s`.
    pub noise_s: Option<f64>,
    pub t_fe: usize,
    pub gamma_init: f64,
    pub criterion: Criterion,
    pub variant: Variant,
    pub dynamic_gamma: bool,
    pub t_opt: usize,
    pub max_rounds: usize,
    pub sampler: Sampler,
    pub observe_safety_in_bai: bool,
    pub safety_radius_uses_r: bool,
    pub safety_width: SafetyWidth,
    /// Defaults to `gamma_init`.
    pub baseline_fe_gamma: Option<f64>,
    pub nu_mode: NuMode,
    pub fw_budget: usize,
    pub max_outer_iterations: usize,
    pub exact_estimates: bool,
}

impl Default for AlgorithmSection {
    fn default() -> Self {
        Self {
            epsilon: None,
            delta_r: 0.001,
            delta_s_prime: 0.001,
            lambda: 1.0,
            noise_r: None,
            noise_s: None,
            t_fe: 800,
            gamma_init: 0.2,
            criterion: Criterion::G,
            variant: Variant::SafeConservative,
            dynamic_gamma: true,
            t_opt: 10,
            max_rounds: 1_000_000,
            sampler: Sampler::Uniform,
            observe_safety_in_bai: false,
            safety_radius_uses_r: false,
            safety_width: SafetyWidth::SafetyDesign,
            baseline_fe_gamma: None,
            nu_mode: NuMode::Asymptotic,
            fw_budget: 200,
            max_outer_iterations: 10,
            exact_estimates: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    TFe,
    Eta0,
    Dimension,
    Epsilon,
    DeltaR,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::TFe => "t_fe",
            SweepParameter::Eta0 => "eta0",
            SweepParameter::Dimension => "dimension",
            SweepParameter::Epsilon => "epsilon",
            SweepParameter::DeltaR => "delta_r",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "t_fe" => Ok(SweepParameter::TFe),
            "eta0" => Ok(SweepParameter::Eta0),
            "dimension" => Ok(SweepParameter::Dimension),
            "epsilon" => Ok(SweepParameter::Epsilon),
            "delta_r" => Ok(SweepParameter::DeltaR),
            other => Err(Error::Config(format!(
                "unknown sweep parameter {other:?}; expected one of t_fe, eta0, dimension, epsilon, delta_r"
            ))),
        }
    }

    /// Grid used when neither the config nor the command line gives values.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepParameter::TFe => vec![100.0, 200.0, 400.0, 800.0, 1600.0],
            SweepParameter::Eta0 => vec![-0.1, -0.3, -0.5, -0.8],
            SweepParameter::Dimension => vec![3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
            SweepParameter::Epsilon => vec![0.01, 0.02, 0.05, 0.1],
            SweepParameter::DeltaR => vec![0.1, 0.01, 0.001, 0.0001],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub replications: usize,
    pub master_seed: u64,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
    /// Embed a complexity report in the run manifest.
    pub report: bool,
    pub sweep: Option<Sweep>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self { replications: 10, master_seed: 0, workers: None, report: false, sweep: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSection,
    pub algorithm: AlgorithmSection,
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Fails for seeds above `i64::MAX`, which TOML integers cannot hold.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.experiment.workers == Some(0) {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if let Some(s) = &self.experiment.sweep {
            if s.values.is_empty() {
                return Err(Error::Config("sweep needs at least one value".into()));
            }
            for v in &s.values {
                self.with_value(s.parameter, *v)?.validate()?;
            }
        }
        let inst = self.build_instance()?;
        self.algo_config(&inst).validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn epsilon(&self) -> f64 {
        self.algorithm.epsilon.unwrap_or(2.0 * (1.0 - self.instance.omega.cos()))
    }

    pub fn build_instance(&self) -> Result<Instance> {
        let s = &self.instance;
        if !(s.sigma_r >= 0.0 && s.sigma_s >= 0.0) {
            return Err(Error::Config("noise levels must be nonnegative".into()));
        }
        let base = hard_instance(s.d, s.omega, s.eta0, s.gamma_lb).map_err(|e| Error::Config(e.to_string()))?;
        if s.theta.is_none() && s.mu.is_none() {
            return Ok(base);
        }
        let theta = s.theta.clone().unwrap_or_else(|| base.theta_star().to_vec());
        let mu = s.mu.clone().unwrap_or_else(|| base.mu_star().to_vec());
        Instance::new(base.arms().to_vec(), theta, mu, s.eta0, s.gamma_lb).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn algo_config(&self, inst: &Instance) -> AlgoConfig {
        let a = &self.algorithm;
        let mut c = AlgoConfig::for_instance(inst, self.epsilon());
        c.delta_r = a.delta_r;
        c.delta_s_prime = a.delta_s_prime;
        c.lambda = a.lambda;
        c.noise_r = a.noise_r.unwrap_or(self.instance.sigma_r);
        c.noise_s = a.noise_s.unwrap_or(self.instance.sigma_s);
        c.t_fe = a.t_fe;
        c.gamma_init = a.gamma_init;
        c.criterion = a.criterion;
        c.variant = a.variant;
        c.dynamic_gamma = a.dynamic_gamma;
        c.t_opt = a.t_opt;
        c.max_rounds = a.max_rounds;
        c.sampler = a.sampler;
        c.observe_safety_in_bai = a.observe_safety_in_bai;
        c.safety_radius_uses_r = a.safety_radius_uses_r;
        c.safety_width = a.safety_width;
        c.baseline_fe_gamma = a.baseline_fe_gamma;
        c.nu_mode = a.nu_mode;
        c.fw_budget = a.fw_budget;
        c.max_outer_iterations = a.max_outer_iterations;
        c.exact_estimates = a.exact_estimates;
        c
    }

    /// Copy with one swept parameter set to `value` and the sweep removed.
    pub fn with_value(&self, p: SweepParameter, value: f64) -> Result<Self> {
        let mut c = self.clone();
        c.experiment.sweep = None;
        let bad = || Error::Config(format!("invalid {} value {value}", p.name()));
        match p {
            SweepParameter::TFe => {
                if !(value >= 0.0 && value.fract() == 0.0) {
                    return Err(bad());
                }
                c.algorithm.t_fe = value as usize;
            }
            SweepParameter::Eta0 => c.instance.eta0 = value,
            SweepParameter::Dimension => {
                if !(value >= 2.0 && value.fract() == 0.0) || c.instance.theta.is_some() || c.instance.mu.is_some() {
                    return Err(bad());
                }
                c.instance.d = value as usize;
            }
            SweepParameter::Epsilon => c.algorithm.epsilon = Some(value),
            SweepParameter::DeltaR => c.algorithm.delta_r = value,
        }
        Ok(c)
    }

    /// FNV-1a hash of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in json.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}
