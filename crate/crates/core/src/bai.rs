//! Direction selection, the stopping rule and the complete LinGapE /
//! Safe-LinGapE procedures.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::{greedy_select, l1_min_weights, nu_star_finite, rounding_select, Allocation, PullCounts};
use crate::error::{invalid, Error, Result};
use crate::estimation::{EstimatorConfig, EstimatorState, SafetyWidth};
use crate::instance::{Action, Environment, Instance};
use crate::linalg::{dot, scaled, sub, PosDefState};
use crate::safety::{build_profile, forced_exploration, Sampler, SafetyProfile};

/// Empirical best arm, its most ambiguous competitor and the stopping
/// statistic `B = (x_opt − x_max)ᵀθ̂ + C ‖x_opt − x_max‖_{A⁻¹}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionChoice {
    pub x_max: usize,
    pub x_opt: usize,
    /// `x_max − x_opt` in scaled coordinates.
    pub y: Vec<f64>,
    pub b: f64,
}

/// Picks `x_max = argmax xᵀθ̂` and the competitor with the largest optimistic
/// gap over `arms` (already scaled). Lowest index wins ties.
pub fn select_direction(
    theta_hat: &[f64],
    design: &PosDefState,
    arms: &[Vec<f64>],
    radius: f64,
) -> Result<DirectionChoice> {
    if arms.is_empty() {
        return Err(Error::InvalidState("empty safe set".into()));
    }
    let mut x_max = 0;
    let mut best = f64::NEG_INFINITY;
    for (k, x) in arms.iter().enumerate() {
        let v = dot(x, theta_hat);
        if v > best {
            best = v;
            x_max = k;
        }
    }
    let mut x_opt = x_max;
    let mut b = 0.0;
    for (k, x) in arms.iter().enumerate() {
        if k == x_max {
            continue;
        }
        let diff = sub(x, &arms[x_max]);
        let v = dot(&diff, theta_hat) + radius * design.mahalanobis_inv(&diff)?;
        if v > b || (v == b && k < x_opt) {
            b = v;
            x_opt = k;
        }
    }
    Ok(DirectionChoice {
        x_max,
        x_opt,
        y: sub(&arms[x_max], &arms[x_opt]),
        b,
    })
}

/// Stop as soon as `B ≤ ε`.
pub fn stopping_check(choice: &DirectionChoice, epsilon: f64) -> bool {
    choice.b <= epsilon
}

/// Largest per-step safety confidence meeting an overall budget `δ_s`:
/// `(δ_s − δ_r) / ((1 − δ_r)(K + C(δ_r)))`.
pub fn required_delta_s_prime(delta_s: f64, delta_r: f64, num_arms: usize, c_delta_r: f64) -> Result<f64> {
    if !(delta_s > delta_r) {
        return invalid(format!("delta_s ({delta_s}) must exceed delta_r ({delta_r})"));
    }
    if !(delta_r >= 0.0 && delta_r < 1.0) {
        return invalid("delta_r must lie in [0, 1)");
    }
    Ok((delta_s - delta_r) / ((1.0 - delta_r) * (num_arms as f64 + c_delta_r)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Criterion {
    /// Greedy reduction of `‖y‖_{A⁻¹}`.
    #[default]
    G,
    /// Rounding towards the allocation ratios.
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Unsafe baseline: every arm at full scale.
    Lingape,
    /// Directions and pulls from the pessimistic safe set.
    #[default]
    SafeConservative,
    /// Directions from the optimistic set, pulls from the pessimistic one.
    SafeOptimistic,
    /// Profile frozen after forced exploration, rerun until stable.
    SafeFixed,
}

impl Variant {
    pub fn is_safe(self) -> bool {
        self != Variant::Lingape
    }
}

/// Source of the rounding ratios for criterion (R).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NuMode {
    /// `ν = |w⋆| / ‖w⋆‖₁`, refreshed when the direction changes.
    #[default]
    Asymptotic,
    /// Frank–Wolfe on the finite-λ design program every `t_opt` rounds.
    Finite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub epsilon: f64,
    pub delta_r: f64,
    pub delta_s_prime: f64,
    pub lambda: f64,
    /// Reward noise level `R`.
    pub noise_r: f64,
    pub noise_s: f64,
    /// `D`
    pub theta_norm_bound: f64,
    pub mu_norm_bound: f64,
    /// `L`
    pub arm_norm_bound: f64,
    pub t_fe: usize,
    pub gamma_init: f64,
    pub criterion: Criterion,
    pub variant: Variant,
    pub dynamic_gamma: bool,
    pub t_opt: usize,
    /// Cap on rounds after forced exploration.
    pub max_rounds: usize,
    pub sampler: Sampler,
    pub observe_safety_in_bai: bool,
    pub safety_radius_uses_r: bool,
    pub safety_width: SafetyWidth,
    /// Scale of the unsafe baseline's forced-exploration pulls; `None`
    /// shares `gamma_init` with the safe variants.
    pub baseline_fe_gamma: Option<f64>,
    pub nu_mode: NuMode,
    pub fw_budget: usize,
    pub max_outer_iterations: usize,
    /// Replace `θ̂`, `μ̂` by the true parameters and all radii by zero.
    pub exact_estimates: bool,
}

impl AlgoConfig {
    /// Defaults with the norm bounds read off `instance`.
    pub fn for_instance(instance: &Instance, epsilon: f64) -> Self {
        Self {
            epsilon,
            delta_r: 0.001,
            delta_s_prime: 0.001,
            lambda: 1.0,
            noise_r: 1.0,
            noise_s: 0.1,
            theta_norm_bound: instance.theta_norm_bound(),
            mu_norm_bound: instance.mu_norm_bound(),
            arm_norm_bound: instance.arm_norm_bound(),
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

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return invalid("epsilon must be positive");
        }
        for (name, v) in [("delta_r", self.delta_r), ("delta_s_prime", self.delta_s_prime)] {
            if !(v > 0.0 && v < 1.0) {
                return invalid(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if !(self.gamma_init > 0.0 && self.gamma_init <= 1.0) {
            return invalid("gamma_init must lie in (0, 1]");
        }
        if self.baseline_fe_gamma.is_some_and(|g| !(g > 0.0 && g <= 1.0)) {
            return invalid("baseline_fe_gamma must lie in (0, 1]");
        }
        if self.max_rounds == 0 || self.t_opt == 0 || self.max_outer_iterations == 0 {
            return invalid("max_rounds, t_opt and max_outer_iterations must be >= 1");
        }
        Ok(())
    }

    fn estimator_config(&self, gamma_lb: f64) -> EstimatorConfig {
        EstimatorConfig {
            lambda: self.lambda,
            noise_r: self.noise_r,
            noise_s: self.noise_s,
            theta_norm_bound: self.theta_norm_bound,
            mu_norm_bound: self.mu_norm_bound,
            arm_norm_bound: self.arm_norm_bound,
            gamma_lb,
            safety_radius_uses_r: self.safety_radius_uses_r,
            safety_width: self.safety_width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    FE,
    BAI,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullRecord {
    /// 1-based over the whole run.
    pub round: usize,
    pub phase: Phase,
    pub arm: usize,
    pub coefficient: f64,
    pub reward: f64,
    /// Present when the learner observed the safety signal.
    pub safety: Option<f64>,
    pub violated: bool,
    /// Stopping statistic that led to this pull.
    pub b_stat: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Stopped,
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Rounds after forced exploration.
    pub tau: usize,
    pub recommended: Action,
    pub status: RunStatus,
    pub pulls: Vec<PullRecord>,
    /// Violated pulls over pulls after forced exploration.
    pub unsafe_fraction: f64,
    /// Violated pulls over all pulls.
    pub unsafe_fraction_all: f64,
    pub wall_rounds_total: usize,
    pub gamma_bar_fe: Vec<f64>,
    pub gamma_bar_final: Vec<f64>,
    pub final_b: f64,
    pub outer_iterations: usize,
}

/// Snapshot handed to an observer after every pull following forced
/// exploration.
pub struct RoundView<'a> {
    /// 1-based index among post-exploration rounds.
    pub round: usize,
    pub direction: &'a DirectionChoice,
    pub action: Action,
    pub profile: &'a SafetyProfile,
    /// State after the pull.
    pub estimator: &'a EstimatorState,
    pub counts: &'a PullCounts,
    /// L1 allocation of the direction on the pull set (criterion R only).
    pub allocation: Option<&'a Allocation>,
}

pub fn run<R: Rng>(env: &mut Environment, rng: &mut R, config: &AlgoConfig) -> Result<RunRecord> {
    run_observed(env, rng, config, &mut |_| {})
}

/// Runs the configured procedure, calling `observer` after each pull past
/// forced exploration.
pub fn run_observed<R: Rng>(
    env: &mut Environment,
    rng: &mut R,
    config: &AlgoConfig,
    observer: &mut dyn FnMut(&RoundView<'_>),
) -> Result<RunRecord> {
    config.validate()?;
    let instance = env.instance().clone();
    let mut est = EstimatorState::new(instance.dim(), config.estimator_config(instance.gamma_lb()))?;

    let fe_gamma = if config.variant.is_safe() {
        config.gamma_init
    } else {
        config.baseline_fe_gamma.unwrap_or(config.gamma_init)
    };
    let fe = forced_exploration(env, &mut est, rng, config.t_fe, fe_gamma, config.sampler)?;
    let mut pulls: Vec<PullRecord> = fe
        .iter()
        .enumerate()
        .map(|(t, p)| PullRecord {
            round: t + 1,
            phase: Phase::FE,
            arm: p.action.arm,
            coefficient: p.action.coefficient,
            reward: p.observation.reward,
            safety: Some(p.observation.safety),
            violated: p.observation.violated,
            b_stat: None,
        })
        .collect();

    let mut session = Session {
        env,
        config,
        arms: instance.arms().to_vec(),
        counts: PullCounts::new(instance.num_arms()),
        instance,
        est,
        pulls: &mut pulls,
        bai_rounds: 0,
        generation: 0,
        cache: None,
    };

    let mut profile = session.profile(config.dynamic_gamma && config.variant != Variant::SafeFixed)?;
    let gamma_bar_fe = profile.gamma_bar.clone();

    let (direction, stopped, outer_iterations) = match config.variant {
        Variant::SafeFixed => {
            let mut outer = 0;
            let mut prev: Option<(usize, SafetyProfile)> = None;
            loop {
                outer += 1;
                let (dir, stopped) = session.until_stop(&mut profile, false, observer)?;
                if !stopped {
                    break (dir, false, outer);
                }
                let stable = prev
                    .as_ref()
                    .is_some_and(|(r, p)| *r == dir.x_max && p.approx_eq(&profile, 1e-9));
                if stable || outer >= config.max_outer_iterations {
                    break (dir, true, outer);
                }
                prev = Some((dir.x_max, profile.clone()));
                profile = session.profile(false)?;
                session.generation += 1;
            }
        }
        _ => {
            let dynamic = config.dynamic_gamma && config.variant.is_safe();
            let (dir, stopped) = session.until_stop(&mut profile, dynamic, observer)?;
            (dir, stopped, 1)
        }
    };

    let tau = session.bai_rounds;
    let recommended = Action::new(direction.x_max, profile.gamma_bar[direction.x_max]);
    drop(session);

    let count_violations = |it: &mut dyn Iterator<Item = &PullRecord>| {
        let (mut n, mut v) = (0usize, 0usize);
        for p in it {
            n += 1;
            v += p.violated as usize;
        }
        if n == 0 {
            0.0
        } else {
            v as f64 / n as f64
        }
    };
    let unsafe_fraction = count_violations(&mut pulls.iter().filter(|p| p.phase == Phase::BAI));
    let unsafe_fraction_all = count_violations(&mut pulls.iter());
    Ok(RunRecord {
        tau,
        recommended,
        status: if stopped { RunStatus::Stopped } else { RunStatus::Truncated },
        wall_rounds_total: pulls.len(),
        pulls,
        unsafe_fraction,
        unsafe_fraction_all,
        gamma_bar_fe,
        gamma_bar_final: profile.gamma_bar.clone(),
        final_b: direction.b,
        outer_iterations,
    })
}

struct RatioCache {
    key: (usize, usize, u64),
    computed_at: usize,
    allocation: Allocation,
    ratios: Vec<f64>,
}

struct Session<'a> {
    env: &'a mut Environment,
    config: &'a AlgoConfig,
    instance: Instance,
    arms: Vec<Vec<f64>>,
    est: EstimatorState,
    counts: PullCounts,
    pulls: &'a mut Vec<PullRecord>,
    bai_rounds: usize,
    /// Bumped whenever the safety profile is rebuilt.
    generation: u64,
    cache: Option<RatioCache>,
}

impl Session<'_> {
    fn profile(&self, dynamic: bool) -> Result<SafetyProfile> {
        let c = self.config;
        if !c.variant.is_safe() {
            return Ok(SafetyProfile::unconstrained(self.arms.len()));
        }
        let floor = self.instance.gamma_lb();
        if c.exact_estimates {
            return SafetyProfile::from_estimates(
                self.instance.mu_star(),
                self.est.safety_width_design(),
                0.0,
                &self.arms,
                self.instance.eta0(),
                c.delta_s_prime,
                dynamic,
                floor,
            );
        }
        build_profile(&self.est, &self.arms, self.instance.eta0(), c.delta_s_prime, dynamic, floor)
    }

    fn scaled_arms(&self, gammas: &[f64]) -> Vec<Vec<f64>> {
        self.arms.iter().zip(gammas).map(|(a, g)| scaled(a, *g)).collect()
    }

    /// Ratios for criterion (R) on the direction `dir`, cached per direction
    /// and profile generation.
    fn ratios(&mut self, dir: &DirectionChoice, pull_arms: &[Vec<f64>]) -> Result<()> {
        let key = (dir.x_max, dir.x_opt, self.generation);
        let fresh = match &self.cache {
            Some(c) if c.key == key => match self.config.nu_mode {
                NuMode::Asymptotic => true,
                NuMode::Finite => self.bai_rounds - c.computed_at < self.config.t_opt,
            },
            _ => false,
        };
        if fresh {
            return Ok(());
        }
        let allocation = l1_min_weights(pull_arms, &dir.y)?;
        let ratios = match self.config.nu_mode {
            NuMode::Asymptotic => allocation.ratios.clone(),
            NuMode::Finite => nu_star_finite(self.est.design(), pull_arms, &dir.y, self.config.fw_budget)?.nu,
        };
        self.cache = Some(RatioCache {
            key,
            computed_at: self.bai_rounds,
            allocation,
            ratios,
        });
        Ok(())
    }

    /// Pulls until `B ≤ ε` (returns `true`) or the round cap (`false`).
    fn until_stop(
        &mut self,
        profile: &mut SafetyProfile,
        dynamic: bool,
        observer: &mut dyn FnMut(&RoundView<'_>),
    ) -> Result<(DirectionChoice, bool)> {
        let c = self.config;
        loop {
            if dynamic && self.bai_rounds > 0 && self.bai_rounds % c.t_opt == 0 {
                let next = self.profile(true)?;
                if next != *profile {
                    *profile = next;
                    self.generation += 1;
                }
            }
            let select_gammas = match c.variant {
                Variant::SafeOptimistic => &profile.gamma_opt,
                _ => &profile.gamma_bar,
            };
            let select_arms = self.scaled_arms(select_gammas);
            let pull_arms = self.scaled_arms(&profile.gamma_bar);
            let (theta, radius) = if c.exact_estimates {
                (self.instance.theta_star().to_vec(), 0.0)
            } else {
                (self.est.theta_hat(), self.est.c_radius(c.delta_r)?.value)
            };
            let dir = select_direction(&theta, self.est.design(), &select_arms, radius)?;
            if stopping_check(&dir, c.epsilon) {
                return Ok((dir, true));
            }
            if self.bai_rounds >= c.max_rounds {
                return Ok((dir, false));
            }
            let arm = match c.criterion {
                Criterion::G => greedy_select(self.est.design(), &pull_arms, &dir.y)?,
                Criterion::R => {
                    self.ratios(&dir, &pull_arms)?;
                    let cache = self.cache.as_ref().expect("ratios just computed");
                    rounding_select(&self.counts, &cache.ratios, &vec![true; self.arms.len()])?
                }
            };
            let action = Action::new(arm, profile.gamma_bar[arm]);
            let obs = self.env.step(action)?;
            let safety = c.observe_safety_in_bai.then_some(obs.safety);
            self.est.update(&pull_arms[arm], obs.reward, safety)?;
            self.counts.record(arm, action.coefficient);
            self.bai_rounds += 1;
            self.pulls.push(PullRecord {
                round: self.pulls.len() + 1,
                phase: Phase::BAI,
                arm,
                coefficient: action.coefficient,
                reward: obs.reward,
                safety,
                violated: obs.violated,
                b_stat: Some(dir.b),
            });
            observer(&RoundView {
                round: self.bai_rounds,
                direction: &dir,
                action,
                profile,
                estimator: &self.est,
                counts: &self.counts,
                allocation: match c.criterion {
                    Criterion::R => self.cache.as_ref().map(|c| &c.allocation),
                    Criterion::G => None,
                },
            });
        }
    }
}
