mod common;

use common::*;
use proptest::prelude::*;
use safebai::bai::{
    required_delta_s_prime, run, run_observed, select_direction, stopping_check, AlgoConfig, Criterion,
    DirectionChoice, Phase, RunStatus, Variant,
};
use safebai::instance::{best_safe_arm, hard_instance, Environment, Instance};
use safebai::linalg::PosDefState;

const ALL_VARIANTS: [Variant; 4] =
    [Variant::Lingape, Variant::SafeConservative, Variant::SafeOptimistic, Variant::SafeFixed];

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn hard_eps() -> f64 {
    2.0 * (1.0 - 0.1f64.cos())
}

fn scaled_arms(inst: &Instance, g: &[f64]) -> Vec<Vec<f64>> {
    inst.arms().iter().zip(g).map(|(a, g)| a.iter().map(|v| v * g).collect()).collect()
}

fn zero_noise_config(inst: &Instance, variant: Variant) -> AlgoConfig {
    let mut cfg = AlgoConfig::for_instance(inst, hard_eps());
    cfg.noise_r = 0.0;
    cfg.noise_s = 0.0;
    cfg.variant = variant;
    cfg
}

fn run_seeded(inst: &Instance, cfg: &AlgoConfig, sigma: (f64, f64), seed: u64) -> safebai::bai::RunRecord {
    let mut env = Environment::seeded(inst.clone(), sigma.0, sigma.1, seed).unwrap();
    run(&mut env, &mut rng(seed ^ 0x5eed), cfg).unwrap()
}

#[test]
fn exact_estimates_stop_immediately() {
    let inst = hard_instance(3, 0.1, -0.5, 0.2).unwrap();
    let arms = scaled_arms(&inst, &[1.0, 0.5, 1.0, 1.0]);
    let design = PosDefState::new(3, 1.0).unwrap();
    let c = select_direction(inst.theta_star(), &design, &arms, 0.0).unwrap();
    assert_eq!(c.x_max, 0);
    // best competitor gap (a₄ − e₁)ᵀθ⋆ = −2(1 − cos 0.1) < 0
    let gap = dot(&arms[3], inst.theta_star()) - 2.0;
    assert!((gap + hard_eps()).abs() < 1e-15);
    assert!(c.b <= hard_eps());
    assert!(stopping_check(&c, hard_eps()));
}

#[test]
fn zero_estimate_gives_pure_bonus() {
    let inst = hard_instance(3, 0.1, -0.5, 0.2).unwrap();
    let design = PosDefState::new(3, 2.0).unwrap();
    let c = select_direction(&[0.0; 3], &design, inst.arms(), 1.5).unwrap();
    assert_eq!(c.x_max, 0);
    let want = inst.arms()[1..]
        .iter()
        .map(|x| {
            let d: Vec<f64> = x.iter().zip(inst.arm(0)).map(|(a, b)| a - b).collect();
            1.5 * (dot(&d, &d) / 2.0).sqrt()
        })
        .fold(0.0, f64::max);
    assert!((c.b - want).abs() < 1e-12);
    let y: Vec<f64> = inst.arm(0).iter().zip(inst.arm(c.x_opt)).map(|(a, b)| a - b).collect();
    assert_eq!(c.y, y);
}

#[test]
fn empty_safe_set_is_rejected() {
    let design = PosDefState::new(2, 1.0).unwrap();
    assert!(select_direction(&[0.0, 0.0], &design, &[], 1.0).is_err());
}

#[test]
fn stopping_boundary() {
    let c = |b| DirectionChoice { x_max: 0, x_opt: 1, y: vec![0.0], b };
    assert!(stopping_check(&c(0.0), 0.01));
    assert!(stopping_check(&c(0.01), 0.01));
    assert!(!stopping_check(&c(0.01 + 1e-12), 0.01));
}

#[test]
fn delta_s_prime_budget() {
    let v = required_delta_s_prime(0.1, 0.05, 90, 10.0).unwrap();
    assert!((v - 0.05 / 95.0).abs() < 1e-15);
    assert!((v - 5.263e-4).abs() < 1e-7);
    let tiny = required_delta_s_prime(0.05 + 1e-12, 0.05, 90, 10.0).unwrap();
    assert!(tiny > 0.0 && tiny < 1e-13);
    let mut prev = 0.0;
    for ds in [0.06, 0.1, 0.2, 0.5, 0.9] {
        let v = required_delta_s_prime(ds, 0.05, 4, 1.0).unwrap();
        assert!(v > prev);
        prev = v;
    }
    assert!(required_delta_s_prime(0.05, 0.05, 4, 1.0).is_err());
    assert!(required_delta_s_prime(0.01, 0.05, 4, 1.0).is_err());
}

#[test]
fn zero_noise_runs_recommend_the_best_safe_arm() {
    let inst = hard_instance(3, 0.1, -0.5, 0.2).unwrap();
    let (best, g_star, v_star) = best_safe_arm(&inst);
    for variant in ALL_VARIANTS {
        let cfg = zero_noise_config(&inst, variant);
        let rec = run_seeded(&inst, &cfg, (0.0, 0.0), 1);
        assert_eq!(rec.status, RunStatus::Stopped, "{variant:?}");
        let a = rec.recommended;
        let value = a.coefficient * dot(inst.arm(a.arm), inst.theta_star());
        let g_bar = rec.gamma_bar_final[best];
        // slack from the pessimistic scaling of the optimal arm, plus ε
        let slack = (1.0 - g_bar / g_star) * v_star + cfg.epsilon;
        assert!(v_star - value <= slack + 1e-12, "{variant:?}: {value}");
        if variant == Variant::SafeConservative {
            assert_eq!((a.arm, a.coefficient), (0, 1.0));
        }
    }
}

#[test]
fn exact_knowledge_is_epsilon_correct() {
    let inst = hard_instance(4, 0.1, -0.5, 0.2).unwrap();
    let (_, _, v_star) = best_safe_arm(&inst);
    for variant in ALL_VARIANTS {
        let mut cfg = zero_noise_config(&inst, variant);
        cfg.exact_estimates = true;
        let rec = run_seeded(&inst, &cfg, (0.0, 0.0), 2);
        let a = rec.recommended;
        let value = a.coefficient * dot(inst.arm(a.arm), inst.theta_star());
        assert!(v_star - value <= cfg.epsilon, "{variant:?}");
        assert_eq!(rec.tau, 0);
    }
}

#[test]
fn recommendation_sits_in_final_safe_set() {
    let inst = hard_instance(3, 0.1, -0.5, 0.2).unwrap();
    for variant in ALL_VARIANTS {
        let mut cfg = AlgoConfig::for_instance(&inst, hard_eps());
        cfg.variant = variant;
        let rec = run_seeded(&inst, &cfg, (1.0, 0.1), 11);
        let a = rec.recommended;
        assert_eq!(a.coefficient, rec.gamma_bar_final[a.arm], "{variant:?}");
        let bai: Vec<_> = rec.pulls.iter().filter(|p| p.phase == Phase::BAI).collect();
        assert_eq!(bai.len(), rec.tau);
        assert_eq!(rec.wall_rounds_total, rec.pulls.len());
        let frac = bai.iter().filter(|p| p.violated).count() as f64 / bai.len().max(1) as f64;
        assert!((rec.unsafe_fraction - frac).abs() < 1e-15);
        let all = rec.pulls.iter().filter(|p| p.violated).count() as f64 / rec.pulls.len() as f64;
        assert!((rec.unsafe_fraction_all - all).abs() < 1e-15);
        assert!(rec.pulls.iter().enumerate().all(|(i, p)| p.round == i + 1));
    }
}

#[test]
fn truncation_is_reported_not_thrown() {
    let inst = hard_instance(3, 0.1, -0.5, 0.2).unwrap();
    let mut cfg = AlgoConfig::for_instance(&inst, hard_eps());
    cfg.max_rounds = 5;
    let rec = run_seeded(&inst, &cfg, (1.0, 0.1), 3);
    assert_eq!(rec.status, RunStatus::Truncated);
    assert_eq!(rec.tau, 5);
}

#[test]
fn invalid_config_is_rejected() {
    let inst = hard_instance(3, 0.1, -0.5, 0.2).unwrap();
    let mut env = Environment::seeded(inst.clone(), 1.0, 0.1, 0).unwrap();
    let mut cfg = AlgoConfig::for_instance(&inst, hard_eps());
    cfg.epsilon = 0.0;
    assert!(run(&mut env, &mut rng(0), &cfg).is_err());
    cfg.epsilon = 0.1;
    cfg.delta_r = 1.0;
    assert!(run(&mut env, &mut rng(0), &cfg).is_err());
    cfg.delta_r = 0.01;
    cfg.max_rounds = 0;
    assert!(run(&mut env, &mut rng(0), &cfg).is_err());
}

#[test]
fn safe_variants_do_not_violate() {
    let inst = hard_instance(3, 0.1, -0.5, 0.2).unwrap();
    for variant in [Variant::SafeConservative, Variant::SafeOptimistic, Variant::SafeFixed] {
        for seed in 0..5 {
            let mut cfg = AlgoConfig::for_instance(&inst, hard_eps());
            cfg.variant = variant;
            let rec = run_seeded(&inst, &cfg, (1.0, 0.1), 100 + seed);
            assert_eq!(rec.pulls.iter().filter(|p| p.violated).count(), 0, "{variant:?} seed {seed}");
        }
    }
}

#[test]
fn safe_conservative_is_slower_than_baseline() {
    let inst = hard_instance(3, 0.1, -0.5, 0.2).unwrap();
    let mean_tau = |variant| {
        let mut cfg = AlgoConfig::for_instance(&inst, hard_eps());
        cfg.variant = variant;
        (0..10).map(|s| run_seeded(&inst, &cfg, (1.0, 0.1), 500 + s).tau as f64).sum::<f64>() / 10.0
    };
    let (safe, base) = (mean_tau(Variant::SafeConservative), mean_tau(Variant::Lingape));
    assert!(safe > base, "safe {safe} vs baseline {base}");
}

#[test]
fn optimistic_variant_pulls_pessimistic_coefficients() {
    let inst = hard_instance(3, 0.1, -0.5, 0.2).unwrap();
    for criterion in [Criterion::G, Criterion::R] {
        let mut cfg = AlgoConfig::for_instance(&inst, hard_eps());
        cfg.variant = Variant::SafeOptimistic;
        cfg.criterion = criterion;
        let mut env = Environment::seeded(inst.clone(), 1.0, 0.1, 4).unwrap();
        let mut checked = 0;
        run_observed(&mut env, &mut rng(4), &cfg, &mut |v| {
            assert!(v.action.coefficient <= v.profile.gamma_bar[v.action.arm]);
            checked += 1;
        })
        .unwrap();
        assert!(checked > 0);
    }
}

#[test]
fn frozen_profile_never_changes() {
    let inst = hard_instance(3, 0.1, -0.5, 0.2).unwrap();
    let mut cfg = AlgoConfig::for_instance(&inst, hard_eps());
    cfg.dynamic_gamma = false;
    cfg.max_rounds = 100;
    let mut env = Environment::seeded(inst, 1.0, 0.1, 8).unwrap();
    let mut first = None;
    let mut rounds = 0;
    run_observed(&mut env, &mut rng(8), &cfg, &mut |v| {
        let p = v.profile.clone();
        assert!(p.frozen);
        match &first {
            None => first = Some(p),
            Some(f) => assert_eq!(&p, f),
        }
        rounds += 1;
    })
    .unwrap();
    assert_eq!(rounds, 100);
}

#[test]
fn counts_grow_by_squared_coefficient() {
    let inst = hard_instance(3, 0.1, -0.5, 0.2).unwrap();
    let cfg = AlgoConfig::for_instance(&inst, hard_eps());
    let mut env = Environment::seeded(inst, 1.0, 0.1, 9).unwrap();
    let mut prev: Option<Vec<f64>> = None;
    run_observed(&mut env, &mut rng(9), &cfg, &mut |v| {
        let n = &v.counts.n;
        if let Some(p) = &prev {
            for k in 0..n.len() {
                let inc = n[k] - p[k];
                if k == v.action.arm {
                    assert!((inc - v.action.coefficient.powi(2)).abs() < 1e-12);
                } else {
                    assert_eq!(inc, 0.0);
                }
            }
        }
        prev = Some(n.clone());
    })
    .unwrap();
}

#[test]
fn key_lemma_holds_along_rounding_runs() {
    for (d, seed) in [(3usize, 1u64), (4, 2), (5, 3)] {
        let inst = hard_instance(d, 0.1, -0.5, 0.2).unwrap();
        let mut cfg = AlgoConfig::for_instance(&inst, hard_eps());
        cfg.criterion = Criterion::R;
        cfg.max_rounds = 3000;
        let mut env = Environment::seeded(inst, 1.0, 0.1, seed).unwrap();
        let mut checked = 0;
        run_observed(&mut env, &mut rng(seed), &cfg, &mut |v| {
            let alloc = v.allocation.expect("criterion R exposes its allocation");
            if alloc.degenerate {
                return;
            }
            let lhs = v.estimator.design().mahalanobis_inv(&v.direction.y).unwrap();
            let n_y = v.counts.effective_count(&alloc.weights, &v.profile.gamma_bar);
            let rhs = (alloc.l1_norm / n_y).sqrt();
            assert!(lhs <= rhs * (1.0 + 1e-9), "round {}: {lhs} > {rhs}", v.round);
            checked += 1;
        })
        .unwrap();
        assert!(checked > 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smaller_radius_never_raises_b(seed in any::<u64>(), r1 in 0.0..5.0f64, r2 in 0.0..5.0f64) {
        let mut r = rng(seed);
        let arms: Vec<Vec<f64>> = (0..5).map(|_| gaussian_vec(&mut r, 3)).collect();
        let mut design = PosDefState::new(3, 1.0).unwrap();
        for _ in 0..4 {
            design.rank1_update(&gaussian_vec(&mut r, 3)).unwrap();
        }
        let th = gaussian_vec(&mut r, 3);
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        let b_lo = select_direction(&th, &design, &arms, lo).unwrap().b;
        let b_hi = select_direction(&th, &design, &arms, hi).unwrap().b;
        prop_assert!(b_lo <= b_hi + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn equal_seeds_give_identical_runs(seed in any::<u64>(), vi in 0usize..4, crit in any::<bool>()) {
        let inst = hard_instance(3, 0.1, -0.5, 0.2).unwrap();
        let mut cfg = AlgoConfig::for_instance(&inst, hard_eps());
        cfg.variant = ALL_VARIANTS[vi];
        cfg.criterion = if crit { Criterion::R } else { Criterion::G };
        cfg.max_rounds = 2000;
        let a = run_seeded(&inst, &cfg, (1.0, 0.1), seed);
        let b = run_seeded(&inst, &cfg, (1.0, 0.1), seed);
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
