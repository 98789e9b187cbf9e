mod common;

use std::time::Instant;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wiretap_core::wiretap::{
    capacity_formula, channel_capacity, check_degraded, converse_bound, default_v, induced_v1, max_cmi,
    max_cmi_multistart, max_cmi_with, minimax_identity_check, sk_reduction_check, v1_divergence, BetaMethod,
    CapacityCase, MaxCmiOptions, DEGRADED_TOL,
};
use wiretap_core::{random, Caps, Distribution, Dmc, Error, JointDistribution, WiretapKernel};

fn cascade() -> WiretapKernel {
    WiretapKernel::degraded(&Dmc::bsc(0.1).unwrap(), &Dmc::bsc(0.2).unwrap()).unwrap()
}

/// Largest `I(X;Y|Z)` over the simplex lattice with spacing `1/steps`.
fn grid_oracle(w: &WiretapKernel, steps: usize) -> f64 {
    let eval = |weights: &[f64]| cmi_oracle(&w.joint(&Distribution::from_weights(weights).unwrap()).unwrap());
    let mut best = f64::NEG_INFINITY;
    match w.input_size() {
        2 => {
            for i in 0..=steps {
                best = best.max(eval(&[i as f64, (steps - i) as f64]));
            }
        }
        3 => {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    best = best.max(eval(&[i as f64, j as f64, (steps - i - j) as f64]));
                }
            }
        }
        _ => unreachable!(),
    }
    best
}

#[test]
fn cascade_closed_form() {
    assert!((h2(0.26) - h2(0.1) - CASCADE_CMI).abs() < 1e-15);
    let r = max_cmi(&cascade(), 1e-12).unwrap().require_converged().unwrap();
    assert!((r.value - CASCADE_CMI).abs() <= 1e-6);
    for &p in r.p_star.probs() {
        assert!((p - 0.5).abs() <= 1e-4);
    }
    let m = max_cmi_multistart(&cascade(), &MaxCmiOptions::default(), 20, 3).unwrap();
    assert!(m.spread <= 1e-8);
    assert_eq!(m.values.len(), 20);
}

#[test]
fn eavesdropper_seeing_y_leaves_nothing() {
    let w = WiretapKernel::eavesdropper_sees_y(&Dmc::bsc(0.1).unwrap()).unwrap();
    assert!(max_cmi(&w, 1e-12).unwrap().value.abs() < 1e-12);
    let rep = check_degraded(&w, DEGRADED_TOL);
    assert!(rep.is_degraded);
    let opts = MaxCmiOptions::default();
    for n in 1..=2 {
        let b = converse_bound(&w, 0.05, 0.05, 0.1, n, None, &Caps::default(), &opts).unwrap();
        assert!(b.bound_bits >= 0.0);
    }
}

#[test]
fn grid_search_agrees_with_ascent() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..6 {
        let xs = 2 + trial % 2;
        let w = random::kernel(&mut rng, xs, 2, 2);
        let steps = if xs == 2 { 1000 } else { 200 };
        let grid = grid_oracle(&w, steps);
        let r = max_cmi(&w, 1e-12).unwrap();
        assert!(r.converged);
        assert!(r.value >= grid - 1e-12);
        // the lattice misses the optimum by at most a second-order amount
        assert!(r.value - grid <= 1e-3, "{} vs {}", r.value, grid);
    }
}

#[test]
fn degraded_recovery_and_rejection() {
    let w1 = Dmc::new(vec![vec![1.0, 0.0], vec![0.3, 0.7]]).unwrap();
    let w2 = Dmc::new(vec![vec![0.9, 0.1], vec![0.25, 0.75]]).unwrap();
    let rep = check_degraded(&WiretapKernel::degraded(&w1, &w2).unwrap(), DEGRADED_TOL);
    assert!(rep.is_degraded);
    let got = rep.w2.unwrap();
    for y in 0..2 {
        for z in 0..2 {
            assert!((got.prob(y, z) - w2.prob(y, z)).abs() < 1e-12);
        }
    }
    let indep = WiretapKernel::independent(&Dmc::bsc(0.2).unwrap(), &Dmc::bsc(0.2).unwrap()).unwrap();
    let rep = check_degraded(&indep, DEGRADED_TOL);
    assert!(!rep.is_degraded && rep.w2.is_none() && rep.max_deviation > 0.1);
    assert!(matches!(capacity_formula(&indep, 0.1, 0.1, &MaxCmiOptions::default()), Err(Error::NotDegraded)));
}

#[test]
fn capacity_case_split() {
    let opts = MaxCmiOptions::default();
    let s = capacity_formula(&cascade(), 0.1, 0.1, &opts).unwrap();
    assert_eq!(s.case, CapacityCase::Secrecy);
    assert!((s.value - CASCADE_CMI).abs() < 1e-8);
    let c = capacity_formula(&cascade(), 0.6, 0.5, &opts).unwrap();
    assert_eq!(c.case, CapacityCase::Channel);
    assert!((c.value - (1.0 - H_010)).abs() < 1e-8);
    assert!((channel_capacity(&Dmc::bsc(0.1).unwrap(), &opts).unwrap() - (1.0 - H_010)).abs() < 1e-8);
    assert!(capacity_formula(&cascade(), 0.0, 0.1, &opts).is_err());
}

#[test]
fn converse_bound_methods() {
    let opts = MaxCmiOptions::default();
    let caps = Caps::default();
    let w = cascade();
    let mut last = f64::INFINITY;
    for eta in [0.05, 0.1, 0.2] {
        let b = converse_bound(&w, 0.05, 0.05, eta, 2, None, &caps, &opts).unwrap();
        assert_eq!(b.method, BetaMethod::ActiveExact);
        assert!(!b.surrogate);
        assert!(b.beta_value <= b.beta_deterministic.unwrap() + 1e-12);
        let want = -b.beta_value.log2() + 2.0 * (1.0 / eta).log2();
        assert!((b.bound_bits - want).abs() < 1e-12);
        assert!(b.bound_bits < last);
        last = b.bound_bits;
    }
    let b = converse_bound(&w, 0.05, 0.05, 0.1, 3, None, &caps, &opts).unwrap();
    assert_eq!(b.method, BetaMethod::FixedInputSurrogate);
    assert!(b.surrogate && b.x_star.is_some());
    assert!(matches!(converse_bound(&w, 0.5, 0.4, 0.2, 1, None, &caps, &opts), Err(Error::ParameterDomain(_))));
}

#[test]
fn surrogate_rate_tracks_max_cmi_at_2000() {
    let start = Instant::now();
    let b =
        converse_bound(&cascade(), 0.05, 0.05, 0.1, 2000, None, &Caps::default(), &MaxCmiOptions::default()).unwrap();
    assert!(b.surrogate);
    assert!((b.per_symbol_rate - CASCADE_CMI).abs() <= 0.1, "{}", b.per_symbol_rate);
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn default_v_structure() {
    let w = cascade();
    let v = default_v(&w, &Distribution::uniform(2)).unwrap();
    assert_eq!(v.v2, w.z_marginal());
    // Y is uniform, so Z -> Y is the reversed BSC(0.2)
    assert!((v.v1.prob(0, 0) - 0.8).abs() < 1e-12);
    assert!((v.v1.prob(1, 1) - 0.8).abs() < 1e-12);
    let composed = v.compose();
    assert_eq!(composed.input_size(), 2);
}

#[test]
fn minimax_a_few_kernels() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        let w = random::positive_kernel(&mut rng, 2, 2, 2);
        let r = minimax_identity_check(&w, &MaxCmiOptions::default()).unwrap();
        assert!(r.gap <= 1e-6, "{r:?}");
    }
}

#[test]
fn kernel_json_schema() {
    let w: WiretapKernel =
        serde_json::from_str(r#"{"y_size":2,"z_size":2,"rows":[[0.72,0.18,0.02,0.08],[0.08,0.02,0.18,0.72]]}"#)
            .unwrap();
    let c = cascade();
    for x in 0..2 {
        for cell in 0..4 {
            assert!((w.as_dmc().prob(x, cell) - c.as_dmc().prob(x, cell)).abs() < 1e-15);
        }
    }
    assert!(serde_json::from_str::<WiretapKernel>(r#"{"y_size":2,"z_size":3,"rows":[[0.5,0.5,0,0]]}"#).is_err());
    let back: WiretapKernel = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
    assert_eq!(back, w);
}

#[test]
fn sk_rejects_unfactorized_q() {
    let p = JointDistribution::new(vec![2, 2, 1], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
    assert!(matches!(sk_reduction_check(&p, 2, 0.0, 0.0, 0.5, &p), Err(Error::HypothesisViolation(_))));
    let q = JointDistribution::new(vec![2, 2, 1], vec![0.25; 4]).unwrap();
    let r = sk_reduction_check(&p, 2, 0.0, 0.0, 0.5, &q).unwrap();
    assert!(r.holds);
    // a perfect key with a uniform product Q: beta = 1/2 at level eta
    assert!((r.beta - 0.25).abs() < 1e-15);
    assert!(matches!(sk_reduction_check(&p, 2, 0.0, 0.0, 1.0, &q), Err(Error::ParameterDomain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn v1_minimizer(seed in any::<u64>(), xs in 1usize..4, ys in 1usize..4, zs in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random::kernel(&mut rng, xs, ys, zs);
        let p = random::distribution(&mut rng, xs);
        let at = v1_divergence(&w, &p, &induced_v1(&w, &p).unwrap()).unwrap();
        prop_assert!((at - cmi_oracle(&w.joint(&p).unwrap())).abs() < 1e-10);
        let other = random::dmc(&mut rng, zs, ys);
        prop_assert!(v1_divergence(&w, &p, &other).unwrap() >= at - 1e-12);
    }

    #[test]
    fn degraded_kernels_recognized(seed in any::<u64>(), xs in 1usize..4, ys in 1usize..4, zs in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1 = random::dmc(&mut rng, xs, ys);
        let w2 = random::dmc(&mut rng, ys, zs);
        let w = WiretapKernel::degraded(&w1, &w2).unwrap();
        let rep = check_degraded(&w, DEGRADED_TOL);
        prop_assert!(rep.is_degraded);
        let rebuilt = WiretapKernel::degraded(&w.y_marginal(), &rep.w2.unwrap()).unwrap();
        for x in 0..xs {
            for y in 0..ys {
                for z in 0..zs {
                    prop_assert!((rebuilt.prob(x, y, z) - w.prob(x, y, z)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn ascent_certificate_is_honest(seed in any::<u64>(), xs in 2usize..4, ys in 1usize..4, zs in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random::kernel(&mut rng, xs, ys, zs);
        let start = random::distribution(&mut rng, xs);
        let r = max_cmi_with(&w, &MaxCmiOptions::default(), &start).unwrap();
        prop_assert!(r.converged);
        // no random law beats the certified value by more than the gap
        for _ in 0..20 {
            let p = random::distribution(&mut rng, xs);
            prop_assert!(cmi_oracle(&w.joint(&p).unwrap()) <= r.value + r.gap + 1e-12);
        }
        prop_assert!(rng.random::<f64>() >= 0.0);
    }
}
