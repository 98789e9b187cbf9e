mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wiretap_core::prob::total_variation_of;
use wiretap_core::protocol::{
    execute_exact, factorization_check, message_decoder_cmi, metrics, simulate, validate_converse, ComponentMap,
    DeterministicCodeSpace,
};
use wiretap_core::wiretap::MaxCmiOptions;
use wiretap_core::{random, Caps, Distribution, Dmc, Error, WiretapCode, WiretapKernel};

fn cascade() -> WiretapKernel {
    WiretapKernel::degraded(&Dmc::bsc(0.1).unwrap(), &Dmc::bsc(0.2).unwrap()).unwrap()
}

fn majority(y: &[usize]) -> usize {
    usize::from(y.iter().sum::<usize>() * 2 > y.len())
}

fn repetition3() -> WiretapCode {
    WiretapCode::open_loop(2, 2, 2, &[vec![0, 0, 0], vec![1, 1, 1]], majority).unwrap()
}

/// Two rounds; the receiver echoes `y_1` and the sender repeats it.
fn echo_code() -> WiretapCode {
    WiretapCode::from_fns(
        2,
        2,
        2,
        2,
        2,
        Distribution::uniform(1),
        Distribution::new(vec![0.3, 0.7]).unwrap(),
        |t, m, _, f| if t == 0 { m ^ f[0] } else { f[1] },
        |t, y, uy| if t == 0 { uy } else { y[t - 1] },
        |y| y[0] ^ y[1],
    )
    .unwrap()
}

#[test]
fn repetition_code_closed_forms() {
    let pj = execute_exact(&repetition3(), &cascade(), &Caps::default()).unwrap();
    let m = metrics(&pj, majority).unwrap();
    let p: f64 = 0.1;
    assert!((m.error_prob - (3.0 * p * p * (1.0 - p) + p.powi(3))).abs() < 1e-15);
    // Z^3 given M is three uses of BSC(0.26)
    let q: f64 = 0.26;
    let pz = |m: usize, z: &[usize]| -> f64 { z.iter().map(|&zi| if zi == m { 1.0 - q } else { q }).product() };
    let mut tv = 0.0;
    for z in sequences(2, 3) {
        let marg = 0.5 * (pz(0, &z) + pz(1, &z));
        for msg in 0..2 {
            tv += (0.5 * pz(msg, &z) - 0.5 * marg).abs();
        }
    }
    assert!((m.leakage - tv / 2.0).abs() < 1e-15);
}

#[test]
fn message_is_uniform_and_joint_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let code = random::code(&mut rng, 2, 3, 2, 2, 2, 2, 2);
    let pj = execute_exact(&code, &random::kernel(&mut rng, 2, 2, 2), &Caps::default()).unwrap();
    for &p in pj.joint.marginal(&[ComponentMap::M]).unwrap().probs() {
        assert!((p - 1.0 / 3.0).abs() < 1e-15);
    }
    assert!((pj.joint.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(pj.joint.sizes().len(), 1 + 4 * 2);
}

#[test]
fn feedback_timing() {
    let code = echo_code();
    let pj = execute_exact(&code, &cascade(), &Caps::default()).unwrap();
    let map = pj.map;
    // X_2 equals Y_1 almost surely, and F_0 carries only the receiver's coin
    let x2y1 = pj.joint.marginal(&[map.x(1), map.y(0)]).unwrap();
    assert_eq!(x2y1.prob(&[0, 1]) + x2y1.prob(&[1, 0]), 0.0);
    let f0 = pj.joint.marginal(&[map.f(0)]).unwrap();
    assert!((f0.probs()[1] - 0.7).abs() < 1e-15);
    let f0m = pj.joint.marginal(&[ComponentMap::M, map.f(0)]).unwrap();
    assert!((f0m.prob(&[1, 1]) - 0.35).abs() < 1e-15);
    let f1y1 = pj.joint.marginal(&[map.f(1), map.y(0)]).unwrap();
    assert_eq!(f1y1.prob(&[0, 1]) + f1y1.prob(&[1, 0]), 0.0);
}

#[test]
fn monte_carlo_agrees_with_exact() {
    let code = echo_code();
    let w = cascade();
    let exact = execute_exact(&code, &w, &Caps::default()).unwrap();
    let trials = 1_000_000;
    let mc = simulate(&code, &w, trials, 99).unwrap();
    assert_eq!(mc.sizes, exact.joint.sizes());
    let mut empirical = vec![0.0; exact.joint.probs().len()];
    for (&cell, &c) in &mc.counts {
        empirical[cell] = c as f64 / trials as f64;
    }
    assert!(total_variation_of(exact.joint.probs(), &empirical).unwrap() <= 0.005);
    let err = metrics(&exact, |y| code.decode(y)).unwrap().error_prob;
    let est = mc.error_estimate(|y| code.decode(y));
    assert!(est.lo <= err && err <= est.hi, "{est:?} vs {err}");
    assert!((est.hi - est.value - 3.0 * est.std_err).abs() < 1e-15);
}

#[test]
fn monte_carlo_is_seeded() {
    let code = echo_code();
    let a = simulate(&code, &cascade(), 200_000, 5).unwrap();
    let b = simulate(&code, &cascade(), 200_000, 5).unwrap();
    let c = simulate(&code, &cascade(), 200_000, 6).unwrap();
    assert_eq!(a.counts, b.counts);
    assert_ne!(a.counts, c.counts);
}

#[test]
fn factorization_negative_control() {
    let w = WiretapKernel::independent(&Dmc::bsc(0.2).unwrap(), &Dmc::bsc(0.2).unwrap()).unwrap();
    let code = WiretapCode::open_loop(2, 2, 2, &[vec![0], vec![1]], |y| y[0]).unwrap();
    let v = message_decoder_cmi(&code, &w, &Caps::default()).unwrap();
    assert!((v - INDEPENDENT_CONTROL).abs() < 1e-12);
    assert!((h2(0.32) - h2(0.2) - INDEPENDENT_CONTROL).abs() < 1e-15);
    assert!(v > 0.01);
}

#[test]
fn code_space_enumeration() {
    let space = DeterministicCodeSpace::new(1, 2, 2, 2, 2);
    assert_eq!(space.count(), 128);
    let mut seen = std::collections::HashSet::new();
    for r in 0..space.count() {
        let c = space.code(r);
        assert!(seen.insert(serde_json::to_string(&c).unwrap()));
    }
    assert_eq!(DeterministicCodeSpace::new(2, 2, 2, 2, 2).count(), 524_288);
}

#[test]
fn repetition_code_satisfies_converse() {
    let opts = MaxCmiOptions::default();
    for eta in [0.05, 0.1, 0.2] {
        let code = WiretapCode::open_loop(2, 2, 2, &[vec![0, 0], vec![1, 1]], |y| y[0]).unwrap();
        let r = validate_converse(&code, &cascade(), eta, &Caps::default(), &opts).unwrap();
        assert!(r.holds && r.chain_holds, "{r:?}");
        assert_eq!(r.log_n, 1.0);
    }
}

#[test]
fn code_json_schema_and_validation() {
    let code = echo_code();
    let text = serde_json::to_string(&code).unwrap();
    let back: WiretapCode = serde_json::from_str(&text).unwrap();
    assert_eq!(back, code);
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["decoder"][0] = serde_json::json!(7);
    assert!(serde_json::from_value::<WiretapCode>(v).is_err());
    assert!(matches!(WiretapCode::open_loop(2, 2, 2, &[vec![0, 0], vec![1]], majority), Err(Error::InvalidCode(_))));
}

#[test]
fn protocol_caps_enforced() {
    let caps = Caps { protocol_states: 10, ..Caps::default() };
    assert!(matches!(execute_exact(&repetition3(), &cascade(), &caps), Err(Error::SizeOverflow { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn factorized_channels_hide_decoder(seed in any::<u64>(), n in 1usize..4, uxs in 1usize..3, uys in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let code = random::code(&mut rng, n, 2, 2, 2, 2, uxs, uys);
        let v = random::factorized(&mut rng, 2, 2, 2);
        prop_assert!(factorization_check(&code, &v, &Caps::default()).unwrap() <= 1e-9);
    }

    #[test]
    fn error_matches_sequence_sum(seed in any::<u64>(), n in 1usize..3, msgs in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let code = random::code(&mut rng, n, msgs, 2, 2, 2, 1, 1);
        let w = random::kernel(&mut rng, 2, 2, 2);
        let pj = execute_exact(&code, &w, &Caps::default()).unwrap();
        let got = metrics(&pj, |y| code.decode(y)).unwrap().error_prob;
        // without local randomness: walk (m, y^n, z^n) and replay the tables
        let mut correct = 0.0;
        for m in 0..msgs {
            for y in sequences(2, n) {
                for z in sequences(2, n) {
                    let mut f = vec![code.feedback(0, &[], 0)];
                    let mut p = 1.0 / msgs as f64;
                    for t in 0..n {
                        let x = code.encode(t, m, 0, &f);
                        p *= w.prob(x, y[t], z[t]);
                        if t + 1 < n {
                            f.push(code.feedback(t + 1, &y[..t + 1], 0));
                        }
                    }
                    if code.decode(&y) == m {
                        correct += p;
                    }
                }
            }
        }
        prop_assert!((got - (1.0 - correct)).abs() < 1e-12);
    }
}
