mod common;

use common::*;
use proptest::prelude::*;
use wiretap_core::prob::{
    conditional_mutual_information, entropy, kl_divergence, mutual_information, product_power, push_through_kernel,
    total_variation, total_variation_of,
};
use wiretap_core::{Caps, Distribution, Dmc, Error, JointDistribution};

#[test]
fn kl_reference_value() {
    let p = Distribution::new(vec![0.5, 0.5]).unwrap();
    let q = Distribution::new(vec![0.9, 0.1]).unwrap();
    assert!((kl_divergence(&p, &q).unwrap() - D_HALF_VS_09).abs() < 1e-15);
}

#[test]
fn kl_infinite_off_support() {
    let p = Distribution::new(vec![0.5, 0.5]).unwrap();
    let q = Distribution::point(2, 0);
    assert_eq!(kl_divergence(&p, &q).unwrap(), f64::INFINITY);
    assert_eq!(kl_divergence(&q, &p).unwrap(), 1.0);
}

#[test]
fn binary_entropy_matches_reference() {
    let p = Distribution::new(vec![0.1, 0.9]).unwrap();
    assert!((entropy(&p) - H_010).abs() < 1e-15);
    assert!((h2(0.26) - H_026).abs() < 1e-15);
}

#[test]
fn invalid_distributions_rejected() {
    assert!(matches!(Distribution::new(vec![0.5, 0.6]), Err(Error::InvalidDistribution(_))));
    assert!(matches!(Distribution::new(vec![1.5, -0.5]), Err(Error::InvalidDistribution(_))));
    assert!(Distribution::new(vec![]).is_err());
    assert!(Dmc::new(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
    assert!(JointDistribution::new(vec![2, 2], vec![0.5, 0.5]).is_err());
}

#[test]
fn json_schemas_round_trip() {
    let d: Distribution = serde_json::from_str(r#"{"probs":[0.25,0.75]}"#).unwrap();
    assert_eq!(d.probs(), &[0.25, 0.75]);
    let w: Dmc = serde_json::from_str(r#"{"rows":[[0.9,0.1],[0.2,0.8]]}"#).unwrap();
    assert_eq!(w.prob(1, 1), 0.8);
    let back: Dmc = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
    assert_eq!(back, w);
    assert!(serde_json::from_str::<Distribution>(r#"{"probs":[0.3,0.3]}"#).is_err());
    assert!(serde_json::from_str::<Dmc>(r#"{"rows":[[0.9,0.1],[0.2]]}"#).is_err());
}

#[test]
fn product_cap_enforced() {
    let p = Distribution::uniform(4);
    let caps = Caps { outcome_cells: 100, ..Caps::default() };
    assert!(matches!(product_power(&p, 4, &caps), Err(Error::SizeOverflow { .. })));
    assert!(product_power(&p, 3, &caps).is_ok());
}

proptest! {
    #[test]
    fn kl_nonnegative_and_matches_sum((p, q) in dist_pair(8)) {
        let d = kl_divergence(&p, &q).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-15);
        let mut oracle = 0.0;
        for (a, b) in p.probs().iter().zip(q.probs()) {
            if *a > 0.0 {
                oracle += if *b > 0.0 { a * (a / b).log2() } else { f64::INFINITY };
            }
        }
        if oracle.is_finite() {
            prop_assert!((d - oracle).abs() <= 1e-12 * oracle.max(1.0));
        } else {
            prop_assert!(d.is_infinite());
        }
    }

    #[test]
    fn tv_is_a_metric_and_matches_subsets((p, q) in dist_pair(8), seed in any::<u64>()) {
        let tv = total_variation_of(p.probs(), q.probs()).unwrap();
        prop_assert!((tv - total_variation_of(q.probs(), p.probs()).unwrap()).abs() < 1e-15);
        prop_assert!((tv - tv_subset_oracle(p.probs(), q.probs())).abs() < 1e-12);
        prop_assert!(total_variation_of(p.probs(), p.probs()).unwrap() == 0.0);
        // triangle inequality through a third law
        let r: Vec<f64> = (0..p.alphabet_size()).map(|i| ((seed >> (i % 60)) & 7) as f64 + 1.0).collect();
        let r = Distribution::from_weights(&r).unwrap();
        let via = total_variation_of(p.probs(), r.probs()).unwrap() + total_variation_of(r.probs(), q.probs()).unwrap();
        prop_assert!(tv <= via + 1e-15);
        prop_assert!((0.0..=1.0).contains(&tv));
    }

    #[test]
    fn cmi_matches_double_sum(j in (1usize..4, 1usize..4, 1usize..4).prop_flat_map(|(a, b, c)| joint(vec![a, b, c]))) {
        let v = conditional_mutual_information(&j, 0, 1, 2).unwrap();
        prop_assert!((v - cmi_oracle(&j)).abs() < 1e-10);
        prop_assert!(v >= 0.0);
    }

    #[test]
    fn mutual_information_entropy_identity(j in (1usize..5, 1usize..5).prop_flat_map(|(a, b)| joint(vec![a, b]))) {
        let hx = entropy(&j.marginal(&[0]).unwrap().to_distribution());
        let hy = entropy(&j.marginal(&[1]).unwrap().to_distribution());
        let hxy = entropy(&j.to_distribution());
        prop_assert!((mutual_information(&j, 0, 1).unwrap() - (hx + hy - hxy)).abs() < 1e-10);
    }

    #[test]
    fn product_marginals_and_entropy_chain(p in dist(4), n in 1usize..5) {
        let pn = product_power(&p, n, &Caps::default()).unwrap();
        prop_assert_eq!(pn.sizes().len(), n);
        for i in 0..n {
            let m = pn.marginal(&[i]).unwrap();
            for (a, b) in m.probs().iter().zip(p.probs()) {
                prop_assert!((a - b).abs() < 1e-14);
            }
        }
        prop_assert!((entropy(&pn.to_distribution()) - n as f64 * entropy(&p)).abs() < 1e-9);
    }

    #[test]
    fn kernel_push_gives_output_law(p in dist(4), w in (1usize..5).prop_flat_map(|ys| dmc(4, ys))) {
        let p = Distribution::from_weights(&[p.probs(), &[0.0; 4]].concat()[..4]).unwrap();
        let j = push_through_kernel(&p, &w).unwrap();
        let out = j.marginal(&[1]).unwrap();
        for y in 0..w.output_size() {
            let direct: f64 = (0..4).map(|x| p.prob(x) * w.prob(x, y)).sum();
            prop_assert!((out.probs()[y] - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn tv_data_processing((p, q) in dist_pair(4), w in (1usize..5).prop_flat_map(|ys| dmc(4, ys))) {
        let pad = |d: &Distribution| Distribution::from_weights(&[d.probs(), &[0.0; 4]].concat()[..4]).unwrap();
        let (p, q) = (pad(&p), pad(&q));
        let (pj, qj) = (push_through_kernel(&p, &w).unwrap(), push_through_kernel(&q, &w).unwrap());
        let before = total_variation_of(p.probs(), q.probs()).unwrap();
        let after = total_variation(&pj.marginal(&[1]).unwrap(), &qj.marginal(&[1]).unwrap()).unwrap();
        prop_assert!(after <= before + 1e-15);
    }
}
