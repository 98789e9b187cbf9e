//! Fixed inputs shared by the benchmarks.

use wiretap_core::{Distribution, Dmc, WiretapCode, WiretapKernel};

/// BSC(0.1) to the receiver, a further BSC(0.2) to the eavesdropper.
pub fn cascade() -> WiretapKernel {
    WiretapKernel::degraded(&Dmc::bsc(0.1).unwrap(), &Dmc::bsc(0.2).unwrap()).unwrap()
}

pub fn binary_pair() -> (Dmc, Dmc) {
    (Dmc::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap(), Dmc::new(vec![vec![0.6, 0.4], vec![0.7, 0.3]]).unwrap())
}

/// Skewed law on `k` symbols with distinct likelihood ratios against uniform.
pub fn skewed(k: usize) -> Distribution {
    let w: Vec<f64> = (1..=k).map(|i| i as f64).collect();
    Distribution::from_weights(&w).unwrap()
}

/// Feedback code of length `n`: the sender XORs the message with the last
/// fed-back output bit and the receiver takes a majority vote.
pub fn feedback_code(n: usize) -> WiretapCode {
    WiretapCode::from_fns(
        n,
        2,
        2,
        2,
        2,
        Distribution::uniform(1),
        Distribution::new(vec![0.5, 0.5]).unwrap(),
        |t, m, _, f| (m + f[t]) % 2,
        |t, y, u| if t == 0 { u } else { y[t - 1] },
        |y| usize::from(2 * y.iter().sum::<usize>() > y.len()),
    )
    .unwrap()
}
