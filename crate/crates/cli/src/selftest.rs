//! The invariant suite behind `selftest`: every module property at reduced
//! trial counts, each with its own seeded random stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wiretap_core::discrimination::{
    beta_active_bruteforce, beta_best_fixed_input, beta_open_loop_bruteforce, conditional_divergence,
    discrimination_exponent, induced_output_law, ActiveEnvelope,
};
use wiretap_core::np::beta_exact_of;
use wiretap_core::prob::{
    conditional_mutual_information, entropy, kl_divergence, product_power, push_through_kernel, total_variation,
    JointDistribution,
};
use wiretap_core::protocol::{execute_exact, factorization_check, metrics, simulate, ComponentMap, ConverseValidator};
use wiretap_core::wiretap::{
    check_degraded, induced_v1, max_cmi_multistart, minimax_identity_check, sk_reduction_check, v1_divergence,
    MaxCmiOptions, DEGRADED_TOL,
};
use wiretap_core::{beta_exact, beta_product_iid, random, Caps, Distribution, Dmc, WiretapKernel};

use crate::table::ResultTable;

#[derive(Debug, Clone, Default)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Multiplier on the default trial counts.
    pub scale: f64,
    /// A kernel that is claimed to be degraded; checked as an extra property.
    pub kernel: Option<WiretapKernel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub trials: usize,
    /// Largest violation observed (0 when none).
    pub worst: f64,
    pub tol: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.tol
    }
}

struct Ctx {
    seed: u64,
    scale: f64,
    stream: u64,
}

impl Ctx {
    fn rng(&mut self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        self.stream += 1;
        r
    }

    fn trials(&self, base: usize) -> usize {
        ((base as f64 * self.scale).round() as usize).max(1)
    }
}

fn joint_of(rng: &mut ChaCha8Rng, sizes: Vec<usize>) -> JointDistribution {
    let total: usize = sizes.iter().product();
    let d = random::sparse_distribution(rng, total, 0.2);
    JointDistribution::new(sizes, d.probs().to_vec()).expect("valid joint")
}

/// Minimum of `Q[T]` over tests that accept a subset fully and at most one
/// extra outcome partially, with `P[T] = 1 - eps`.
pub fn np_subset_oracle(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let k = p.len();
    let target = 1.0 - eps;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << k) {
        let (mut ps, mut qs) = (0.0, 0.0);
        for i in 0..k {
            if mask >> i & 1 == 1 {
                ps += p[i];
                qs += q[i];
            }
        }
        if ps >= target {
            best = best.min(qs);
        }
        for b in 0..k {
            if mask >> b & 1 == 0 && p[b] > 0.0 {
                let frac = (target - ps) / p[b];
                if (0.0..=1.0).contains(&frac) {
                    best = best.min(qs + frac * q[b]);
                }
            }
        }
    }
    best
}

/// `sum p(x,y,z) log2 [p(x,y,z) p(z) / (p(x,z) p(y,z))]` by explicit loops.
pub fn cmi_double_sum(j: &JointDistribution) -> f64 {
    let s = j.sizes();
    let (a, b, c) = (s[0], s[1], s[2]);
    let mut pxz = vec![0.0; a * c];
    let mut pyz = vec![0.0; b * c];
    let mut pz = vec![0.0; c];
    for x in 0..a {
        for y in 0..b {
            for z in 0..c {
                let m = j.prob(&[x, y, z]);
                pxz[x * c + z] += m;
                pyz[y * c + z] += m;
                pz[z] += m;
            }
        }
    }
    let mut total = 0.0;
    for x in 0..a {
        for y in 0..b {
            for z in 0..c {
                let m = j.prob(&[x, y, z]);
                if m > 0.0 {
                    total += m * (m * pz[z] / (pxz[x * c + z] * pyz[y * c + z])).log2();
                }
            }
        }
    }
    total
}

fn check(name: &'static str, trials: usize, worst: f64, tol: f64) -> Check {
    Check { name, trials, worst, tol }
}

fn prob_checks(ctx: &mut Ctx, out: &mut Vec<Check>) {
    let mut rng = ctx.rng();
    let n = ctx.trials(1000);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let k = rng.random_range(2..7);
        let p = random::sparse_distribution(&mut rng, k, 0.2);
        let q = random::distribution(&mut rng, k);
        worst = worst.max(-kl_divergence(&p, &q).unwrap()).max(kl_divergence(&p, &p).unwrap().abs());
    }
    out.push(check("kl_nonnegative", n, worst, 0.0));

    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let k = rng.random_range(2..7);
        let [a, b, c] = [0, 1, 2].map(|_| JointDistribution::from(random::sparse_distribution(&mut rng, k, 0.3)));
        let (ab, ba) = (total_variation(&a, &b).unwrap(), total_variation(&b, &a).unwrap());
        let (ac, bc) = (total_variation(&a, &c).unwrap(), total_variation(&b, &c).unwrap());
        worst = worst.max((ab - ba).abs()).max(ac - ab - bc).max(total_variation(&a, &a).unwrap());
    }
    out.push(check("tv_metric", n, worst, 1e-15));

    let mut rng = ctx.rng();
    let m = ctx.trials(500);
    let mut worst: f64 = 0.0;
    for _ in 0..m {
        let sizes = (0..3).map(|_| rng.random_range(1..5)).collect();
        let j = joint_of(&mut rng, sizes);
        worst = worst.max((conditional_mutual_information(&j, 0, 1, 2).unwrap() - cmi_double_sum(&j)).abs());
    }
    out.push(check("cmi_decomposition", m, worst, 1e-10));

    let mut rng = ctx.rng();
    let m = ctx.trials(250);
    let (mut marg, mut chain): (f64, f64) = (0.0, 0.0);
    for _ in 0..m {
        let k = rng.random_range(2..5);
        let n = rng.random_range(1..5);
        let p = random::sparse_distribution(&mut rng, k, 0.2);
        let pn = product_power(&p, n, &Caps::default()).unwrap();
        for i in 0..n {
            let mi = pn.marginal(&[i]).unwrap();
            for (a, b) in mi.probs().iter().zip(p.probs()) {
                marg = marg.max((a - b).abs());
            }
        }
        chain = chain.max((entropy(&pn.to_distribution()) - n as f64 * entropy(&p)).abs());
    }
    out.push(check("product_marginals", m, marg, 1e-14));
    out.push(check("entropy_chain", m, chain, 1e-9));
}

fn np_checks(ctx: &mut Ctx, out: &mut Vec<Check>) {
    let mut rng = ctx.rng();
    let n = ctx.trials(500);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let k = rng.random_range(2..8);
        let p = random::sparse_distribution(&mut rng, k, 0.2);
        let q = random::sparse_distribution(&mut rng, k, 0.2);
        let mut prev = f64::INFINITY;
        for i in 0..10 {
            let b = beta_exact(&p, &q, i as f64 / 10.0).unwrap().beta;
            worst = worst.max(b - prev);
            prev = b;
        }
    }
    out.push(check("beta_monotone_in_eps", n, worst, 0.0));

    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let k = rng.random_range(2..6);
        let p = random::sparse_distribution(&mut rng, k, 0.2);
        let q = random::sparse_distribution(&mut rng, k, 0.2);
        let out_size = rng.random_range(2..6);
        let kern = random::dmc(&mut rng, k, out_size);
        let eps = rng.random_range(0.0..0.9);
        let pk = push_through_kernel(&p, &kern).unwrap().marginal(&[1]).unwrap().to_distribution();
        let qk = push_through_kernel(&q, &kern).unwrap().marginal(&[1]).unwrap().to_distribution();
        let before = beta_exact(&p, &q, eps).unwrap().beta;
        worst = worst.max(before - beta_exact(&pk, &qk, eps).unwrap().beta);
    }
    out.push(check("beta_data_processing", n, worst, 1e-12));

    let mut rng = ctx.rng();
    let m = ctx.trials(250);
    let mut worst: f64 = 0.0;
    for _ in 0..m {
        let k = rng.random_range(1..9);
        let p = random::sparse_distribution(&mut rng, k, 0.2);
        let q = random::sparse_distribution(&mut rng, k, 0.2);
        let eps = rng.random_range(0.0..1.0);
        let b = beta_exact(&p, &q, eps).unwrap().beta;
        worst = worst.max((b - np_subset_oracle(p.probs(), q.probs(), eps)).abs());
        let same = beta_exact(&p, &p, eps).unwrap().beta;
        worst = worst.max((same - (1.0 - eps)).abs());
    }
    out.push(check("beta_oracle_equivalence", m, worst, 1e-12));

    let mut rng = ctx.rng();
    let m = ctx.trials(100);
    let mut worst: f64 = 0.0;
    for _ in 0..m {
        let k = rng.random_range(2..4);
        let n = rng.random_range(1..5);
        let p = random::sparse_distribution(&mut rng, k, 0.2);
        let q = random::sparse_distribution(&mut rng, k, 0.2);
        let eps = rng.random_range(0.0..0.9);
        let caps = Caps::default();
        let pn = product_power(&p, n, &caps).unwrap();
        let qn = product_power(&q, n, &caps).unwrap();
        let explicit = beta_exact_of(pn.probs(), qn.probs(), eps).unwrap().beta;
        let iid = beta_product_iid(&p, &q, eps, n, &caps).unwrap().beta;
        worst = worst.max((explicit - iid).abs() / explicit.clamp(1e-300, 1.0));
    }
    out.push(check("beta_iid_matches_explicit", m, worst, 1e-12));
}

fn discrimination_checks(ctx: &mut Ctx, out: &mut Vec<Check>) {
    let caps = Caps::default();
    let mut rng = ctx.rng();
    let n = ctx.trials(100);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let w = random::dmc(&mut rng, 2, 2);
        let v = random::dmc(&mut rng, 2, 2);
        let eps = rng.random_range(0.0..0.9);
        let len = rng.random_range(1..3);
        let chain = [
            ActiveEnvelope::build(&w, &v, len, &caps).unwrap().beta(eps),
            beta_active_bruteforce(&w, &v, eps, len, &caps).unwrap().beta,
            beta_open_loop_bruteforce(&w, &v, eps, len, &caps).unwrap().beta,
            beta_best_fixed_input(&w, &v, eps, len, &caps).unwrap().beta,
        ];
        for pair in chain.windows(2) {
            worst = worst.max((pair[0] - pair[1]) / pair[1].max(1e-300));
        }
    }
    out.push(check("active_containment", n, worst, 1e-9));

    let mut rng = ctx.rng();
    let m = ctx.trials(250);
    let mut worst: f64 = 0.0;
    for _ in 0..m {
        let (xs, ys) = (rng.random_range(1..4), rng.random_range(2..4));
        let len = rng.random_range(1..4);
        let s = random::strategy(&mut rng, len, xs, ys);
        let law = induced_output_law(&s, &random::dmc(&mut rng, xs, ys), &caps).unwrap();
        worst = worst.max((law.probs().iter().sum::<f64>() - 1.0).abs());
    }
    out.push(check("induced_law_normalized", m, worst, 1e-12));

    let mut rng = ctx.rng();
    let m = ctx.trials(50);
    let mut worst: f64 = 0.0;
    let steps = 20;
    for _ in 0..m {
        let w = random::dmc(&mut rng, 3, 3);
        let v = random::dmc(&mut rng, 3, 3);
        let top = discrimination_exponent(&w, &v).unwrap().value;
        for i in 0..=steps {
            for j in 0..=steps - i {
                let p = Distribution::from_weights(&[i as f64, j as f64, (steps - i - j) as f64]).unwrap();
                worst = worst.max(conditional_divergence(&w, &v, &p).unwrap() - top);
            }
        }
    }
    out.push(check("exponent_attained_at_vertex", m, worst, 1e-12));
}

fn wiretap_checks(ctx: &mut Ctx, out: &mut Vec<Check>) {
    let opts = MaxCmiOptions::default();
    let mut rng = ctx.rng();
    let n = ctx.trials(250);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let (xs, ys, zs) = (rng.random_range(1..4), rng.random_range(1..4), rng.random_range(1..4));
        let w1 = random::dmc(&mut rng, xs, ys);
        let w2 = random::dmc(&mut rng, ys, zs);
        let c = check_degraded(&WiretapKernel::degraded(&w1, &w2).unwrap(), DEGRADED_TOL);
        match c.w2 {
            Some(found) => {
                for y in 0..ys {
                    for z in 0..zs {
                        worst = worst.max((found.prob(y, z) - w2.prob(y, z)).abs());
                    }
                }
            }
            None => worst = f64::INFINITY,
        }
    }
    out.push(check("degraded_recovery", n, worst, 1e-9));

    let mut rng = ctx.rng();
    let m = ctx.trials(250);
    let mut worst: f64 = 0.0;
    for _ in 0..m {
        let (xs, ys, zs) = (rng.random_range(1..4), rng.random_range(1..4), rng.random_range(1..4));
        let w = random::kernel(&mut rng, xs, ys, zs);
        let p = random::distribution(&mut rng, w.input_size());
        let d = v1_divergence(&w, &p, &induced_v1(&w, &p).unwrap()).unwrap();
        let direct = conditional_mutual_information(&w.joint(&p).unwrap(), 0, 1, 2).unwrap();
        worst = worst.max((d - direct).abs());
    }
    out.push(check("v1_minimizer_equals_cmi", m, worst, 1e-10));

    let mut rng = ctx.rng();
    let m = ctx.trials(25);
    let mut worst: f64 = 0.0;
    for i in 0..m {
        let (xs, zs) = (rng.random_range(2..4), rng.random_range(2..4));
        let w = random::positive_kernel(&mut rng, xs, 2, zs);
        let r = max_cmi_multistart(&w, &opts, 5, ctx.seed.wrapping_add(i as u64)).unwrap();
        worst = worst.max(r.spread).max(if r.best.converged { 0.0 } else { r.best.gap });
    }
    out.push(check("max_cmi_restart_invariance", m, worst, 1e-8));

    let mut rng = ctx.rng();
    let m = ctx.trials(25);
    let mut worst: f64 = 0.0;
    for _ in 0..m {
        let w = random::positive_kernel(&mut rng, 2, 2, 2);
        worst = worst.max(minimax_identity_check(&w, &opts).unwrap().gap);
    }
    out.push(check("minimax_identity", m, worst, 1e-6));

    let mut rng = ctx.rng();
    let m = ctx.trials(2500);
    let (mut fails, mut valid) = (0usize, 0usize);
    for _ in 0..m {
        let Some((joint, k, eps, delta, eta, q)) = random_sk_instance(&mut rng) else { continue };
        valid += 1;
        match sk_reduction_check(&joint, k, eps, delta, eta, &q) {
            Ok(r) if r.holds => {}
            _ => fails += 1,
        }
    }
    out.push(check("sk_reduction_holds", valid, fails as f64, 0.0));
}

/// Random `(K, K_hat, Z)` joint with its measured `(eps, delta)`, an admissible
/// `eta` and a random factorized `Q`; `None` when `eps + delta >= 1`.
#[allow(clippy::type_complexity)]
pub fn random_sk_instance(rng: &mut impl Rng) -> Option<(JointDistribution, usize, f64, f64, f64, JointDistribution)> {
    let k = rng.random_range(1..5);
    let zs = rng.random_range(1..4);
    // mostly-correct keys: K_hat = K with high probability
    let agree = rng.random_range(0.0..1.0);
    let noise = random::distribution(rng, k * k * zs);
    let diag = random::distribution(rng, k * zs);
    let mut probs = vec![0.0; k * k * zs];
    for a in 0..k {
        for b in 0..k {
            for z in 0..zs {
                let i = (a * k + b) * zs + z;
                probs[i] =
                    (1.0 - agree) * noise.probs()[i] + if a == b { agree * diag.probs()[a * zs + z] } else { 0.0 };
            }
        }
    }
    let joint = JointDistribution::from_weights(vec![k, k, zs], &probs).ok()?;
    let (eps, delta) = key_metrics(&joint);
    if eps + delta >= 1.0 {
        return None;
    }
    let eta = rng.random_range(0.0..1.0) * (1.0 - eps - delta);
    if eta <= 0.0 {
        return None;
    }
    let qz = random::distribution(rng, zs);
    let qa: Vec<Distribution> = (0..zs).map(|_| random::distribution(rng, k)).collect();
    let qb: Vec<Distribution> = (0..zs).map(|_| random::distribution(rng, k)).collect();
    let mut qp = vec![0.0; k * k * zs];
    for a in 0..k {
        for b in 0..k {
            for z in 0..zs {
                qp[(a * k + b) * zs + z] = qz.prob(z) * qa[z].prob(a) * qb[z].prob(b);
            }
        }
    }
    let q = JointDistribution::from_weights(vec![k, k, zs], &qp).ok()?;
    Some((joint, k, eps, delta, eta, q))
}

/// `(Pr[K != K_hat], ||P_KZ - unif x P_Z||)` by direct summation.
pub fn key_metrics(j: &JointDistribution) -> (f64, f64) {
    let s = j.sizes();
    let (k, zs) = (s[0], s[2]);
    let mut err = 0.0;
    let mut pkz = vec![0.0; k * zs];
    let mut pz = vec![0.0; zs];
    for a in 0..k {
        for b in 0..s[1] {
            for z in 0..zs {
                let m = j.prob(&[a, b, z]);
                if a != b {
                    err += m;
                }
                pkz[a * zs + z] += m;
                pz[z] += m;
            }
        }
    }
    let tv: f64 = (0..k * zs).map(|i| (pkz[i] - pz[i % zs] / k as f64).abs()).sum::<f64>() / 2.0;
    (err, tv)
}

fn protocol_checks(ctx: &mut Ctx, out: &mut Vec<Check>) {
    let caps = Caps::default();
    let mut rng = ctx.rng();
    let n = ctx.trials(150);
    let (mut uni, mut err): (f64, f64) = (0.0, 0.0);
    for _ in 0..n {
        let len = rng.random_range(1..3);
        let msgs = rng.random_range(1..4);
        let (uxs, uys) = (rng.random_range(1..3), rng.random_range(1..3));
        let code = random::code(&mut rng, len, msgs, 2, 2, 2, uxs, uys);
        let w = random::kernel(&mut rng, 2, 2, 2);
        let pj = execute_exact(&code, &w, &caps).unwrap();
        for &p in pj.joint.marginal(&[ComponentMap::M]).unwrap().probs() {
            uni = uni.max((p - 1.0 / msgs as f64).abs());
        }
        let m = metrics(&pj, |y| code.decode(y)).unwrap();
        // independent route: Pr[d(Y^n) = m | M = m] from the (M, Y^n) marginal
        let mut comps = vec![ComponentMap::M];
        comps.extend(pj.map.ys());
        let my = pj.joint.marginal(&comps).unwrap();
        let mut correct = 0.0;
        for (flat, &p) in my.probs().iter().enumerate() {
            let cell = my.cell_of(flat);
            if code.decode(&cell[1..]) == cell[0] {
                correct += p * msgs as f64;
            }
        }
        err = err.max((m.error_prob - (1.0 - correct / msgs as f64)).abs());
    }
    out.push(check("protocol_message_uniform", n, uni, 1e-12));
    out.push(check("protocol_error_recomputed", n, err, 1e-12));

    let mut rng = ctx.rng();
    let m = ctx.trials(150);
    let mut worst: f64 = 0.0;
    for _ in 0..m {
        let len = rng.random_range(1..4);
        let (uxs, uys) = (rng.random_range(1..3), rng.random_range(1..3));
        let code = random::code(&mut rng, len, 2, 2, 2, 2, uxs, uys);
        let v = random::factorized(&mut rng, 2, 2, 2);
        worst = worst.max(factorization_check(&code, &v, &caps).unwrap());
    }
    out.push(check("factorized_channel_cmi", m, worst, 1e-9));

    let mut rng = ctx.rng();
    let m = ctx.trials(100);
    let opts = MaxCmiOptions::default();
    let w = WiretapKernel::degraded(&Dmc::bsc(0.1).unwrap(), &Dmc::bsc(0.2).unwrap()).unwrap();
    let validators: Vec<ConverseValidator> =
        (1..=2).map(|len| ConverseValidator::new(&w, len, None, &caps, &opts).unwrap()).collect();
    let (mut fails, mut checked) = (0usize, 0usize);
    for _ in 0..m {
        let len = rng.random_range(1..3);
        let (uxs, uys) = (rng.random_range(1..3), rng.random_range(1..3));
        let code = random::code(&mut rng, len, 2, 2, 2, 2, uxs, uys);
        for eta in [0.05, 0.1, 0.2] {
            if let Ok(r) = validators[len - 1].validate(&code, eta) {
                checked += 1;
                if !(r.holds && r.chain_holds) {
                    fails += 1;
                }
            }
        }
    }
    out.push(check("converse_random_codes", checked, fails as f64, 0.0));

    let mut rng = ctx.rng();
    let trials = ctx.trials(100_000) as u64;
    let code = random::code(&mut rng, 2, 2, 2, 2, 2, 2, 2);
    let w = random::kernel(&mut rng, 2, 2, 2);
    let exact = execute_exact(&code, &w, &caps).unwrap();
    let mc = simulate(&code, &w, trials, rng.random()).unwrap();
    let mut worst: f64 = 0.0;
    for comp in 0..exact.joint.num_components() {
        let em = exact.joint.marginal(&[comp]).unwrap();
        let counts = mc.marginal_counts(&[comp]);
        for (v, &p) in em.probs().iter().enumerate() {
            let hat = counts.get(&vec![v]).copied().unwrap_or(0) as f64 / trials as f64;
            let p = p.clamp(0.0, 1.0);
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            // deviation in units of sigma; degenerate cells must match up to rounding
            let z = if sigma > 1e-12 {
                (hat - p).abs() / sigma
            } else if (hat - p).abs() > 1e-12 {
                f64::INFINITY
            } else {
                0.0
            };
            worst = worst.max(z);
        }
    }
    out.push(check("monte_carlo_marginal_bands_sigma", trials as usize, worst, 4.0));
}

/// Runs every property and returns the checks in a fixed order.
pub fn run_checks(opts: &SelftestOptions) -> Vec<Check> {
    let mut ctx = Ctx { seed: opts.seed, scale: if opts.scale > 0.0 { opts.scale } else { 1.0 }, stream: 0 };
    let mut out = Vec::new();
    prob_checks(&mut ctx, &mut out);
    np_checks(&mut ctx, &mut out);
    discrimination_checks(&mut ctx, &mut out);
    wiretap_checks(&mut ctx, &mut out);
    protocol_checks(&mut ctx, &mut out);
    if let Some(k) = &opts.kernel {
        out.push(input_kernel_check(k));
    }
    out
}

/// The supplied kernel must be degraded and reproduced by `W1(y|x) W2(z|y)`.
fn input_kernel_check(k: &WiretapKernel) -> Check {
    let c = check_degraded(k, DEGRADED_TOL);
    let worst = match &c.w2 {
        None => c.max_deviation.max(DEGRADED_TOL * 2.0),
        Some(w2) => {
            let rebuilt = WiretapKernel::degraded(&k.y_marginal(), w2).expect("sizes match");
            let mut d: f64 = 0.0;
            for x in 0..k.input_size() {
                for y in 0..k.y_size() {
                    for z in 0..k.z_size() {
                        d = d.max((rebuilt.prob(x, y, z) - k.prob(x, y, z)).abs());
                    }
                }
            }
            d
        }
    };
    check("input_kernel_degraded", 1, worst, DEGRADED_TOL)
}

pub fn selftest_table(checks: &[Check]) -> ResultTable {
    let mut t = ResultTable::new(&["property", "trials", "worst", "tolerance", "passed"]);
    for c in checks {
        t.push(vec![c.name.into(), c.trials.into(), c.worst.into(), c.tol.into(), c.passed().into()])
            .expect("five cells");
    }
    t
}
