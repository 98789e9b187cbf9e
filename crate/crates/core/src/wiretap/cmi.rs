use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::WiretapKernel;
use crate::error::{Error, Result};
use crate::prob::{conditional_mutual_information, Distribution, Dmc, ZERO_MASS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxCmiOptions {
    /// Initial multiplicative-weights step (applied to gradients in bits);
    /// doubled after each ascent step and halved after each rejected one.
    pub step: f64,
    pub max_iterations: usize,
    /// Stop once the duality gap `max_x g_x - I(P)` is at most `tol`.
    pub tol: f64,
}

impl Default for MaxCmiOptions {
    fn default() -> Self {
        MaxCmiOptions { step: 0.1, max_iterations: 10_000, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxCmiResult {
    /// `I(X;Y|Z)` at `p_star`, in bits.
    pub value: f64,
    pub p_star: Distribution,
    pub iterations: usize,
    /// Certified bound on `max - value`.
    pub gap: f64,
    pub converged: bool,
}

impl MaxCmiResult {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence { iterations: self.iterations, gap: self.gap })
        }
    }
}

/// `P_{Y|Z}` induced by input law `p`, as a DMC `Z -> Y`. Rows for
/// unreachable `z` are uniform.
pub fn induced_v1(w: &WiretapKernel, p: &Distribution) -> Result<Dmc> {
    check_input(w, p)?;
    let (ys, zs) = (w.y_size(), w.z_size());
    let mut pyz = vec![0.0; ys * zs];
    for x in 0..w.input_size() {
        for (c, v) in pyz.iter_mut().enumerate() {
            *v += p.prob(x) * w.as_dmc().prob(x, c);
        }
    }
    let rows = (0..zs)
        .map(|z| {
            let col: Vec<f64> = (0..ys).map(|y| pyz[y * zs + z]).collect();
            if col.iter().sum::<f64>() > 0.0 {
                Distribution::from_weights(&col).expect("non-negative")
            } else {
                Distribution::uniform(ys)
            }
        })
        .collect();
    Dmc::from_rows(rows)
}

/// `D(W1 || V1 | P_X W2) = sum P(x) W(y,z|x) log2 [W(y|x,z) / V1(y|z)]`.
pub fn v1_divergence(w: &WiretapKernel, p: &Distribution, v1: &Dmc) -> Result<f64> {
    check_input(w, p)?;
    if v1.input_size() != w.z_size() || v1.output_size() != w.y_size() {
        return Err(Error::AlphabetMismatch {
            left: v1.input_size() * v1.output_size(),
            right: w.z_size() * w.y_size(),
        });
    }
    let w2 = w.z_marginal();
    let mut total = 0.0;
    for x in 0..w.input_size() {
        if p.prob(x) <= 0.0 {
            continue;
        }
        for y in 0..w.y_size() {
            for z in 0..w.z_size() {
                let m = w.prob(x, y, z);
                if m <= ZERO_MASS {
                    continue;
                }
                let v = v1.prob(z, y);
                if v <= ZERO_MASS {
                    return Ok(f64::INFINITY);
                }
                total += p.prob(x) * m * (m / (w2.prob(x, z) * v)).log2();
            }
        }
    }
    Ok(total.max(0.0))
}

fn check_input(w: &WiretapKernel, p: &Distribution) -> Result<()> {
    if p.alphabet_size() != w.input_size() {
        return Err(Error::AlphabetMismatch { left: p.alphabet_size(), right: w.input_size() });
    }
    Ok(())
}

struct Ascent<'a> {
    w: &'a WiretapKernel,
    /// `log2 W(y|x,z)` per `(x, y*zs+z)`, `None` off-support
    log_cond: Vec<Option<f64>>,
}

impl<'a> Ascent<'a> {
    fn new(w: &'a WiretapKernel) -> Self {
        let w2 = w.z_marginal();
        let zs = w.z_size();
        let mut log_cond = Vec::with_capacity(w.input_size() * w.y_size() * zs);
        for x in 0..w.input_size() {
            for c in 0..w.y_size() * zs {
                let m = w.as_dmc().prob(x, c);
                log_cond.push((m > ZERO_MASS).then(|| (m / w2.prob(x, c % zs)).log2()));
            }
        }
        Ascent { w, log_cond }
    }

    /// Partial derivatives `g_x` of `I(X;Y|Z)` with respect to `P(x)`.
    #[allow(clippy::needless_range_loop)]
    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let (ys, zs) = (self.w.y_size(), self.w.z_size());
        let cells = ys * zs;
        let mut pyz = vec![0.0; cells];
        let mut pz = vec![0.0; zs];
        for (x, &px) in p.iter().enumerate() {
            for (c, v) in pyz.iter_mut().enumerate() {
                let m = px * self.w.as_dmc().prob(x, c);
                *v += m;
                pz[c % zs] += m;
            }
        }
        let log_post: Vec<f64> = (0..cells).map(|c| (pyz[c] / pz[c % zs]).log2()).collect();
        (0..p.len())
            .map(|x| {
                let mut g = 0.0;
                for c in 0..cells {
                    if let Some(lc) = self.log_cond[x * cells + c] {
                        g += self.w.as_dmc().prob(x, c) * (lc - log_post[c]);
                    }
                }
                g
            })
            .collect()
    }

    /// `d g_x / d P(x')` in bits.
    #[allow(clippy::needless_range_loop)]
    fn hessian(&self, p: &[f64]) -> Vec<f64> {
        let n = p.len();
        let zs = self.w.z_size();
        let cells = self.w.y_size() * zs;
        let w = self.w.as_dmc();
        let mut pyz = vec![0.0; cells];
        let mut pz = vec![0.0; zs];
        for (x, &px) in p.iter().enumerate() {
            for (c, v) in pyz.iter_mut().enumerate() {
                *v += px * w.prob(x, c);
            }
        }
        for (c, v) in pyz.iter().enumerate() {
            pz[c % zs] += v;
        }
        let mut h = vec![0.0; n * n];
        for x in 0..n {
            for x2 in x..n {
                let mut acc = 0.0;
                for c in 0..cells {
                    if pyz[c] > 0.0 {
                        acc += w.prob(x, c) * w.prob(x2, c) / pyz[c];
                    }
                }
                for z in 0..zs {
                    if pz[z] > 0.0 {
                        let (a, b) = (self.w2_row(x, z), self.w2_row(x2, z));
                        acc -= a * b / pz[z];
                    }
                }
                h[x * n + x2] = -acc / std::f64::consts::LN_2;
                h[x2 * n + x] = h[x * n + x2];
            }
        }
        h
    }

    fn w2_row(&self, x: usize, z: usize) -> f64 {
        (0..self.w.y_size()).map(|y| self.w.prob(x, y, z)).sum()
    }

    /// Damped Newton move on the face spanned by inputs whose gradient is near
    /// `value`; the remaining inputs lose half their mass.
    fn newton_move(&self, p: &[f64], g: &[f64], value: f64, gap: f64) -> Option<Vec<f64>> {
        let n = p.len();
        let active: Vec<usize> = (0..n).filter(|&x| g[x] >= value - 100.0 * gap).collect();
        let k = active.len();
        if k == 0 {
            return None;
        }
        let mut d = vec![0.0; n];
        let mut released = 0.0;
        for x in 0..n {
            if !active.contains(&x) {
                d[x] = -p[x] / 2.0;
                released += p[x] / 2.0;
            }
        }
        let h = self.hessian(p);
        // KKT system: H_SS d_S - lambda 1 = -(g_S + H_S,out d_out), 1^T d_S = released
        let m = k + 1;
        let mut a = vec![0.0; m * m];
        let mut b = vec![0.0; m];
        for (i, &x) in active.iter().enumerate() {
            for (j, &x2) in active.iter().enumerate() {
                a[i * m + j] = h[x * n + x2];
            }
            a[i * m + k] = -1.0;
            a[k * m + i] = 1.0;
            b[i] = -g[x] - (0..n).map(|o| h[x * n + o] * d[o]).sum::<f64>();
        }
        b[k] = released;
        let sol = solve_dense(&mut a, &mut b, m)?;
        for (i, &x) in active.iter().enumerate() {
            d[x] = sol[i];
        }
        let mut t: f64 = 1.0;
        for x in 0..n {
            if d[x] < 0.0 {
                t = t.min(0.5 * p[x] / -d[x]);
            }
        }
        if t < 0.25 {
            return None;
        }
        let mut next: Vec<f64> = p.iter().zip(&d).map(|(a, b)| a + t * b).collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        next.iter().all(|&v| v > 0.0).then_some(next)
    }
}

/// Gaussian elimination with partial pivoting; `None` when (nearly) singular.
fn solve_dense(a: &mut [f64], b: &mut [f64], m: usize) -> Option<Vec<f64>> {
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))?;
        if a[piv * m + col].abs() <= 1e-13 * scale {
            return None;
        }
        if piv != col {
            for j in 0..m {
                a.swap(piv * m + j, col * m + j);
            }
            b.swap(piv, col);
        }
        for r in col + 1..m {
            let f = a[r * m + col] / a[col * m + col];
            if f != 0.0 {
                for j in col..m {
                    a[r * m + j] -= f * a[col * m + j];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|j| a[r * m + j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r * m + r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// `max_P I(X;Y|Z)` from the uniform start with default options and `tol`.
pub fn max_cmi(w: &WiretapKernel, tol: f64) -> Result<MaxCmiResult> {
    let opts = MaxCmiOptions { tol, ..MaxCmiOptions::default() };
    max_cmi_with(w, &opts, &Distribution::uniform(w.input_size()))
}

/// Ascent on `P_X` combining damped Newton steps on the active face with
/// multiplicative-weights steps, with `V1` held at the induced `P_{Y|Z}`.
///
/// `I(X;Y|Z) = min_{V1} D(W1 || V1 | P_X W2)` is a minimum of functions linear
/// in `P_X`, so the returned gap certifies the distance to the maximum.
pub fn max_cmi_with(w: &WiretapKernel, opts: &MaxCmiOptions, start: &Distribution) -> Result<MaxCmiResult> {
    check_input(w, start)?;
    if start.probs().iter().any(|&v| v <= 0.0) {
        return Err(Error::ParameterDomain("ascent start must have full support".into()));
    }
    if opts.step.is_nan() || opts.step <= 0.0 || opts.tol.is_nan() || opts.tol < 0.0 {
        return Err(Error::ParameterDomain("step must be positive and tol non-negative".into()));
    }
    let ascent = Ascent::new(w);
    let mut p = start.probs().to_vec();
    let mut g = ascent.gradient(&p);
    let mut value: f64 = dot(&p, &g);
    let mut step = opts.step;
    let mut iterations = 0;
    loop {
        let top = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let gap = (top - value).max(0.0);
        if gap <= opts.tol || iterations >= opts.max_iterations {
            return Ok(MaxCmiResult {
                value: value.max(0.0),
                p_star: Distribution::from_weights(&p).expect("positive weights"),
                iterations,
                gap,
                converged: gap <= opts.tol,
            });
        }
        iterations += 1;
        if let Some(next) = ascent.newton_move(&p, &g, value, gap) {
            let next_g = ascent.gradient(&next);
            if sufficient_ascent(&p, &g, &next, &next_g) {
                value = dot(&next, &next_g);
                (p, g) = (next, next_g);
                continue;
            }
        }
        let mut next: Vec<f64> = p.iter().zip(&g).map(|(px, gx)| px * (step * (gx - top)).exp2()).collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        if next.iter().any(|&v| v <= 0.0) {
            step /= 2.0;
            continue;
        }
        let next_g = ascent.gradient(&next);
        if sufficient_ascent(&p, &g, &next, &next_g) {
            value = dot(&next, &next_g);
            (p, g) = (next, next_g);
            step = (step * 2.0).min(1e6);
        } else {
            step /= 2.0;
        }
    }
}

/// Directional derivatives along `next - p` at both ends (shifting by the top
/// gradient is exact since the move sums to zero). By concavity the gain is at
/// least their mean, so `end >= -0.4 start` guarantees `gain >= 0.3 start`.
fn sufficient_ascent(p: &[f64], g: &[f64], next: &[f64], next_g: &[f64]) -> bool {
    let top = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let next_top = next_g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let start: f64 = next.iter().zip(p).zip(g).map(|((a, b), gx)| (a - b) * (gx - top)).sum();
    let end: f64 = next.iter().zip(p).zip(next_g).map(|((a, b), gx)| (a - b) * (gx - next_top)).sum();
    start > 0.0 && end >= -0.4 * start
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiStartResult {
    pub best: MaxCmiResult,
    pub best_start: usize,
    pub values: Vec<f64>,
    /// `max(values) - min(values)`
    pub spread: f64,
}

/// Runs the ascent from `starts` seeded random initial laws in parallel and
/// keeps the largest value (ties to the lowest start index).
pub fn max_cmi_multistart(
    w: &WiretapKernel,
    opts: &MaxCmiOptions,
    starts: usize,
    seed: u64,
) -> Result<MultiStartResult> {
    if starts == 0 {
        return Err(Error::ParameterDomain("need at least one start".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inits: Vec<Distribution> = (0..starts).map(|_| crate::random::distribution(&mut rng, w.input_size())).collect();
    let runs = inits.par_iter().map(|s| max_cmi_with(w, opts, s)).collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let mut best_start = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best_start] {
            best_start = i;
        }
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values[best_start];
    Ok(MultiStartResult { best: runs[best_start].clone(), best_start, values, spread: hi - lo })
}

/// Exhaustive search over the simplex lattice of spacing `resolution` (|X| <= 3).
pub fn max_cmi_grid(w: &WiretapKernel, resolution: f64) -> Result<(f64, Distribution)> {
    let k = w.input_size();
    if k > 3 {
        return Err(Error::ParameterDomain("grid search supports at most 3 inputs".into()));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::ParameterDomain("resolution must lie in (0, 1]".into()));
    }
    let m = (1.0 / resolution).round() as usize;
    let eval = |probs: Vec<f64>| -> (f64, Distribution) {
        let p = Distribution::from_weights(&probs).expect("lattice point");
        let v = conditional_mutual_information(&w.joint(&p).expect("sizes match"), 0, 1, 2).expect("valid indices");
        (v, p)
    };
    let points: Vec<Vec<f64>> = match k {
        1 => vec![vec![1.0]],
        2 => (0..=m).map(|i| vec![i as f64, (m - i) as f64]).collect(),
        _ => (0..=m).flat_map(|i| (0..=m - i).map(move |j| vec![i as f64, j as f64, (m - i - j) as f64])).collect(),
    };
    Ok(points.into_par_iter().map(eval).reduce_with(|a, b| if b.0 > a.0 { b } else { a }).expect("non-empty lattice"))
}
