use serde::{Deserialize, Serialize};

use super::code::WiretapCode;
use crate::config::Caps;
use crate::error::{Error, Result};
use crate::prob::{conditional_mutual_information, total_variation_of, JointDistribution};
use crate::wiretap::{FactorizedKernel, WiretapKernel};

/// Positions of each variable in a [`ProtocolJoint`]:
/// `[M, X_1..X_n, Y_1..Y_n, Z_1..Z_n, F_0..F_{n-1}]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentMap {
    pub n: usize,
}

impl ComponentMap {
    pub const M: usize = 0;

    pub fn x(&self, t: usize) -> usize {
        1 + t
    }

    pub fn y(&self, t: usize) -> usize {
        1 + self.n + t
    }

    pub fn z(&self, t: usize) -> usize {
        1 + 2 * self.n + t
    }

    pub fn f(&self, t: usize) -> usize {
        1 + 3 * self.n + t
    }

    pub fn ys(&self) -> Vec<usize> {
        (0..self.n).map(|t| self.y(t)).collect()
    }

    /// `(Z^n, F)`: everything the eavesdropper observes.
    pub fn eavesdropper(&self) -> Vec<usize> {
        (0..self.n).map(|t| self.z(t)).chain((0..self.n).map(|t| self.f(t))).collect()
    }
}

/// Exact law of `(M, X^n, Y^n, Z^n, F)` induced by a code on a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolJoint {
    pub joint: JointDistribution,
    pub map: ComponentMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeMetrics {
    /// `Pr[M != M_hat]`
    pub error_prob: f64,
    /// `||P_{M Z^n F} - P_M x P_{Z^n F}||`
    pub leakage: f64,
}

struct Walker<'a> {
    code: &'a WiretapCode,
    w: &'a WiretapKernel,
    strides: Vec<usize>,
    map: ComponentMap,
    probs: Vec<f64>,
    y: Vec<usize>,
    f: Vec<usize>,
}

impl Walker<'_> {
    fn step(&mut self, t: usize, m: usize, ux: usize, uy: usize, mass: f64, index: usize) {
        let n = self.map.n;
        if t == n {
            self.probs[index] += mass;
            return;
        }
        let x = self.code.encode(t, m, ux, &self.f);
        let index = index + x * self.strides[self.map.x(t)];
        for yv in 0..self.w.y_size() {
            for zv in 0..self.w.z_size() {
                let p = self.w.prob(x, yv, zv);
                if p == 0.0 {
                    continue;
                }
                self.y.push(yv);
                let mut idx = index + yv * self.strides[self.map.y(t)] + zv * self.strides[self.map.z(t)];
                let pushed = t + 1 < n;
                if pushed {
                    let fv = self.code.feedback(t + 1, &self.y, uy);
                    idx += fv * self.strides[self.map.f(t + 1)];
                    self.f.push(fv);
                }
                self.step(t + 1, m, ux, uy, mass * p, idx);
                if pushed {
                    self.f.pop();
                }
                self.y.pop();
            }
        }
    }
}

fn check_compatible(code: &WiretapCode, w: &WiretapKernel) -> Result<()> {
    if code.input_size() != w.input_size() {
        return Err(Error::AlphabetMismatch { left: code.input_size(), right: w.input_size() });
    }
    if code.output_size() != w.y_size() {
        return Err(Error::AlphabetMismatch { left: code.output_size(), right: w.y_size() });
    }
    Ok(())
}

/// Builds the exact joint by walking every `(m, u_x, u_y, (y,z)^n)` path.
pub fn execute_exact(code: &WiretapCode, w: &WiretapKernel, caps: &Caps) -> Result<ProtocolJoint> {
    check_compatible(code, w)?;
    let n = code.n();
    let map = ComponentMap { n };
    let mut sizes = vec![code.msg_count()];
    sizes.extend(std::iter::repeat_n(w.input_size(), n));
    sizes.extend(std::iter::repeat_n(w.y_size(), n));
    sizes.extend(std::iter::repeat_n(w.z_size(), n));
    sizes.extend(std::iter::repeat_n(code.feedback_size(), n));
    let cells = sizes.iter().fold(1u128, |a, &s| a.saturating_mul(s as u128));
    Caps::check("protocol joint", cells, caps.protocol_states)?;
    let paths = (code.msg_count() as u128)
        .saturating_mul(code.ux().alphabet_size() as u128)
        .saturating_mul(code.uy().alphabet_size() as u128)
        .saturating_mul(((w.y_size() * w.z_size()) as u128).saturating_pow(n as u32));
    Caps::check("protocol paths", paths, caps.protocol_states)?;

    let mut strides = vec![1; sizes.len()];
    for i in (0..sizes.len() - 1).rev() {
        strides[i] = strides[i + 1] * sizes[i + 1];
    }
    let mut walker = Walker {
        code,
        w,
        strides,
        map,
        probs: vec![0.0; cells as usize],
        y: Vec::with_capacity(n),
        f: Vec::with_capacity(n),
    };
    let pm = 1.0 / code.msg_count() as f64;
    for m in 0..code.msg_count() {
        for (ux, &pux) in code.ux().probs().iter().enumerate() {
            if pux == 0.0 {
                continue;
            }
            for (uy, &puy) in code.uy().probs().iter().enumerate() {
                if puy == 0.0 {
                    continue;
                }
                let f0 = code.feedback(0, &[], uy);
                walker.f.push(f0);
                let index = m * walker.strides[0] + f0 * walker.strides[map.f(0)];
                walker.step(0, m, ux, uy, pm * pux * puy, index);
                walker.f.pop();
            }
        }
    }
    Ok(ProtocolJoint { joint: JointDistribution::from_computed(sizes, walker.probs), map })
}

/// Exact error probability and leakage, decoding `Y^n` with `decode`.
pub fn metrics(pj: &ProtocolJoint, decode: impl Fn(&[usize]) -> usize) -> Result<CodeMetrics> {
    let ys = pj.map.ys();
    let mut error_prob = 0.0;
    for (flat, &p) in pj.joint.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let cell = pj.joint.cell_of(flat);
        let y: Vec<usize> = ys.iter().map(|&i| cell[i]).collect();
        if decode(&y) != cell[ComponentMap::M] {
            error_prob += p;
        }
    }
    let mzf = pj.joint.marginal_grouped(&[vec![ComponentMap::M], pj.map.eavesdropper()])?;
    let (nm, nzf) = (mzf.sizes()[0], mzf.sizes()[1]);
    let mut pm = vec![0.0; nm];
    let mut pzf = vec![0.0; nzf];
    for (i, &p) in mzf.probs().iter().enumerate() {
        pm[i / nzf] += p;
        pzf[i % nzf] += p;
    }
    let product: Vec<f64> = (0..nm * nzf).map(|i| pm[i / nzf] * pzf[i % nzf]).collect();
    let leakage = total_variation_of(mzf.probs(), &product)?;
    Ok(CodeMetrics { error_prob: error_prob.clamp(0.0, 1.0), leakage })
}

/// Law of `(M, M_hat, (Z^n, F))` with the eavesdropper view flattened.
pub(crate) fn key_joint(pj: &ProtocolJoint, code: &WiretapCode) -> JointDistribution {
    let ys = pj.map.ys();
    let eve = pj.map.eavesdropper();
    let sizes = pj.joint.sizes();
    let nzf: usize = eve.iter().map(|&i| sizes[i]).product();
    let nm = code.msg_count();
    let mut out = vec![0.0; nm * nm * nzf];
    for (flat, &p) in pj.joint.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let cell = pj.joint.cell_of(flat);
        let y: Vec<usize> = ys.iter().map(|&i| cell[i]).collect();
        let zf = eve.iter().fold(0, |acc, &i| acc * sizes[i] + cell[i]);
        out[(cell[ComponentMap::M] * nm + code.decode(&y)) * nzf + zf] += p;
    }
    JointDistribution::from_computed(vec![nm, nm, nzf], out)
}

/// `I(M; M_hat | Z^n, F)` when the code runs over `w`.
pub fn message_decoder_cmi(code: &WiretapCode, w: &WiretapKernel, caps: &Caps) -> Result<f64> {
    let pj = execute_exact(code, w, caps)?;
    conditional_mutual_information(&key_joint(&pj, code), 0, 1, 2)
}

/// `I(M; M_hat | Z^n, F)` under a factorized channel `V2(z|x) V1(y|z)`.
pub fn factorization_check(code: &WiretapCode, v: &FactorizedKernel, caps: &Caps) -> Result<f64> {
    message_decoder_cmi(code, &v.compose(), caps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{Distribution, Dmc};

    fn identity_kernel() -> WiretapKernel {
        // Y = X, Z constant
        WiretapKernel::independent(&Dmc::identity(2), &Dmc::new(vec![vec![1.0], vec![1.0]]).unwrap()).unwrap()
    }

    fn direct_send() -> WiretapCode {
        WiretapCode::open_loop(2, 2, 2, &[vec![0], vec![1]], |y| y[0]).unwrap()
    }

    #[test]
    fn identity_channel_diagonal() {
        let pj = execute_exact(&direct_send(), &identity_kernel(), &Caps::default()).unwrap();
        let my = pj.joint.marginal(&[0, pj.map.y(0)]).unwrap();
        assert_eq!(my.probs(), &[0.5, 0.0, 0.0, 0.5]);
        let m = metrics(&pj, |y| y[0]).unwrap();
        assert_eq!(m.error_prob, 0.0);
        assert_eq!(m.leakage, 0.0);
    }

    #[test]
    fn eavesdropper_sees_input() {
        // Z = X: leakage of a direct 1-bit send is 1/2 (four-cell oracle:
        // P_MZ = diag(1/2), P_M x P_Z = 1/4 everywhere)
        let w = WiretapKernel::independent(&Dmc::identity(2), &Dmc::identity(2)).unwrap();
        let pj = execute_exact(&direct_send(), &w, &Caps::default()).unwrap();
        let m = metrics(&pj, |y| y[0]).unwrap();
        assert!((m.leakage - 0.5).abs() < 1e-15);
    }

    #[test]
    fn message_ignored_means_no_leakage() {
        let w = WiretapKernel::new(2, 2, vec![vec![0.1, 0.2, 0.3, 0.4], vec![0.4, 0.3, 0.2, 0.1]]).unwrap();
        let code = WiretapCode::from_fns(
            2,
            3,
            2,
            2,
            2,
            Distribution::new(vec![0.3, 0.7]).unwrap(),
            Distribution::uniform(2),
            |t, _, u, f| (u + f[t]) % 2,
            |t, y, u| if t == 0 { u } else { y[t - 1] },
            |y| y[0] + y[1],
        )
        .unwrap();
        let pj = execute_exact(&code, &w, &Caps::default()).unwrap();
        assert!(metrics(&pj, |y| code.decode(y)).unwrap().leakage < 1e-15);
        assert!(message_decoder_cmi(&code, &w, &Caps::default()).unwrap() < 1e-12);
        let pm = pj.joint.marginal(&[0]).unwrap();
        for &p in pm.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn non_factorized_counterexample() {
        // Y and Z are independent noisy copies of X. Oracle:
        // I(M; M_hat | Z) = h(0.32) - h(0.2) for a direct send over BSC(0.2) pairs
        let w = WiretapKernel::independent(&Dmc::bsc(0.2).unwrap(), &Dmc::bsc(0.2).unwrap()).unwrap();
        let v = message_decoder_cmi(&direct_send(), &w, &Caps::default()).unwrap();
        let h = |p: f64| crate::prob::entropy_of(&[p, 1.0 - p]);
        assert!((v - (h(0.32) - h(0.2))).abs() < 1e-12, "{v}");
        assert!(v > 0.01);
    }

    #[test]
    fn caps_enforced() {
        let caps = Caps { protocol_states: 3, ..Caps::default() };
        assert!(matches!(execute_exact(&direct_send(), &identity_kernel(), &caps), Err(Error::SizeOverflow { .. })));
    }
}
