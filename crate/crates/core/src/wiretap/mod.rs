//! Wiretap channels `W: X -> Y x Z` and the converse machinery built on them.

mod cmi;
mod converse;
mod minimax;

pub use cmi::{
    induced_v1, max_cmi, max_cmi_grid, max_cmi_multistart, max_cmi_with, v1_divergence, MaxCmiOptions, MaxCmiResult,
    MultiStartResult,
};
pub use converse::{
    capacity_formula, channel_capacity, converse_bound, default_v, sk_reduction_check, BetaMethod, CapacityCase,
    CapacityReport, ConverseBoundReport, SkReductionReport, DEGRADED_TOL,
};
pub use minimax::{minimax_identity_check, minimax_identity_sweep, MinimaxReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{push_through_kernel, Distribution, Dmc, JointDistribution, ZERO_MASS};

/// `W(y, z | x)`; row `x` is a distribution over the flat index `y * z_size + z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub struct WiretapKernel {
    y_size: usize,
    z_size: usize,
    channel: Dmc,
}

#[derive(Serialize, Deserialize)]
struct KernelRepr {
    y_size: usize,
    z_size: usize,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<KernelRepr> for WiretapKernel {
    type Error = Error;
    fn try_from(r: KernelRepr) -> Result<Self> {
        WiretapKernel::new(r.y_size, r.z_size, r.rows)
    }
}

impl From<WiretapKernel> for KernelRepr {
    fn from(k: WiretapKernel) -> Self {
        KernelRepr {
            y_size: k.y_size,
            z_size: k.z_size,
            rows: k.channel.rows().iter().map(|r| r.probs().to_vec()).collect(),
        }
    }
}

impl WiretapKernel {
    pub fn new(y_size: usize, z_size: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_dmc(y_size, z_size, Dmc::new(rows)?)
    }

    /// Reads a DMC with output alphabet `Y x Z` (flat `y * z_size + z`).
    pub fn from_dmc(y_size: usize, z_size: usize, channel: Dmc) -> Result<Self> {
        if y_size == 0 || z_size == 0 {
            return Err(Error::ParameterDomain("output alphabets must be non-empty".into()));
        }
        if channel.output_size() != y_size * z_size {
            return Err(Error::AlphabetMismatch { left: channel.output_size(), right: y_size * z_size });
        }
        Ok(WiretapKernel { y_size, z_size, channel })
    }

    /// Degraded kernel `W1(y|x) W2(z|y)`.
    pub fn degraded(w1: &Dmc, w2: &Dmc) -> Result<Self> {
        if w1.output_size() != w2.input_size() {
            return Err(Error::AlphabetMismatch { left: w1.output_size(), right: w2.input_size() });
        }
        let (ys, zs) = (w1.output_size(), w2.output_size());
        let rows = (0..w1.input_size())
            .map(|x| {
                let mut row = Vec::with_capacity(ys * zs);
                for y in 0..ys {
                    row.extend((0..zs).map(|z| w1.prob(x, y) * w2.prob(y, z)));
                }
                Distribution::from_computed(row)
            })
            .collect();
        Self::from_dmc(ys, zs, Dmc::from_rows(rows)?)
    }

    /// `Z = Y` exactly, with `Y` drawn from `w1`.
    pub fn eavesdropper_sees_y(w1: &Dmc) -> Result<Self> {
        Self::degraded(w1, &Dmc::identity(w1.output_size()))
    }

    /// `Y` from `wy`, and `Z` from `wz` independently given `x`.
    pub fn independent(wy: &Dmc, wz: &Dmc) -> Result<Self> {
        if wy.input_size() != wz.input_size() {
            return Err(Error::AlphabetMismatch { left: wy.input_size(), right: wz.input_size() });
        }
        let (ys, zs) = (wy.output_size(), wz.output_size());
        let rows = (0..wy.input_size())
            .map(|x| {
                let mut row = Vec::with_capacity(ys * zs);
                for y in 0..ys {
                    row.extend((0..zs).map(|z| wy.prob(x, y) * wz.prob(x, z)));
                }
                Distribution::from_computed(row)
            })
            .collect();
        Self::from_dmc(ys, zs, Dmc::from_rows(rows)?)
    }

    pub fn input_size(&self) -> usize {
        self.channel.input_size()
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn z_size(&self) -> usize {
        self.z_size
    }

    pub fn prob(&self, x: usize, y: usize, z: usize) -> f64 {
        self.channel.prob(x, y * self.z_size + z)
    }

    /// The kernel as a DMC `X -> Y x Z`.
    pub fn as_dmc(&self) -> &Dmc {
        &self.channel
    }

    /// `W1(y|x) = sum_z W(y,z|x)`.
    pub fn y_marginal(&self) -> Dmc {
        self.marginal_kernel(true)
    }

    /// `W2(z|x) = sum_y W(y,z|x)`.
    pub fn z_marginal(&self) -> Dmc {
        self.marginal_kernel(false)
    }

    fn marginal_kernel(&self, keep_y: bool) -> Dmc {
        let size = if keep_y { self.y_size } else { self.z_size };
        let rows = (0..self.input_size())
            .map(|x| {
                let mut row = vec![0.0; size];
                for y in 0..self.y_size {
                    for z in 0..self.z_size {
                        row[if keep_y { y } else { z }] += self.prob(x, y, z);
                    }
                }
                Distribution::from_computed(row)
            })
            .collect();
        Dmc::from_rows(rows).expect("marginal of a valid kernel")
    }

    /// Joint law of `(X, Y, Z)` for input law `p`.
    pub fn joint(&self, p: &Distribution) -> Result<JointDistribution> {
        let xy = push_through_kernel(p, &self.channel)?;
        JointDistribution::new(vec![self.input_size(), self.y_size, self.z_size], xy.probs().to_vec())
    }

    /// True when every `W(y,z|x)` exceeds the zero threshold.
    pub fn is_strictly_positive(&self) -> bool {
        self.channel.rows().iter().all(|r| r.probs().iter().all(|&v| v > ZERO_MASS))
    }
}

/// `V(y,z|x) = V2(z|x) V1(y|z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizedKernel {
    pub v2: Dmc,
    pub v1: Dmc,
}

impl FactorizedKernel {
    pub fn new(v2: Dmc, v1: Dmc) -> Result<Self> {
        if v2.output_size() != v1.input_size() {
            return Err(Error::AlphabetMismatch { left: v2.output_size(), right: v1.input_size() });
        }
        Ok(FactorizedKernel { v2, v1 })
    }

    pub fn compose(&self) -> WiretapKernel {
        let (ys, zs) = (self.v1.output_size(), self.v2.output_size());
        let rows = (0..self.v2.input_size())
            .map(|x| {
                let mut row = vec![0.0; ys * zs];
                for y in 0..ys {
                    for z in 0..zs {
                        row[y * zs + z] = self.v2.prob(x, z) * self.v1.prob(z, y);
                    }
                }
                Distribution::from_computed(row)
            })
            .collect();
        WiretapKernel::from_dmc(ys, zs, Dmc::from_rows(rows).expect("valid rows")).expect("consistent sizes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradedCheck {
    pub is_degraded: bool,
    /// Witness `W2(z|y)` when degraded.
    pub w2: Option<Dmc>,
    /// Largest disagreement between candidate rows of `W2`.
    pub max_deviation: f64,
}

/// Tests whether `W(y,z|x) = W1(y|x) W2(z|y)` for some `W2`.
///
/// Rows of `W2` for outputs `y` never reached above `tol` are set uniform.
pub fn check_degraded(w: &WiretapKernel, tol: f64) -> DegradedCheck {
    let w1 = w.y_marginal();
    let (ys, zs) = (w.y_size, w.z_size);
    let mut rows = Vec::with_capacity(ys);
    let mut max_deviation: f64 = 0.0;
    for y in 0..ys {
        let mut candidate: Option<Vec<f64>> = None;
        for x in 0..w.input_size() {
            let m = w1.prob(x, y);
            if m <= tol {
                continue;
            }
            let row: Vec<f64> = (0..zs).map(|z| w.prob(x, y, z) / m).collect();
            match &candidate {
                None => candidate = Some(row),
                Some(c) => {
                    for (a, b) in c.iter().zip(&row) {
                        max_deviation = max_deviation.max((a - b).abs());
                    }
                }
            }
        }
        rows.push(candidate.unwrap_or_else(|| vec![1.0 / zs as f64; zs]));
    }
    let is_degraded = max_deviation <= tol;
    let w2 = is_degraded.then(|| {
        Dmc::from_rows(rows.into_iter().map(|r| Distribution::from_weights(&r).expect("positive")).collect())
            .expect("valid witness")
    });
    DegradedCheck { is_degraded, w2, max_deviation }
}
