//! Finite probability primitives: distributions, channels and joint laws.
//!
//! A [`JointDistribution`] stores its cells as a flat row-major array: for
//! component sizes `(s_0, .., s_{k-1})` the cell `(i_0, .., i_{k-1})` lives at
//! `sum_j i_j * stride_j` with `stride_{k-1} = 1` and
//! `stride_j = s_{j+1} * stride_{j+1}`. The last component varies fastest.

mod measures;
mod product;

pub use measures::{
    conditional_mutual_information, conditional_mutual_information_grouped, entropy, entropy_of, kl_divergence,
    kl_divergence_of, mutual_information, total_variation, total_variation_of,
};
pub use product::{product_power, push_through_kernel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Masses below this are treated as exact zeros for support computations.
pub const ZERO_MASS: f64 = 1e-15;

/// Allowed deviation of a total mass from one.
pub const SUM_TOL: f64 = 1e-12;

// Joints built internally from many products accumulate rounding; they are
// checked against this looser bound in debug builds only.
const COMPUTED_SUM_TOL: f64 = 1e-9;

fn validate_masses(probs: &[f64], tol: f64) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty probability vector".into()));
    }
    if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!("entry {i} is {p}")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::InvalidDistribution(format!("masses sum to {sum}")));
    }
    Ok(())
}

/// A probability vector over `{0, .., len-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRepr", into = "DistributionRepr")]
pub struct Distribution {
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistributionRepr {
    probs: Vec<f64>,
}

impl TryFrom<DistributionRepr> for Distribution {
    type Error = Error;
    fn try_from(r: DistributionRepr) -> Result<Self> {
        Distribution::new(r.probs)
    }
}

impl From<Distribution> for DistributionRepr {
    fn from(d: Distribution) -> Self {
        DistributionRepr { probs: d.probs }
    }
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_masses(&probs, SUM_TOL)?;
        Ok(Distribution { probs })
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(Distribution { probs: weights.iter().map(|w| w / total).collect() })
    }

    pub fn uniform(size: usize) -> Self {
        assert!(size > 0, "uniform distribution over an empty alphabet");
        Distribution { probs: vec![1.0 / size as f64; size] }
    }

    pub fn point(size: usize, at: usize) -> Self {
        assert!(at < size, "point mass outside the alphabet");
        let mut probs = vec![0.0; size];
        probs[at] = 1.0;
        Distribution { probs }
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, x: usize) -> f64 {
        self.probs[x]
    }

    pub(crate) fn from_computed(probs: Vec<f64>) -> Self {
        debug_assert!(validate_masses(&probs, COMPUTED_SUM_TOL).is_ok());
        Distribution { probs }
    }
}

/// A discrete memoryless channel, one output distribution per input symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DmcRepr", into = "DmcRepr")]
pub struct Dmc {
    rows: Vec<Distribution>,
}

#[derive(Serialize, Deserialize)]
struct DmcRepr {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<DmcRepr> for Dmc {
    type Error = Error;
    fn try_from(r: DmcRepr) -> Result<Self> {
        Dmc::new(r.rows)
    }
}

impl From<Dmc> for DmcRepr {
    fn from(d: Dmc) -> Self {
        DmcRepr { rows: d.rows.into_iter().map(|r| r.probs).collect() }
    }
}

impl Dmc {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let rows = rows.into_iter().map(Distribution::new).collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }

    pub fn from_rows(rows: Vec<Distribution>) -> Result<Self> {
        let first =
            rows.first().ok_or_else(|| Error::InvalidDistribution("channel without inputs".into()))?.alphabet_size();
        if let Some(bad) = rows.iter().find(|r| r.alphabet_size() != first) {
            return Err(Error::AlphabetMismatch { left: first, right: bad.alphabet_size() });
        }
        Ok(Dmc { rows })
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ParameterDomain(format!("crossover {p} outside [0, 1]")));
        }
        Dmc::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    pub fn identity(size: usize) -> Self {
        Dmc { rows: (0..size).map(|x| Distribution::point(size, x)).collect() }
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.rows[0].alphabet_size()
    }

    pub fn row(&self, x: usize) -> &Distribution {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Distribution] {
        &self.rows
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x].probs[y]
    }

    /// Cascade `self` followed by `next`: `(x -> y -> z)` marginalized to `x -> z`.
    pub fn then(&self, next: &Dmc) -> Result<Dmc> {
        if self.output_size() != next.input_size() {
            return Err(Error::AlphabetMismatch { left: self.output_size(), right: next.input_size() });
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut out = vec![0.0; next.output_size()];
                for (y, &py) in row.probs.iter().enumerate() {
                    for (z, o) in out.iter_mut().enumerate() {
                        *o += py * next.prob(y, z);
                    }
                }
                Distribution::from_computed(out)
            })
            .collect();
        Ok(Dmc { rows })
    }
}

/// A joint law over a product of finite alphabets (row-major, see module docs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointRepr", into = "JointRepr")]
pub struct JointDistribution {
    sizes: Vec<usize>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JointRepr {
    sizes: Vec<usize>,
    probs: Vec<f64>,
}

impl TryFrom<JointRepr> for JointDistribution {
    type Error = Error;
    fn try_from(r: JointRepr) -> Result<Self> {
        JointDistribution::new(r.sizes, r.probs)
    }
}

impl From<JointDistribution> for JointRepr {
    fn from(j: JointDistribution) -> Self {
        JointRepr { sizes: j.sizes, probs: j.probs }
    }
}

impl From<Distribution> for JointDistribution {
    fn from(d: Distribution) -> Self {
        JointDistribution { sizes: vec![d.probs.len()], probs: d.probs }
    }
}

fn check_sizes(sizes: &[usize], len: usize) -> Result<()> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::InvalidDistribution(format!("bad component sizes {sizes:?}")));
    }
    let cells = sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));
    if cells != Some(len) {
        return Err(Error::InvalidDistribution(format!("component sizes {sizes:?} do not match {len} cells")));
    }
    Ok(())
}

impl JointDistribution {
    pub fn new(sizes: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        check_sizes(&sizes, probs.len())?;
        validate_masses(&probs, SUM_TOL)?;
        Ok(JointDistribution { sizes, probs })
    }

    pub fn from_weights(sizes: Vec<usize>, weights: &[f64]) -> Result<Self> {
        check_sizes(&sizes, weights.len())?;
        let d = Distribution::from_weights(weights)?;
        Ok(JointDistribution { sizes, probs: d.probs })
    }

    pub(crate) fn from_computed(sizes: Vec<usize>, probs: Vec<f64>) -> Self {
        debug_assert!(check_sizes(&sizes, probs.len()).is_ok());
        debug_assert!(validate_masses(&probs, COMPUTED_SUM_TOL).is_ok());
        JointDistribution { sizes, probs }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_components(&self) -> usize {
        self.sizes.len()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.sizes.len()];
        for j in (0..self.sizes.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * self.sizes[j + 1];
        }
        strides
    }

    /// Flat index of a cell.
    pub fn index_of(&self, cell: &[usize]) -> usize {
        debug_assert_eq!(cell.len(), self.sizes.len());
        cell.iter().zip(&self.sizes).fold(0, |acc, (&i, &s)| {
            debug_assert!(i < s);
            acc * s + i
        })
    }

    /// Inverse of [`index_of`](Self::index_of).
    pub fn cell_of(&self, mut flat: usize) -> Vec<usize> {
        let mut cell = vec![0; self.sizes.len()];
        for j in (0..self.sizes.len()).rev() {
            cell[j] = flat % self.sizes[j];
            flat /= self.sizes[j];
        }
        cell
    }

    pub fn prob(&self, cell: &[usize]) -> f64 {
        self.probs[self.index_of(cell)]
    }

    /// Flattened view as a single-component distribution.
    pub fn to_distribution(&self) -> Distribution {
        Distribution { probs: self.probs.clone() }
    }

    /// Marginal over `components`, in the given order.
    pub fn marginal(&self, components: &[usize]) -> Result<JointDistribution> {
        let groups: Vec<Vec<usize>> = components.iter().map(|&c| vec![c]).collect();
        self.marginal_grouped(&groups)
    }

    /// Marginal in which each group of components becomes one component whose
    /// alphabet is the row-major product of the group's alphabets.
    pub fn marginal_grouped(&self, groups: &[Vec<usize>]) -> Result<JointDistribution> {
        let k = self.sizes.len();
        let mut seen = vec![false; k];
        for &c in groups.iter().flatten() {
            if c >= k || seen[c] {
                return Err(Error::IndexOutOfRange { index: c, len: k });
            }
            seen[c] = true;
        }
        if groups.is_empty() || groups.iter().any(|g| g.is_empty()) {
            return Err(Error::ParameterDomain("empty component group".into()));
        }
        let out_sizes: Vec<usize> = groups.iter().map(|g| g.iter().map(|&c| self.sizes[c]).product()).collect();

        // Output stride contributed by each source component (zero if summed out).
        let mut weight = vec![0usize; k];
        let mut outer = 1usize;
        for g in groups.iter().rev() {
            let mut inner = 1usize;
            for &c in g.iter().rev() {
                weight[c] = outer * inner;
                inner *= self.sizes[c];
            }
            outer *= inner;
        }

        let mut out = vec![0.0; outer];
        let mut cell = vec![0usize; k];
        let mut target = 0usize;
        for &p in &self.probs {
            out[target] += p;
            // odometer increment, keeping `target` in sync
            for j in (0..k).rev() {
                cell[j] += 1;
                target += weight[j];
                if cell[j] < self.sizes[j] {
                    break;
                }
                target -= weight[j] * cell[j];
                cell[j] = 0;
            }
        }
        Ok(JointDistribution { sizes: out_sizes, probs: out })
    }
}
