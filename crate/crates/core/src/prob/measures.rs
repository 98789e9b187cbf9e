use super::{Distribution, JointDistribution, ZERO_MASS};
use crate::error::{Error, Result};

/// Shannon entropy in bits of a mass vector (`0 log 0 = 0`).
pub fn entropy_of(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > ZERO_MASS).map(|&p| p * p.log2()).sum::<f64>()
}

pub fn entropy(p: &Distribution) -> f64 {
    entropy_of(p.probs())
}

/// `D(p || q)` in bits over raw mass vectors; `+inf` when `p` is not
/// absolutely continuous with respect to `q`.
pub fn kl_divergence_of(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::AlphabetMismatch { left: p.len(), right: q.len() });
    }
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a <= ZERO_MASS {
            continue;
        }
        if b <= ZERO_MASS {
            return Ok(f64::INFINITY);
        }
        d += a * (a / b).log2();
    }
    Ok(d.max(0.0))
}

pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    kl_divergence_of(p.probs(), q.probs())
}

/// Variation distance `1/2 sum |p - q|` over raw mass vectors.
pub fn total_variation_of(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::AlphabetMismatch { left: p.len(), right: q.len() });
    }
    let s: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * s).min(1.0))
}

pub fn total_variation(p: &JointDistribution, q: &JointDistribution) -> Result<f64> {
    if p.sizes() != q.sizes() {
        return Err(Error::AlphabetMismatch { left: p.probs().len(), right: q.probs().len() });
    }
    total_variation_of(p.probs(), q.probs())
}

/// `I(X;Y|Z)` in bits where X, Y, Z are single components of `joint`.
pub fn conditional_mutual_information(joint: &JointDistribution, x: usize, y: usize, z: usize) -> Result<f64> {
    conditional_mutual_information_grouped(joint, &[x], &[y], &[z])
}

/// `I(X;Y|Z)` where each of X, Y, Z is a tuple of components. An empty `zs`
/// gives the unconditional mutual information.
pub fn conditional_mutual_information_grouped(
    joint: &JointDistribution,
    xs: &[usize],
    ys: &[usize],
    zs: &[usize],
) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::ParameterDomain("X and Y must name at least one component".into()));
    }
    let mut groups = vec![xs.to_vec(), ys.to_vec()];
    if !zs.is_empty() {
        groups.push(zs.to_vec());
    }
    let m = joint.marginal_grouped(&groups)?;
    let (sx, sy) = (m.sizes()[0], m.sizes()[1]);
    let sz = if zs.is_empty() { 1 } else { m.sizes()[2] };
    let cells = m.probs();

    let mut xz = vec![0.0; sx * sz];
    let mut yz = vec![0.0; sy * sz];
    let mut zm = vec![0.0; sz];
    for a in 0..sx {
        for b in 0..sy {
            for c in 0..sz {
                let p = cells[(a * sy + b) * sz + c];
                xz[a * sz + c] += p;
                yz[b * sz + c] += p;
                zm[c] += p;
            }
        }
    }
    let i = entropy_of(&xz) + entropy_of(&yz) - entropy_of(cells) - entropy_of(&zm);
    Ok(i.max(0.0))
}

pub fn mutual_information(joint: &JointDistribution, x: usize, y: usize) -> Result<f64> {
    conditional_mutual_information_grouped(joint, &[x], &[y], &[])
}
