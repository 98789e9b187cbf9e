use super::{Distribution, Dmc, JointDistribution};
use crate::config::{saturating_pow, Caps};
use crate::error::{Error, Result};

/// The i.i.d. product `p^n` as an explicit joint over `n` components.
pub fn product_power(p: &Distribution, n: usize, caps: &Caps) -> Result<JointDistribution> {
    if n == 0 {
        return Err(Error::ParameterDomain("product power needs n >= 1".into()));
    }
    let k = p.alphabet_size();
    Caps::check("product alphabet", saturating_pow(k, n), caps.outcome_cells)?;
    let mut cells = vec![1.0];
    for _ in 0..n {
        let mut next = Vec::with_capacity(cells.len() * k);
        for &c in &cells {
            next.extend(p.probs().iter().map(|&q| c * q));
        }
        cells = next;
    }
    Ok(JointDistribution::from_computed(vec![k; n], cells))
}

/// Joint law of `(input, output)` with mass `p_in(x) k(y|x)`.
pub fn push_through_kernel(p_in: &Distribution, k: &Dmc) -> Result<JointDistribution> {
    if p_in.alphabet_size() != k.input_size() {
        return Err(Error::AlphabetMismatch { left: p_in.alphabet_size(), right: k.input_size() });
    }
    let cells =
        p_in.probs().iter().zip(k.rows()).flat_map(|(&px, row)| row.probs().iter().map(move |&w| px * w)).collect();
    Ok(JointDistribution::from_computed(vec![k.input_size(), k.output_size()], cells))
}
