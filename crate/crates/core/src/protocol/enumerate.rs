use super::code::{Shape, WiretapCode};
use crate::prob::Distribution;

/// All deterministic codes (no local randomness) of a given shape, addressed
/// by rank. Table entries are read as one mixed-radix number in the order
/// `feedback[0..n]`, `encoder[0..n]`, `decoder`, last entry least significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeterministicCodeSpace {
    shape: Shape,
}

impl DeterministicCodeSpace {
    pub fn new(n: usize, msg_count: usize, input_size: usize, output_size: usize, feedback_size: usize) -> Self {
        DeterministicCodeSpace {
            shape: Shape { n, msgs: msg_count, xs: input_size, ys: output_size, fs: feedback_size, uxs: 1, uys: 1 },
        }
    }

    fn radices(&self) -> Vec<(usize, usize)> {
        let s = &self.shape;
        let mut r: Vec<(usize, usize)> = (0..s.n).map(|t| (s.feedback_len(t), s.fs)).collect();
        r.extend((0..s.n).map(|t| (s.encoder_len(t), s.xs)));
        r.push((s.decoder_len(), s.msgs));
        r
    }

    pub fn count(&self) -> u128 {
        self.radices()
            .iter()
            .fold(1u128, |acc, &(len, radix)| acc.saturating_mul((radix as u128).saturating_pow(len as u32)))
    }

    pub fn code(&self, mut rank: u128) -> WiretapCode {
        let s = &self.shape;
        let mut tables: Vec<Vec<usize>> = self.radices().iter().map(|&(len, _)| vec![0; len]).collect();
        for (table, &(_, radix)) in tables.iter_mut().zip(self.radices().iter()).rev() {
            for v in table.iter_mut().rev() {
                *v = (rank % radix as u128) as usize;
                rank /= radix as u128;
            }
        }
        let decoder = tables.pop().expect("decoder table");
        let encoder = tables.split_off(s.n);
        WiretapCode::new(
            s.n,
            s.msgs,
            s.xs,
            s.ys,
            s.fs,
            Distribution::uniform(1),
            Distribution::uniform(1),
            encoder,
            tables,
            decoder,
        )
        .expect("enumerated tables are valid")
    }
}
