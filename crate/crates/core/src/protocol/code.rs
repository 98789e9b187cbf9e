use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::Distribution;

/// Explicit tables for a wiretap code with public feedback.
///
/// Index layouts (all mixed-radix, earliest symbol most significant):
/// * `encoder[t]` (time `t+1`, `t = 0..n`): `((m * |U_x| + u_x) * |F|^(t+1)) + rank(f_0..f_t)`
/// * `feedback[0]`: `u_y`; `feedback[t]` for `t = 1..n`: `rank(y_1..y_t) * |U_y| + u_y`
/// * `decoder`: `rank(y_1..y_n)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodeRepr", into = "CodeRepr")]
pub struct WiretapCode {
    n: usize,
    msg_count: usize,
    input_size: usize,
    output_size: usize,
    feedback_size: usize,
    ux: Distribution,
    uy: Distribution,
    encoder: Vec<Vec<usize>>,
    feedback: Vec<Vec<usize>>,
    decoder: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct CodeRepr {
    n: usize,
    msg_count: usize,
    input_size: usize,
    output_size: usize,
    feedback_size: usize,
    ux: Distribution,
    uy: Distribution,
    encoder: Vec<Vec<usize>>,
    feedback: Vec<Vec<usize>>,
    decoder: Vec<usize>,
}

impl TryFrom<CodeRepr> for WiretapCode {
    type Error = Error;
    fn try_from(r: CodeRepr) -> Result<Self> {
        let code = WiretapCode {
            n: r.n,
            msg_count: r.msg_count,
            input_size: r.input_size,
            output_size: r.output_size,
            feedback_size: r.feedback_size,
            ux: r.ux,
            uy: r.uy,
            encoder: r.encoder,
            feedback: r.feedback,
            decoder: r.decoder,
        };
        code.validate()?;
        Ok(code)
    }
}

impl From<WiretapCode> for CodeRepr {
    fn from(c: WiretapCode) -> Self {
        CodeRepr {
            n: c.n,
            msg_count: c.msg_count,
            input_size: c.input_size,
            output_size: c.output_size,
            feedback_size: c.feedback_size,
            ux: c.ux,
            uy: c.uy,
            encoder: c.encoder,
            feedback: c.feedback,
            decoder: c.decoder,
        }
    }
}

pub(crate) fn rank(symbols: &[usize], radix: usize) -> usize {
    symbols.iter().fold(0, |acc, &s| acc * radix + s)
}

pub(crate) fn unrank(mut r: usize, len: usize, radix: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for s in out.iter_mut().rev() {
        *s = r % radix;
        r /= radix;
    }
    out
}

/// Sizes `(n, N, |X|, |Y|, |F|, |U_x|, |U_y|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Shape {
    pub n: usize,
    pub msgs: usize,
    pub xs: usize,
    pub ys: usize,
    pub fs: usize,
    pub uxs: usize,
    pub uys: usize,
}

impl Shape {
    pub fn encoder_len(&self, t: usize) -> usize {
        self.msgs * self.uxs * self.fs.pow(t as u32 + 1)
    }

    pub fn feedback_len(&self, t: usize) -> usize {
        self.ys.pow(t as u32) * self.uys
    }

    pub fn decoder_len(&self) -> usize {
        self.ys.pow(self.n as u32)
    }
}

impl WiretapCode {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        msg_count: usize,
        input_size: usize,
        output_size: usize,
        feedback_size: usize,
        ux: Distribution,
        uy: Distribution,
        encoder: Vec<Vec<usize>>,
        feedback: Vec<Vec<usize>>,
        decoder: Vec<usize>,
    ) -> Result<Self> {
        CodeRepr { n, msg_count, input_size, output_size, feedback_size, ux, uy, encoder, feedback, decoder }.try_into()
    }

    /// Tabulates a code from closures.
    ///
    /// `enc(t, m, u_x, f_0..f_t)` gives the input at time `t+1`,
    /// `fb(t, y_1..y_t, u_y)` the feedback `F_t`, and `dec(y^n)` the estimate.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fns(
        n: usize,
        msg_count: usize,
        input_size: usize,
        output_size: usize,
        feedback_size: usize,
        ux: Distribution,
        uy: Distribution,
        enc: impl Fn(usize, usize, usize, &[usize]) -> usize,
        fb: impl Fn(usize, &[usize], usize) -> usize,
        dec: impl Fn(&[usize]) -> usize,
    ) -> Result<Self> {
        let shape = Shape {
            n,
            msgs: msg_count,
            xs: input_size,
            ys: output_size,
            fs: feedback_size,
            uxs: ux.alphabet_size(),
            uys: uy.alphabet_size(),
        };
        check_shape(&shape)?;
        let encoder = (0..n)
            .map(|t| {
                let nf = shape.fs.pow(t as u32 + 1);
                (0..shape.encoder_len(t))
                    .map(|i| {
                        let (mu, fr) = (i / nf, i % nf);
                        enc(t, mu / shape.uxs, mu % shape.uxs, &unrank(fr, t + 1, shape.fs))
                    })
                    .collect()
            })
            .collect();
        let feedback = (0..n)
            .map(|t| {
                (0..shape.feedback_len(t)).map(|i| fb(t, &unrank(i / shape.uys, t, shape.ys), i % shape.uys)).collect()
            })
            .collect();
        let decoder = (0..shape.decoder_len()).map(|i| dec(&unrank(i, n, shape.ys))).collect();
        Self::new(n, msg_count, input_size, output_size, feedback_size, ux, uy, encoder, feedback, decoder)
    }

    /// A code without local randomness or feedback.
    pub fn open_loop(
        msg_count: usize,
        input_size: usize,
        output_size: usize,
        codewords: &[Vec<usize>],
        dec: impl Fn(&[usize]) -> usize,
    ) -> Result<Self> {
        if codewords.len() != msg_count {
            return Err(Error::InvalidCode("one codeword per message is required".into()));
        }
        let n = codewords.first().map_or(0, |c| c.len());
        if codewords.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidCode("codewords must share one length".into()));
        }
        Self::from_fns(
            n,
            msg_count,
            input_size,
            output_size,
            1,
            Distribution::uniform(1),
            Distribution::uniform(1),
            |t, m, _, _| codewords[m][t],
            |_, _, _| 0,
            dec,
        )
    }

    pub(crate) fn shape(&self) -> Shape {
        Shape {
            n: self.n,
            msgs: self.msg_count,
            xs: self.input_size,
            ys: self.output_size,
            fs: self.feedback_size,
            uxs: self.ux.alphabet_size(),
            uys: self.uy.alphabet_size(),
        }
    }

    fn validate(&self) -> Result<()> {
        let s = self.shape();
        check_shape(&s)?;
        let bad = |what: &str| Err(Error::InvalidCode(what.to_string()));
        if self.encoder.len() != s.n || self.feedback.len() != s.n {
            return bad("encoder and feedback need one table per time step");
        }
        for t in 0..s.n {
            if self.encoder[t].len() != s.encoder_len(t) {
                return Err(Error::InvalidCode(format!(
                    "encoder table {t} has {} entries, expected {}",
                    self.encoder[t].len(),
                    s.encoder_len(t)
                )));
            }
            if self.feedback[t].len() != s.feedback_len(t) {
                return Err(Error::InvalidCode(format!(
                    "feedback table {t} has {} entries, expected {}",
                    self.feedback[t].len(),
                    s.feedback_len(t)
                )));
            }
            if self.encoder[t].iter().any(|&x| x >= s.xs) {
                return bad("encoder output outside the input alphabet");
            }
            if self.feedback[t].iter().any(|&f| f >= s.fs) {
                return bad("feedback symbol outside the feedback alphabet");
            }
        }
        if self.decoder.len() != s.decoder_len() {
            return bad("decoder needs one entry per output sequence");
        }
        if self.decoder.iter().any(|&m| m >= s.msgs) {
            return bad("decoder output outside the message set");
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn msg_count(&self) -> usize {
        self.msg_count
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn feedback_size(&self) -> usize {
        self.feedback_size
    }

    pub fn ux(&self) -> &Distribution {
        &self.ux
    }

    pub fn uy(&self) -> &Distribution {
        &self.uy
    }

    pub fn decoder(&self) -> &[usize] {
        &self.decoder
    }

    /// `X_{t+1}` given the message, sender randomness and `f_0..f_t`.
    pub fn encode(&self, t: usize, m: usize, ux: usize, f: &[usize]) -> usize {
        let nf = self.feedback_size.pow(t as u32 + 1);
        self.encoder[t][(m * self.ux.alphabet_size() + ux) * nf + rank(&f[..=t], self.feedback_size)]
    }

    /// `F_t` given `y_1..y_t` and receiver randomness.
    pub fn feedback(&self, t: usize, y: &[usize], uy: usize) -> usize {
        self.feedback[t][rank(&y[..t], self.output_size) * self.uy.alphabet_size() + uy]
    }

    pub fn decode(&self, y: &[usize]) -> usize {
        self.decoder[rank(y, self.output_size)]
    }
}

fn check_shape(s: &Shape) -> Result<()> {
    if s.n == 0 || s.msgs == 0 || s.xs == 0 || s.ys == 0 || s.fs == 0 {
        return Err(Error::InvalidCode("all sizes must be positive".into()));
    }
    let cells = (s.msgs as u128)
        .saturating_mul(s.uxs as u128)
        .saturating_mul((s.fs as u128).saturating_pow(s.n as u32))
        .max((s.ys as u128).saturating_pow(s.n as u32).saturating_mul(s.uys as u128));
    if cells > 1 << 32 {
        return Err(Error::InvalidCode("code tables too large to store".into()));
    }
    Ok(())
}
