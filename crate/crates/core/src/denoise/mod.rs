//! Denoiser contract and exact analytic oracles.

pub(crate) mod coupled;
mod gmm;
mod model_file;
pub(crate) mod table;

pub use coupled::{coupled_denoise, CoupledToyModel};
pub use gmm::{gm_denoise, GaussianMixtureModel};
pub use model_file::OracleModel;
pub use table::{table_denoise, DiscreteTable};

use rand::Rng;

use crate::error::{Error, Result};
use crate::state::{ContinuousState, SequenceState, Vocabulary};

/// Stand-in for a log-probability of minus infinity.
pub const NEG_INF_LOGIT: f64 = -1e9;

/// Per-position log-probabilities over the real (non-mask) tokens, stored
/// row-major as `L x V`.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    vocab: usize,
    data: Vec<f64>,
}

impl Logits {
    pub fn new(len: usize, vocab: usize) -> Self {
        Self {
            vocab,
            data: vec![0.0; len * vocab],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, vocab: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * vocab);
        for row in rows {
            if row.len() != vocab {
                return Err(Error::Shape(format!("logit row of width {} != {vocab}", row.len())));
            }
            data.extend(row);
        }
        Ok(Self { vocab, data })
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.vocab).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.vocab..(i + 1) * self.vocab]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.vocab..(i + 1) * self.vocab]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Set row `i` to log of `probs`, mapping zeros to the sentinel.
    pub fn set_probs(&mut self, i: usize, probs: &[f64]) {
        for (l, &p) in self.row_mut(i).iter_mut().zip(probs) {
            *l = if p > 0.0 { p.ln() } else { NEG_INF_LOGIT };
        }
    }

    pub fn set_one_hot(&mut self, i: usize, token: usize) {
        for (v, l) in self.row_mut(i).iter_mut().enumerate() {
            *l = if v == token { 0.0 } else { NEG_INF_LOGIT };
        }
    }

    /// Softmax of row `i`.
    pub fn probs(&self, i: usize) -> Vec<f64> {
        softmax(self.row(i))
    }

    /// Shannon entropy (nats) of the softmax of row `i`.
    pub fn entropy(&self, i: usize) -> f64 {
        entropy(&self.probs(i))
    }

    pub fn sample<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> usize {
        sample_categorical(&self.probs(i), rng)
    }
}

pub fn softmax(row: &[f64]) -> Vec<f64> {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = row.iter().map(|&l| (l - m).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    p
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Inverse-CDF draw from a normalized probability vector.
pub fn sample_categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &pi) in p.iter().enumerate() {
        if pi > 0.0 {
            last = i;
            acc += pi;
            if u < acc {
                return i;
            }
        }
    }
    last
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserOutput {
    pub x0_hat: ContinuousState,
    pub logits: Logits,
}

impl DenoiserOutput {
    /// Score `(x0_hat - x) / t^2` of the noised marginal at level `t`.
    pub fn score(&self, x: &ContinuousState, t: f64) -> Vec<f64> {
        let t2 = t * t;
        self.x0_hat
            .coords
            .iter()
            .zip(&x.coords)
            .map(|(a, b)| (a - b) / t2)
            .collect()
    }
}

/// `D(x_{r,t}, r, t) -> (x0_hat, logits)`.
pub trait Denoiser: Sync {
    fn vocab(&self) -> Vocabulary;
    fn seq_len(&self) -> usize;
    fn dim(&self) -> usize;
    fn denoise(
        &self,
        coords: &ContinuousState,
        seq: &SequenceState,
        t: f64,
        r: f64,
    ) -> Result<DenoiserOutput>;

    fn check_shapes(&self, coords: &ContinuousState, seq: &SequenceState) -> Result<()> {
        if coords.dim() != self.dim() {
            return Err(Error::Shape(format!(
                "coordinate dimension {} != model dimension {}",
                coords.dim(),
                self.dim()
            )));
        }
        if seq.len() != self.seq_len() {
            return Err(Error::Shape(format!(
                "sequence length {} != model length {}",
                seq.len(),
                self.seq_len()
            )));
        }
        if seq.vocab != self.vocab() {
            return Err(Error::Shape("vocabulary mismatch".into()));
        }
        Ok(())
    }
}

/// One-hot rows for unmasked positions; used by every oracle.
pub(crate) fn observed_logits(seq: &SequenceState) -> Logits {
    let mut logits = Logits::new(seq.len(), seq.vocab.size());
    for (i, &tok) in seq.tokens.iter().enumerate() {
        if !seq.vocab.is_mask(tok) {
            logits.set_one_hot(i, tok);
        }
    }
    logits
}
