use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{log_sum_exp, observed_logits, sample_categorical, Denoiser, DenoiserOutput, DiscreteTable};
use crate::error::{Error, Result};
use crate::state::{ContinuousState, SequenceState, Vocabulary};

/// Joint toy model: a component `c` is written as token `c` at `position`,
/// the remaining positions are drawn from per-component categoricals and
/// the coordinates are `N(mu_c, sigma0^2 I)`.
///
/// `tables[c][i]` is the token distribution at position `i` under
/// component `c`; the row at `position` is ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledToyModel {
    pub vocab: usize,
    pub length: usize,
    pub position: usize,
    pub sigma0: f64,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub tables: Vec<Vec<Vec<f64>>>,
}

impl CoupledToyModel {
    pub fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if k < 1 || k > self.vocab || self.vocab < 2 {
            return Err(Error::Config(format!(
                "need 1 <= K <= V and V >= 2, got K={k} V={}",
                self.vocab
            )));
        }
        if self.position >= self.length {
            return Err(Error::Config("component position outside sequence".into()));
        }
        if self.weights.iter().any(|&w| !(w > 0.0))
            || (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::Config("component weights must be positive and sum to 1".into()));
        }
        if self.means.len() != k {
            return Err(Error::Config("need one mean per component".into()));
        }
        let d = self.means[0].len();
        if d == 0 || self.means.iter().any(|m| m.len() != d) {
            return Err(Error::Config("means must share a positive dimension".into()));
        }
        if !(self.sigma0 > 0.0) {
            return Err(Error::Config("sigma0 must be positive".into()));
        }
        if self.tables.len() != k || self.tables.iter().any(|t| t.len() != self.length) {
            return Err(Error::Config("tables must be K x L x V".into()));
        }
        for (c, table) in self.tables.iter().enumerate() {
            for (i, row) in table.iter().enumerate() {
                if i == self.position {
                    continue;
                }
                if row.len() != self.vocab
                    || row.iter().any(|&p| !(p >= 0.0))
                    || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9
                {
                    return Err(Error::Config(format!(
                        "table row (component {c}, position {i}) is not a distribution over {} tokens",
                        self.vocab
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// Unnormalized log posterior over components given noisy coordinates
    /// at level `t` and the unmasked tokens.
    pub fn log_component_joint(&self, x: &[f64], seq: &SequenceState, t: f64) -> Vec<f64> {
        let var = self.sigma0 * self.sigma0 + t * t;
        let mask = seq.vocab.mask_id();
        (0..self.n_components())
            .map(|c| {
                let sq: f64 = x
                    .iter()
                    .zip(&self.means[c])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let mut lp = self.weights[c].ln() - 0.5 * sq / var;
                for (i, &tok) in seq.tokens.iter().enumerate() {
                    if tok == mask {
                        continue;
                    }
                    let p = if i == self.position {
                        if tok == c {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        self.tables[c][i][tok]
                    };
                    lp += if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
                }
                lp
            })
            .collect()
    }

    pub fn posterior(&self, x: &[f64], seq: &SequenceState, t: f64) -> Result<Vec<f64>> {
        let lj = self.log_component_joint(x, seq, t);
        let z = log_sum_exp(&lj);
        if !z.is_finite() {
            return Err(Error::ImpossibleEvidence);
        }
        Ok(lj.iter().map(|l| (l - z).exp()).collect())
    }

    /// Exact joint log density of a clean pair.
    pub fn log_density(&self, x: &[f64], tokens: &[usize]) -> f64 {
        let c = tokens[self.position];
        if c >= self.n_components() {
            return f64::NEG_INFINITY;
        }
        let d = x.len() as f64;
        let s2 = self.sigma0 * self.sigma0;
        let sq: f64 = x.iter().zip(&self.means[c]).map(|(a, b)| (a - b) * (a - b)).sum();
        let mut lp = self.weights[c].ln() - 0.5 * d * (2.0 * std::f64::consts::PI * s2).ln() - 0.5 * sq / s2;
        for (i, &tok) in tokens.iter().enumerate() {
            if i != self.position {
                lp += self.tables[c][i][tok].ln();
            }
        }
        lp
    }

    /// Token marginal `p(tokens)` as an explicit table.
    pub fn token_table(&self) -> Result<DiscreteTable> {
        let n = self.vocab.pow(self.length as u32);
        let mut probs = vec![0.0; n];
        for (idx, p) in probs.iter_mut().enumerate() {
            let mut rest = idx;
            let mut tokens = vec![0; self.length];
            for slot in tokens.iter_mut().rev() {
                *slot = rest % self.vocab;
                rest /= self.vocab;
            }
            let c = tokens[self.position];
            if c >= self.n_components() {
                continue;
            }
            *p = self.weights[c]
                * tokens
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != self.position)
                    .map(|(i, &tok)| self.tables[c][i][tok])
                    .product::<f64>();
        }
        DiscreteTable::new(self.vocab, self.length, probs)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Vec<usize>) {
        let c = sample_categorical(&self.weights, rng);
        let x = self.means[c]
            .iter()
            .map(|m| {
                let e: f64 = rng.sample(StandardNormal);
                m + self.sigma0 * e
            })
            .collect();
        let tokens = (0..self.length)
            .map(|i| {
                if i == self.position {
                    c
                } else {
                    sample_categorical(&self.tables[c][i], rng)
                }
            })
            .collect();
        (x, tokens)
    }
}

/// Exact joint posterior denoiser for the coupled model.
pub fn coupled_denoise(
    model: &CoupledToyModel,
    coords: &ContinuousState,
    seq: &SequenceState,
    t: f64,
) -> Result<DenoiserOutput> {
    let post = model.posterior(&coords.coords, seq, t)?;
    let s2 = model.sigma0 * model.sigma0;
    let t2 = t * t;
    let mut x0 = vec![0.0; coords.dim()];
    for (c, w) in post.iter().enumerate() {
        for ((o, xi), m) in x0.iter_mut().zip(&coords.coords).zip(&model.means[c]) {
            *o += w * (s2 * xi + t2 * m) / (s2 + t2);
        }
    }
    let mut logits = observed_logits(seq);
    let v = model.vocab;
    for (i, &tok) in seq.tokens.iter().enumerate() {
        if !seq.vocab.is_mask(tok) {
            continue;
        }
        let mut p = vec![0.0; v];
        if i == model.position {
            p[..post.len()].copy_from_slice(&post);
        } else {
            for (c, w) in post.iter().enumerate() {
                for (pv, q) in p.iter_mut().zip(&model.tables[c][i]) {
                    *pv += w * q;
                }
            }
        }
        logits.set_probs(i, &p);
    }
    Ok(DenoiserOutput {
        x0_hat: ContinuousState {
            coords: x0,
            mode: coords.mode,
        },
        logits,
    })
}

impl Denoiser for CoupledToyModel {
    fn vocab(&self) -> Vocabulary {
        Vocabulary::new(self.vocab).expect("validated vocabulary")
    }

    fn seq_len(&self) -> usize {
        self.length
    }

    fn dim(&self) -> usize {
        CoupledToyModel::dim(self)
    }

    fn denoise(
        &self,
        coords: &ContinuousState,
        seq: &SequenceState,
        t: f64,
        _r: f64,
    ) -> Result<DenoiserOutput> {
        self.check_shapes(coords, seq)?;
        coupled_denoise(self, coords, seq, t)
    }
}
