use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{observed_logits, sample_categorical, Denoiser, DenoiserOutput, Logits};
use crate::error::{Error, Result};
use crate::state::{ContinuousState, SequenceState, Vocabulary};

const MAX_LEN: usize = 8;
const MAX_VOCAB: usize = 6;
const CACHE_LIMIT: usize = 100_000;

/// Explicit joint distribution over `V^L` sequences. Sequence `x` lives at
/// index `sum_i x_i V^(L-1-i)` (position 0 is the most significant digit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TableSpec", into = "TableSpec")]
pub struct DiscreteTable {
    vocab: usize,
    len: usize,
    probs: Vec<f64>,
    #[serde(skip)]
    cache: Option<Vec<Option<Vec<f64>>>>,
}

#[derive(Serialize, Deserialize)]
struct TableSpec {
    vocab: usize,
    length: usize,
    probs: Vec<f64>,
}

impl From<TableSpec> for DiscreteTable {
    fn from(s: TableSpec) -> Self {
        Self {
            vocab: s.vocab,
            len: s.length,
            probs: s.probs,
            cache: None,
        }
    }
}

impl From<DiscreteTable> for TableSpec {
    fn from(t: DiscreteTable) -> Self {
        Self {
            vocab: t.vocab,
            length: t.len,
            probs: t.probs,
        }
    }
}

impl DiscreteTable {
    pub fn new(vocab: usize, len: usize, probs: Vec<f64>) -> Result<Self> {
        let mut t = Self {
            vocab,
            len,
            probs,
            cache: None,
        };
        t.prepare()?;
        Ok(t)
    }

    /// Product of independent per-position marginals.
    pub fn product(marginals: &[Vec<f64>]) -> Result<Self> {
        let len = marginals.len();
        let vocab = marginals.first().map_or(0, Vec::len);
        let n = vocab.checked_pow(len as u32).unwrap_or(0);
        let probs = (0..n)
            .map(|idx| {
                decode(idx, vocab, len)
                    .iter()
                    .zip(marginals)
                    .map(|(&v, m)| m[v])
                    .product()
            })
            .collect();
        Self::new(vocab, len, probs)
    }

    /// Validate and build the conditional lookup for small tables.
    pub fn prepare(&mut self) -> Result<()> {
        if self.len == 0 || self.len > MAX_LEN || self.vocab < 2 || self.vocab > MAX_VOCAB {
            return Err(Error::Config(format!(
                "table needs 1 <= L <= {MAX_LEN} and 2 <= V <= {MAX_VOCAB}, got L={} V={}",
                self.len, self.vocab
            )));
        }
        if self.probs.len() != self.vocab.pow(self.len as u32) {
            return Err(Error::Config(format!(
                "table has {} entries, expected V^L = {}",
                self.probs.len(),
                self.vocab.pow(self.len as u32)
            )));
        }
        if self.probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Config("table entries must be finite and non-negative".into()));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("table sums to {total}, expected 1")));
        }
        if (self.vocab + 1).pow(self.len as u32) <= CACHE_LIMIT {
            self.cache = Some(self.build_cache());
        }
        Ok(())
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn index_of(&self, tokens: &[usize]) -> usize {
        tokens.iter().fold(0, |acc, &v| acc * self.vocab + v)
    }

    pub fn tokens_of(&self, index: usize) -> Vec<usize> {
        decode(index, self.vocab, self.len)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        self.tokens_of(sample_categorical(&self.probs, rng))
    }

    // Pattern index over (V+1)^L where digit V is the mask.
    fn pattern_index(&self, tokens: &[usize]) -> usize {
        tokens.iter().fold(0, |acc, &v| acc * (self.vocab + 1) + v)
    }

    // Every clean sequence contributes to each of its 2^L masked views.
    fn build_cache(&self) -> Vec<Option<Vec<f64>>> {
        let (v, l) = (self.vocab, self.len);
        let n_pat = (v + 1).pow(l as u32);
        let mut mass = vec![0.0; n_pat];
        let mut joint = vec![0.0; n_pat * l * v];
        for (idx, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let x = decode(idx, v, l);
            for subset in 0..(1usize << l) {
                let view: Vec<usize> = (0..l)
                    .map(|i| if subset >> i & 1 == 1 { v } else { x[i] })
                    .collect();
                let pi = self.pattern_index(&view);
                mass[pi] += p;
                for i in 0..l {
                    if subset >> i & 1 == 1 {
                        joint[(pi * l + i) * v + x[i]] += p;
                    }
                }
            }
        }
        (0..n_pat)
            .map(|pi| {
                (mass[pi] > 0.0).then(|| {
                    joint[pi * l * v..(pi + 1) * l * v]
                        .iter()
                        .map(|j| j / mass[pi])
                        .collect()
                })
            })
            .collect()
    }

    /// `p(x0_i = v | unmasked tokens)` for every masked position, by
    /// enumeration. Rows of unmasked positions are zero.
    pub fn conditionals(&self, tokens: &[usize]) -> Result<Vec<f64>> {
        let (v, l) = (self.vocab, self.len);
        if let Some(cache) = &self.cache {
            return cache[self.pattern_index(tokens)]
                .clone()
                .ok_or(Error::ImpossibleEvidence);
        }
        let mut joint = vec![0.0; l * v];
        let mut mass = 0.0;
        for (idx, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let x = decode(idx, v, l);
            if x.iter().zip(tokens).any(|(a, &b)| b != v && *a != b) {
                continue;
            }
            mass += p;
            for i in 0..l {
                if tokens[i] == v {
                    joint[i * v + x[i]] += p;
                }
            }
        }
        if mass == 0.0 {
            return Err(Error::ImpossibleEvidence);
        }
        joint.iter_mut().for_each(|j| *j /= mass);
        Ok(joint)
    }
}

fn decode(mut index: usize, vocab: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % vocab;
        index /= vocab;
    }
    out
}

/// Exact per-position posterior logits given the unmasked tokens.
pub fn table_denoise(model: &DiscreteTable, x_r: &SequenceState) -> Result<Logits> {
    let cond = model.conditionals(&x_r.tokens)?;
    let mut logits = observed_logits(x_r);
    for (i, &tok) in x_r.tokens.iter().enumerate() {
        if x_r.vocab.is_mask(tok) {
            logits.set_probs(i, &cond[i * model.vocab..(i + 1) * model.vocab]);
        }
    }
    Ok(logits)
}

impl Denoiser for DiscreteTable {
    fn vocab(&self) -> Vocabulary {
        Vocabulary::new(self.vocab).expect("validated vocabulary")
    }

    fn seq_len(&self) -> usize {
        self.len
    }

    fn dim(&self) -> usize {
        0
    }

    fn denoise(
        &self,
        coords: &ContinuousState,
        seq: &SequenceState,
        _t: f64,
        _r: f64,
    ) -> Result<DenoiserOutput> {
        self.check_shapes(coords, seq)?;
        Ok(DenoiserOutput {
            x0_hat: coords.clone(),
            logits: table_denoise(self, seq)?,
        })
    }
}
