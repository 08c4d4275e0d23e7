//! Sequence updates: logit tempering and the two unmasking kernels.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::denoise::Logits;
use crate::state::SequenceState;

/// Reverse kernel for masked tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKernel {
    /// Masked positions unmask with probability `(a_new - a_old) / (1 - a_old)`;
    /// unmasked tokens are frozen.
    Standard,
    /// Uniform unmask/remask planning: a uniform subset of `floor(kappa L)`
    /// positions is unmasked, everything else is remasked.
    #[default]
    PathPlanning,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemperatureConfig {
    /// Global step-function temperature.
    pub global: bool,
    pub global_high: f64,
    pub global_low: f64,
    pub global_switch: f64,
    pub entropy_adaptive: bool,
    pub entropy_beta: f64,
    pub entropy_gamma: f64,
    /// Reference entropy; `ln V` when unset.
    pub h_max: Option<f64>,
}

impl Default for TemperatureConfig {
    fn default() -> Self {
        Self {
            global: true,
            global_high: 0.8,
            global_low: 0.1,
            global_switch: 0.2,
            entropy_adaptive: true,
            entropy_beta: 1.0,
            entropy_gamma: 1.0,
            h_max: None,
        }
    }
}

impl TemperatureConfig {
    /// No tempering at all; samples follow the denoiser exactly.
    pub fn off() -> Self {
        Self {
            global: false,
            entropy_adaptive: false,
            ..Self::default()
        }
    }

    pub fn is_identity(&self) -> bool {
        !self.global && !self.entropy_adaptive
    }

    pub fn global_at(&self, r: f64) -> f64 {
        if !self.global {
            1.0
        } else if r >= self.global_switch {
            self.global_high
        } else {
            self.global_low
        }
    }

    /// Temperature for a position whose distribution has entropy `h`.
    pub fn temperature(&self, r: f64, h: f64, vocab: usize) -> f64 {
        let g = self.global_at(r);
        if !self.entropy_adaptive {
            return g;
        }
        let h_max = self.h_max.unwrap_or((vocab as f64).ln());
        g * (1.0 + r.powf(self.entropy_gamma) * self.entropy_beta * (h_max - h) / h_max)
    }
}

/// Divide each row by its own temperature.
pub fn temper_logits(logits: &Logits, r: f64, cfg: &TemperatureConfig) -> Logits {
    if cfg.is_identity() {
        return logits.clone();
    }
    let mut out = logits.clone();
    for i in 0..logits.len() {
        let h = logits.entropy(i);
        let tau = cfg.temperature(r, h, logits.vocab());
        out.row_mut(i).iter_mut().for_each(|l| *l /= tau);
    }
    out
}

/// One step of the standard masked-diffusion reverse kernel.
pub fn standard_step<R: Rng + ?Sized>(
    x: &mut SequenceState,
    logits: &Logits,
    alpha_old: f64,
    alpha_new: f64,
    rng: &mut R,
) {
    let p_unmask = if alpha_new >= 1.0 {
        1.0
    } else {
        ((alpha_new - alpha_old) / (1.0 - alpha_old)).clamp(0.0, 1.0)
    };
    let mask = x.vocab.mask_id();
    for (i, tok) in x.tokens.iter_mut().enumerate() {
        if *tok == mask && (p_unmask >= 1.0 || rng.random::<f64>() < p_unmask) {
            *tok = logits.sample(i, rng);
        }
    }
}

/// Number of positions left unmasked after a planning step.
pub fn unmask_count(kappa: f64, len: usize) -> usize {
    if kappa >= 1.0 {
        return len;
    }
    // The small slack keeps exact fractions such as 0.7 * 10 from flooring to 6.
    ((kappa.max(0.0) * len as f64 + 1e-9).floor() as usize).min(len)
}

/// One path-planning step towards unmasked fraction `kappa`.
pub fn path_planning_step<R: Rng + ?Sized>(
    x: &mut SequenceState,
    logits: &Logits,
    kappa: f64,
    rng: &mut R,
) {
    let len = x.len();
    let k = unmask_count(kappa, len);
    let mut order: Vec<usize> = (0..len).collect();
    order.partial_shuffle(rng, k);
    let mask = x.vocab.mask_id();
    for &i in &order[..k] {
        if x.tokens[i] == mask {
            x.tokens[i] = logits.sample(i, rng);
        }
    }
    for &i in &order[k..] {
        x.tokens[i] = mask;
    }
}
