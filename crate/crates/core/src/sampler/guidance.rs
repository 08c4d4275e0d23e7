//! Multimodal noisy guidance: the guiding prediction comes from the same
//! denoiser with the other modality pushed to a noisier time.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::denoise::{Denoiser, DenoiserOutput, Logits};
use crate::error::{Error, Result};
use crate::forward::{add_noise, mask_with_keep};
use crate::schedule::{MaskSchedule, NoiseSchedule};
use crate::state::{ContinuousState, SequenceState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidanceConfig {
    pub omega_struct: f64,
    pub omega_seq: f64,
    /// Mask time of the corrupted sequence condition.
    pub unconditional_seq_time: f64,
    /// Normalized time of the corrupted structure condition.
    pub unconditional_struct_time: f64,
    pub rescale_phi: f64,
    pub guidance_start_time: f64,
    pub guidance_end_time: f64,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            omega_struct: 1.5,
            omega_seq: 2.0,
            unconditional_seq_time: 0.6,
            unconditional_struct_time: 0.8,
            rescale_phi: 0.7,
            guidance_start_time: 0.8,
            guidance_end_time: 0.3,
        }
    }
}

impl GuidanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rescale_phi) {
            return Err(Error::Config(format!("rescale_phi {} outside [0, 1]", self.rescale_phi)));
        }
        if !(0.0 <= self.guidance_end_time
            && self.guidance_end_time < self.guidance_start_time
            && self.guidance_start_time <= 1.0)
        {
            return Err(Error::Config(
                "guidance interval must satisfy 0 <= end < start <= 1".into(),
            ));
        }
        for psi in [self.unconditional_seq_time, self.unconditional_struct_time] {
            if !(0.0..=1.0).contains(&psi) {
                return Err(Error::Config(format!("noisy condition time {psi} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Open-interval gate on normalized time.
    pub fn active(&self, tau: f64) -> bool {
        tau > self.guidance_end_time && tau < self.guidance_start_time
    }
}

/// Inputs describing where a step currently sits.
#[derive(Debug, Clone, Copy)]
pub struct GuidanceContext<'a> {
    pub tau: f64,
    pub t_hat: f64,
    pub r: f64,
    pub noise: &'a NoiseSchedule,
    pub mask: &'a MaskSchedule,
    /// When false, a branch whose condition is not noisier than the current
    /// state is skipped instead of raising a configuration error.
    pub strict: bool,
}

fn population_std(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt()
}

/// Apply noisy guidance on top of the conditional pass `cond`.
///
/// `prepare` is applied to both logit sets before they are blended (used to
/// temper before guiding); pass the identity to blend raw logits.
#[allow(clippy::too_many_arguments)]
pub fn noisy_guidance<D, R, P>(
    denoiser: &D,
    noisy: &ContinuousState,
    seq: &SequenceState,
    cond: DenoiserOutput,
    cfg: &GuidanceConfig,
    ctx: GuidanceContext<'_>,
    prepare: P,
    rng: &mut R,
) -> Result<DenoiserOutput>
where
    D: Denoiser + ?Sized,
    R: Rng + ?Sized,
    P: Fn(&Logits) -> Logits,
{
    let mut out = DenoiserOutput {
        x0_hat: cond.x0_hat.clone(),
        logits: prepare(&cond.logits),
    };
    if !cfg.active(ctx.tau) {
        return Ok(out);
    }
    let psi_seq = cfg.unconditional_seq_time;
    let psi_level = ctx.noise.level_at(cfg.unconditional_struct_time);

    if noisy.dim() > 0 {
        if psi_seq > ctx.r {
            let a_r = ctx.mask.alpha(ctx.r)?;
            let keep = if a_r > 0.0 { ctx.mask.alpha(psi_seq)? / a_r } else { 0.0 };
            let seq_psi = mask_with_keep(seq, keep, rng);
            let ng = denoiser.denoise(noisy, &seq_psi, ctx.t_hat, psi_seq)?;
            let w = cfg.omega_struct;
            let guided: Vec<f64> = cond
                .x0_hat
                .coords
                .iter()
                .zip(&ng.x0_hat.coords)
                .map(|(c, n)| w * c + (1.0 - w) * n)
                .collect();
            let s_cond = population_std(&cond.x0_hat.coords);
            let s_guided = population_std(&guided);
            let ratio = if s_guided > 0.0 && s_cond > 0.0 { s_cond / s_guided } else { 1.0 };
            let phi = cfg.rescale_phi;
            for ((o, g), c) in out.x0_hat.coords.iter_mut().zip(&guided).zip(&cond.x0_hat.coords) {
                *o = phi * g * ratio + (1.0 - phi) * c;
            }
        } else if ctx.strict {
            return Err(Error::Config(format!(
                "sequence guidance time {psi_seq} is not noisier than r = {}",
                ctx.r
            )));
        }
    }

    if !seq.is_empty() {
        if psi_level > ctx.t_hat {
            let mut x_psi = noisy.clone();
            add_noise(&mut x_psi.coords, (psi_level * psi_level - ctx.t_hat * ctx.t_hat).sqrt(), rng);
            let ng = denoiser.denoise(&x_psi, seq, psi_level, ctx.r)?;
            let ng_logits = prepare(&ng.logits);
            let w = cfg.omega_seq;
            for (o, n) in out.logits.as_mut_slice().iter_mut().zip(ng_logits.as_slice()) {
                *o = w * *o + (1.0 - w) * n;
            }
        } else if ctx.strict {
            return Err(Error::Config(format!(
                "structure guidance level {psi_level} is not noisier than t_hat = {}",
                ctx.t_hat
            )));
        }
    }
    Ok(out)
}
