//! Reward tilting over both modalities: sample `p · exp(β R(x, tokens))`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{drive, ResamplePolicy, SteeringRun};
use crate::denoise::{log_sum_exp, sample_categorical, Denoiser, Logits};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rewards::Reward;
use crate::sampler::{guided_output, initial_state, sequence_update, SamplerConfig, SequenceKernel, StepGeometry};
use crate::schedule::TimeCoupling;
use crate::state::{JointState, SequenceState};

/// Inverse temperature as a function of trajectory progress `s = i / T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaSchedule {
    Constant { beta: f64 },
    /// `β s`, ramping from 0 at the start of sampling to `beta` at the end.
    LinearRamp { beta: f64 },
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule::Constant { beta: 1.0 }
    }
}

impl BetaSchedule {
    pub fn at(&self, progress: f64) -> f64 {
        match *self {
            BetaSchedule::Constant { beta } => beta,
            BetaSchedule::LinearRamp { beta } => beta * progress,
        }
    }

    /// Derivative with respect to progress.
    pub fn derivative(&self) -> f64 {
        match *self {
            BetaSchedule::Constant { .. } => 0.0,
            BetaSchedule::LinearRamp { beta } => beta,
        }
    }

    fn beta(&self) -> f64 {
        match *self {
            BetaSchedule::Constant { beta } | BetaSchedule::LinearRamp { beta } => beta,
        }
    }
}

/// Coordinates at which the reward and its gradient are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RewardPoint {
    /// The current noisy coordinates. The tilt then targets `p_t e^{βR}` at
    /// every level, which is exact for any reward.
    Noisy,
    /// The denoiser's clean estimate, with the gradient applied as if taken
    /// at the noisy point. Useful for rewards that are meaningless on noise.
    #[default]
    Denoised,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FkcMmConfig {
    pub beta: BetaSchedule,
    pub tau_stop: f64,
    pub ess_fraction: f64,
    pub reward_at: RewardPoint,
}

impl Default for FkcMmConfig {
    fn default() -> Self {
        Self {
            beta: BetaSchedule::default(),
            tau_stop: 1.0,
            ess_fraction: 0.5,
            reward_at: RewardPoint::default(),
        }
    }
}

impl FkcMmConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.beta.beta().is_finite() {
            return Err(Error::Config("beta must be finite".into()));
        }
        self.policy().validate()
    }

    pub fn policy(&self) -> ResamplePolicy {
        ResamplePolicy { tau_stop: self.tau_stop, ess_fraction: self.ess_fraction }
    }
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteReward)
    }
}

/// Reweight a transition row by `exp(β ΔR_j)` and renormalize. Returns the
/// tilted row and `log Σ_j base_j exp(β ΔR_j)`, the particle's weight factor.
pub fn tilted_transition(base: &[f64], delta_r: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let logs: Vec<f64> = base
        .iter()
        .zip(delta_r)
        .map(|(&b, &d)| if b > 0.0 { b.ln() + beta * d } else { f64::NEG_INFINITY })
        .collect();
    let log_z = log_sum_exp(&logs);
    let probs = logs.iter().map(|l| (l - log_z).exp()).collect();
    (probs, log_z)
}

/// Standard unmasking step with every masked position's transition tilted
/// by the reward change it would cause; returns the summed log-normalizers.
#[allow(clippy::too_many_arguments)]
pub fn tilted_sequence_update<Rw, R>(
    seq: &mut SequenceState,
    logits: &Logits,
    alpha_old: f64,
    alpha_new: f64,
    reward: &Rw,
    coords: &[f64],
    beta: f64,
    rng: &mut R,
) -> Result<f64>
where
    Rw: Reward + ?Sized,
    R: Rng + ?Sized,
{
    let p_unmask = if alpha_new >= 1.0 {
        1.0
    } else {
        ((alpha_new - alpha_old) / (1.0 - alpha_old)).clamp(0.0, 1.0)
    };
    if p_unmask == 0.0 {
        return Ok(0.0);
    }
    let mask = seq.vocab.mask_id();
    let current = finite(reward.value(coords, &seq.tokens)?)?;
    let mut probe = seq.tokens.clone();
    let mut log_w = 0.0;
    let mut next = seq.tokens.clone();
    for pos in 0..seq.len() {
        if seq.tokens[pos] != mask {
            continue;
        }
        // Option 0 keeps the mask; option v + 1 unmasks to token v.
        let mut base = vec![1.0 - p_unmask];
        let mut delta = vec![0.0];
        for (v, p) in logits.probs(pos).into_iter().enumerate() {
            probe[pos] = v;
            base.push(p_unmask * p);
            delta.push(finite(reward.value(coords, &probe)?)? - current);
        }
        probe[pos] = mask;
        let (tilted, log_z) = tilted_transition(&base, &delta, beta);
        log_w += log_z;
        let pick = sample_categorical(&tilted, rng);
        if pick > 0 {
            next[pos] = pick - 1;
        }
    }
    seq.tokens = next;
    Ok(log_w)
}

fn reward_point<'a>(mode: RewardPoint, noisy: &'a [f64], denoised: &'a [f64]) -> &'a [f64] {
    match mode {
        RewardPoint::Noisy => noisy,
        RewardPoint::Denoised => denoised,
    }
}

/// `β_0 R` at a starting state, the log-weight that makes the prior draw a
/// draw from the initial tilted marginal.
pub fn initial_log_weight<D, Rw>(
    denoiser: &D,
    reward: &Rw,
    state: &JointState,
    coupling: &TimeCoupling,
    mm: &FkcMmConfig,
) -> Result<f64>
where
    D: Denoiser + ?Sized,
    Rw: Reward + ?Sized,
{
    let beta = mm.beta.at(0.0);
    if beta == 0.0 {
        return Ok(0.0);
    }
    let coords = match mm.reward_at {
        RewardPoint::Noisy => state.structure.coords.clone(),
        RewardPoint::Denoised => {
            denoiser.denoise(&state.structure, &state.seq, coupling.t[0], coupling.r[0])?.x0_hat.coords
        }
    };
    Ok(beta * finite(reward.value(&coords, &state.seq.tokens)?)?)
}

/// Advance one particle to step `i` under the tilted drift and tilted
/// unmasking; returns its log-weight increment.
#[allow(clippy::too_many_arguments)]
pub fn fkc_mm_particle_step<D, Rw, R>(
    denoiser: &D,
    reward: &Rw,
    state: &mut JointState,
    coupling: &TimeCoupling,
    cfg: &SamplerConfig,
    mm: &FkcMmConfig,
    i: usize,
    rng: &mut R,
) -> Result<f64>
where
    D: Denoiser + ?Sized,
    Rw: Reward + ?Sized,
    R: Rng + ?Sized,
{
    let n = coupling.n_steps() as f64;
    let (b_prev, b_next) = (mm.beta.at((i - 1) as f64 / n), mm.beta.at(i as f64 / n));
    let geo = StepGeometry::plan(coupling.t[i - 1], coupling.t[i], cfg)?;
    let mut noisy = state.structure.clone();
    geo.perturb(&mut noisy.coords, rng);
    let out = guided_output(denoiser, &noisy, &state.seq, &geo, coupling, cfg, i, rng)?;
    let denoised = &out.x0_hat.coords;
    let mut inc = 0.0;
    let point = reward_point(mm.reward_at, &noisy.coords, denoised).to_vec();

    let mut extra = None;
    if b_prev != 0.0 {
        let grad = reward.gradient(&point, &state.seq.tokens)?;
        if grad.len() != noisy.coords.len() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteReward);
        }
        let t2 = geo.t_hat * geo.t_hat;
        let dot: f64 = grad.iter().zip(denoised).zip(&noisy.coords).map(|((g, d), x)| g * (d - x) / t2).sum();
        inc += geo.gain * b_prev * dot;
        extra = Some(grad.iter().map(|g| geo.gain * b_prev * g).collect::<Vec<f64>>());
    }
    geo.finish(&mut noisy.coords, denoised, extra.as_deref(), cfg.step_scale, rng);
    state.structure = noisy;

    if b_prev == 0.0 {
        sequence_update(&mut state.seq, &out.logits, coupling, i, cfg.kernel, rng);
    } else {
        let (a_old, a_new) = (coupling.unmasked_fraction(i - 1), coupling.unmasked_fraction(i));
        inc += tilted_sequence_update(&mut state.seq, &out.logits, a_old, a_new, reward, &point, b_prev, rng)?;
    }

    if b_next != b_prev {
        let after = reward_point(mm.reward_at, &state.structure.coords, denoised);
        inc += (b_next - b_prev) * finite(reward.value(after, &state.seq.tokens)?)?;
    }
    state.tau = coupling.tau[i];
    state.t = coupling.t[i];
    state.r = coupling.r[i];
    Ok(inc)
}

/// K-particle reward-tilted run. Requires the standard unmasking kernel.
#[allow(clippy::too_many_arguments)]
pub fn run_fkc_mm<D, Rw>(
    denoiser: &D,
    reward: &Rw,
    coupling: &TimeCoupling,
    cfg: &SamplerConfig,
    mm: &FkcMmConfig,
    k: usize,
    seed: u64,
    exec: Execution,
) -> Result<SteeringRun>
where
    D: Denoiser + ?Sized,
    Rw: Reward + ?Sized,
{
    cfg.validate()?;
    mm.validate()?;
    if cfg.kernel != SequenceKernel::Standard {
        return Err(Error::Config("reward tilting needs the standard unmasking kernel".into()));
    }
    drive(
        k,
        seed,
        coupling.n_steps(),
        mm.policy(),
        exec,
        |rng| {
            let state = initial_state(denoiser, coupling, cfg.coordinates, rng);
            let lw = initial_log_weight(denoiser, reward, &state, coupling, mm)?;
            Ok((state, lw))
        },
        |i, state, rng| fkc_mm_particle_step(denoiser, reward, state, coupling, cfg, mm, i, rng),
    )
}
