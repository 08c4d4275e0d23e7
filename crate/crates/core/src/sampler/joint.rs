use rand::Rng;

use super::{
    centre_random_augmentation, noisy_guidance, path_planning_step, standard_step, temper_logits,
    GuidanceContext, GuidanceOrder, SamplerConfig, SequenceKernel, StepGeometry,
};
use crate::denoise::{Denoiser, DenoiserOutput, Logits};
use crate::error::Result;
use crate::exec::Execution;
use crate::forward::add_noise;
use crate::rng::{stream, StreamRng};
use crate::schedule::TimeCoupling;
use crate::state::{ContinuousState, CoordMode, JointState, SequenceState};

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub final_state: JointState,
    /// Masked-position count after every step.
    pub masked_trace: Vec<usize>,
    /// Full states after every step, when requested.
    pub snapshots: Vec<JointState>,
}

/// Fully masked sequence and `c_0`-scaled Gaussian coordinates.
pub fn initial_state<D, R>(
    denoiser: &D,
    coupling: &TimeCoupling,
    mode: CoordMode,
    rng: &mut R,
) -> JointState
where
    D: Denoiser + ?Sized,
    R: Rng + ?Sized,
{
    let mut coords = vec![0.0; denoiser.dim()];
    add_noise(&mut coords, coupling.t[0], rng);
    JointState {
        seq: SequenceState::all_masked(denoiser.seq_len(), denoiser.vocab()),
        structure: ContinuousState { coords, mode },
        tau: coupling.tau[0],
        t: coupling.t[0],
        r: coupling.r[0],
    }
}

/// Move the sequence from step `i - 1` to step `i` with the given logits.
pub fn sequence_update<R: Rng + ?Sized>(
    seq: &mut SequenceState,
    logits: &Logits,
    coupling: &TimeCoupling,
    i: usize,
    kernel: SequenceKernel,
    rng: &mut R,
) {
    let a_new = coupling.unmasked_fraction(i);
    match kernel {
        SequenceKernel::Standard => {
            let a_old = coupling.unmasked_fraction(i - 1);
            standard_step(seq, logits, a_old, a_new, rng);
        }
        SequenceKernel::PathPlanning => path_planning_step(seq, logits, a_new, rng),
    }
}

/// Denoiser pass at the churned point, with guidance and tempering applied.
#[allow(clippy::too_many_arguments)]
pub(crate) fn guided_output<D, R>(
    denoiser: &D,
    noisy: &ContinuousState,
    seq: &SequenceState,
    geo: &StepGeometry,
    coupling: &TimeCoupling,
    cfg: &SamplerConfig,
    i: usize,
    rng: &mut R,
) -> Result<DenoiserOutput>
where
    D: Denoiser + ?Sized,
    R: Rng + ?Sized,
{
    let r = coupling.r[i];
    let cond = denoiser.denoise(noisy, seq, geo.t_hat, r)?;
    let temper = |l: &Logits| temper_logits(l, r, &cfg.temperature);
    if !cfg.do_noisy_guidance {
        return Ok(DenoiserOutput {
            logits: temper(&cond.logits),
            x0_hat: cond.x0_hat,
        });
    }
    let ctx = GuidanceContext {
        tau: coupling.tau[i],
        t_hat: geo.t_hat,
        r,
        noise: &coupling.noise,
        mask: &coupling.mask,
        strict: false,
    };
    match cfg.guidance_order {
        GuidanceOrder::GuideThenTemper => {
            let mut out = noisy_guidance(denoiser, noisy, seq, cond, &cfg.guidance, ctx, Logits::clone, rng)?;
            out.logits = temper(&out.logits);
            Ok(out)
        }
        GuidanceOrder::TemperThenGuide => {
            noisy_guidance(denoiser, noisy, seq, cond, &cfg.guidance, ctx, temper, rng)
        }
    }
}

/// Advance one chain from step `i - 1` to step `i`.
pub fn joint_step<D, R>(
    denoiser: &D,
    state: &mut JointState,
    coupling: &TimeCoupling,
    cfg: &SamplerConfig,
    i: usize,
    rng: &mut R,
) -> Result<()>
where
    D: Denoiser + ?Sized,
    R: Rng + ?Sized,
{
    if cfg.augmentation && state.structure.mode == CoordMode::Cartesian {
        centre_random_augmentation(&mut state.structure, rng)?;
    }
    let geo = StepGeometry::plan(coupling.t[i - 1], coupling.t[i], cfg)?;
    let mut noisy = state.structure.clone();
    geo.perturb(&mut noisy.coords, rng);
    let out = guided_output(denoiser, &noisy, &state.seq, &geo, coupling, cfg, i, rng)?;
    geo.finish(&mut noisy.coords, &out.x0_hat.coords, None, cfg.step_scale, rng);
    state.structure = noisy;
    sequence_update(&mut state.seq, &out.logits, coupling, i, cfg.kernel, rng);
    state.tau = coupling.tau[i];
    state.t = coupling.t[i];
    state.r = coupling.r[i];
    Ok(())
}

/// Run the full reverse loop for one chain.
pub fn sample_joint<D, R>(
    denoiser: &D,
    coupling: &TimeCoupling,
    cfg: &SamplerConfig,
    keep_snapshots: bool,
    rng: &mut R,
) -> Result<Trajectory>
where
    D: Denoiser + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let mut state = initial_state(denoiser, coupling, cfg.coordinates, rng);
    let mut masked_trace = Vec::with_capacity(coupling.n_steps());
    let mut snapshots = Vec::new();
    for i in 1..=coupling.n_steps() {
        joint_step(denoiser, &mut state, coupling, cfg, i, rng)?;
        masked_trace.push(state.seq.masked_count());
        if keep_snapshots {
            snapshots.push(state.clone());
        }
    }
    Ok(Trajectory {
        final_state: state,
        masked_trace,
        snapshots,
    })
}

/// Independent chains, chain `k` drawing from stream `k` of `seed`.
pub fn sample_chains<D>(
    denoiser: &D,
    coupling: &TimeCoupling,
    cfg: &SamplerConfig,
    n_chains: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Trajectory>>
where
    D: Denoiser + ?Sized,
{
    exec.map(n_chains, |k| {
        let mut rng: StreamRng = stream(seed, k as u64);
        sample_joint(denoiser, coupling, cfg, false, &mut rng)
    })
    .into_iter()
    .collect()
}
