//! Specificity guidance: sample `q_on^(1-β) q_off^β` with two denoisers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{drive, ResamplePolicy, SteeringRun};
use crate::denoise::{Denoiser, Logits, NEG_INF_LOGIT};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{kabsch, Point};
use crate::sampler::{centre_random_augmentation, guided_output, initial_state, sequence_update, SamplerConfig, StepGeometry};
use crate::schedule::TimeCoupling;
use crate::state::{CoordMode, JointState};

/// Sign of the log-weight increment. `Corollary` adds `β(β−1)·G·‖Δs‖²`
/// over a step of positive length; `AlgorithmBox` negates it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightSign {
    #[default]
    Corollary,
    AlgorithmBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FkcSgConfig {
    pub beta: f64,
    pub tau_stop: f64,
    pub ess_fraction: f64,
    pub guide_sequence: bool,
    pub sign: WeightSign,
    /// Superpose the off-model prediction onto the on-model one
    /// (Cartesian coordinates only).
    pub align_frames: bool,
    /// Atom indices stepped by the on-model alone and left out of alignment.
    pub ligand_atoms: Vec<usize>,
}

impl Default for FkcSgConfig {
    fn default() -> Self {
        Self {
            beta: -0.5,
            tau_stop: 0.6,
            ess_fraction: 1.0,
            guide_sequence: true,
            sign: WeightSign::Corollary,
            align_frames: true,
            ligand_atoms: Vec::new(),
        }
    }
}

impl FkcSgConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() {
            return Err(Error::Config("beta must be finite".into()));
        }
        self.policy().validate()
    }

    pub fn policy(&self) -> ResamplePolicy {
        ResamplePolicy { tau_stop: self.tau_stop, ess_fraction: self.ess_fraction }
    }
}

fn check_pair<A, B>(on: &A, off: &B) -> Result<()>
where
    A: Denoiser + ?Sized,
    B: Denoiser + ?Sized,
{
    if on.dim() != off.dim() || on.seq_len() != off.seq_len() || on.vocab() != off.vocab() {
        return Err(Error::Shape("on- and off-target models disagree on state shape".into()));
    }
    Ok(())
}

fn protein_mask(dim: usize, mode: CoordMode, ligand_atoms: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![true; dim];
    if ligand_atoms.is_empty() {
        return Ok(mask);
    }
    if mode != CoordMode::Cartesian {
        return Err(Error::Config("ligand atoms need Cartesian coordinates".into()));
    }
    for &a in ligand_atoms {
        if 3 * a + 3 > dim {
            return Err(Error::Shape(format!("ligand atom {a} outside the structure")));
        }
        mask[3 * a..3 * a + 3].iter_mut().for_each(|m| *m = false);
    }
    Ok(mask)
}

fn points(coords: &[f64], protein: &[bool]) -> Vec<Point> {
    coords
        .chunks_exact(3)
        .zip(protein.chunks_exact(3))
        .filter(|(_, m)| m[0])
        .map(|(c, _)| [c[0], c[1], c[2]])
        .collect()
}

/// Superpose the off-model protein coordinates onto the on-model ones in place.
fn align_off(on: &[f64], off: &mut [f64], protein: &[bool]) -> Result<()> {
    let align = kabsch(&points(off, protein), &points(on, protein), None)?;
    for (c, m) in off.chunks_exact_mut(3).zip(protein.chunks_exact(3)) {
        if m[0] {
            c.copy_from_slice(&align.apply([c[0], c[1], c[2]]));
        }
    }
    Ok(())
}

fn combine_logits(on: &Logits, off: &Logits, beta: f64) -> Logits {
    let mut out = on.clone();
    for (o, f) in out.as_mut_slice().iter_mut().zip(off.as_slice()) {
        if *o > NEG_INF_LOGIT {
            *o += beta * (f - *o);
        }
    }
    out
}

/// Advance one particle to step `i`; returns its log-weight increment.
#[allow(clippy::too_many_arguments)]
pub fn fkc_sg_particle_step<A, B, R>(
    on: &A,
    off: &B,
    state: &mut JointState,
    coupling: &TimeCoupling,
    cfg: &SamplerConfig,
    sg: &FkcSgConfig,
    i: usize,
    rng: &mut R,
) -> Result<f64>
where
    A: Denoiser + ?Sized,
    B: Denoiser + ?Sized,
    R: Rng + ?Sized,
{
    if cfg.augmentation && state.structure.mode == CoordMode::Cartesian {
        centre_random_augmentation(&mut state.structure, rng)?;
    }
    let protein = protein_mask(state.structure.dim(), state.structure.mode, &sg.ligand_atoms)?;
    let geo = StepGeometry::plan(coupling.t[i - 1], coupling.t[i], cfg)?;
    let mut noisy = state.structure.clone();
    geo.perturb(&mut noisy.coords, rng);
    let out_on = guided_output(on, &noisy, &state.seq, &geo, coupling, cfg, i, rng)?;
    let mut out_off = guided_output(off, &noisy, &state.seq, &geo, coupling, cfg, i, rng)?;
    let (d_on, d_off) = (&out_on.x0_hat.coords, &mut out_off.x0_hat.coords);
    if sg.align_frames && noisy.mode == CoordMode::Cartesian && d_on != d_off {
        align_off(d_on, d_off, &protein)?;
    }
    let mut combined = d_on.clone();
    let mut gap = 0.0;
    for ((c, off), m) in combined.iter_mut().zip(d_off.iter()).zip(&protein) {
        if *m {
            let diff = off - *c;
            gap += diff * diff;
            *c += sg.beta * diff;
        }
    }
    // ‖s_on − s_off‖² with s = (D − x) / t̂².
    let t2 = geo.t_hat * geo.t_hat;
    let base = sg.beta * (sg.beta - 1.0) * geo.gain * gap / (t2 * t2);
    let inc = match sg.sign {
        WeightSign::Corollary => base,
        WeightSign::AlgorithmBox => -base,
    };
    geo.finish(&mut noisy.coords, &combined, None, cfg.step_scale, rng);
    state.structure = noisy;
    let logits = if sg.guide_sequence {
        combine_logits(&out_on.logits, &out_off.logits, sg.beta)
    } else {
        out_on.logits
    };
    sequence_update(&mut state.seq, &logits, coupling, i, cfg.kernel, rng);
    state.tau = coupling.tau[i];
    state.t = coupling.t[i];
    state.r = coupling.r[i];
    Ok(inc)
}

/// K-particle specificity-guided run. Particle `k` draws from its own stream
/// of `seed`; resampling draws from a separate stream.
#[allow(clippy::too_many_arguments)]
pub fn run_fkc_sg<A, B>(
    on: &A,
    off: &B,
    coupling: &TimeCoupling,
    cfg: &SamplerConfig,
    sg: &FkcSgConfig,
    k: usize,
    seed: u64,
    exec: Execution,
) -> Result<SteeringRun>
where
    A: Denoiser + ?Sized,
    B: Denoiser + ?Sized,
{
    cfg.validate()?;
    sg.validate()?;
    check_pair(on, off)?;
    drive(
        k,
        seed,
        coupling.n_steps(),
        sg.policy(),
        exec,
        |rng| Ok((initial_state(on, coupling, cfg.coordinates, rng), 0.0)),
        |i, state, rng| fkc_sg_particle_step(on, off, state, coupling, cfg, sg, i, rng),
    )
}
