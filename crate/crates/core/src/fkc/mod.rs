//! Feynman-Kac steering of particle ensembles: specificity guidance
//! between two models and reward tilting over both modalities.

mod ensemble;
mod mm;
mod sg;
mod specificity;

pub use ensemble::{ess_of, multinomial, normalize_log_weights, Particle, ParticleEnsemble};
pub use mm::{
    fkc_mm_particle_step, initial_log_weight, run_fkc_mm, tilted_sequence_update, tilted_transition, BetaSchedule,
    FkcMmConfig, RewardPoint,
};
pub use sg::{fkc_sg_particle_step, run_fkc_sg, FkcSgConfig, WeightSign};
pub use specificity::{specificity_separation, Separation, SEPARATION_THRESHOLD};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::{substream, StreamRng};
use crate::state::JointState;

const PARTICLE_FAMILY: u64 = 1;
const RESAMPLE_FAMILY: u64 = 2;

/// Per-step diagnostics of a steered run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SteeringTrace {
    /// Log-weight increment of every particle.
    pub increments: Vec<Vec<f64>>,
    /// Log-weights after the increment, before any resampling.
    pub log_weights: Vec<Vec<f64>>,
    /// ESS before any resampling.
    pub ess: Vec<f64>,
    pub resampled: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringRun {
    pub ensemble: ParticleEnsemble,
    pub trace: SteeringTrace,
}

/// Resampling window: after step `i` while the completed fraction of the
/// trajectory `i / n` has not passed `tau_stop`.
pub fn resamples_at(i: usize, n_steps: usize, tau_stop: f64) -> bool {
    i as f64 / n_steps as f64 <= tau_stop + 1e-12
}

/// When an ensemble is resampled: inside the window, and only if the ESS
/// has dropped below `ess_fraction · K`. With the default fraction of 1 any
/// non-uniform weighting triggers a resample, while exactly uniform weights
/// never do, so equal-weight ensembles are not needlessly thinned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResamplePolicy {
    pub tau_stop: f64,
    pub ess_fraction: f64,
}

impl ResamplePolicy {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau_stop) {
            return Err(Error::Config("tau_stop must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.ess_fraction) {
            return Err(Error::Config("ess_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn due(&self, i: usize, n_steps: usize, ess: f64, k: usize) -> bool {
        resamples_at(i, n_steps, self.tau_stop) && ess < self.ess_fraction * k as f64
    }
}

/// Shared ensemble loop: parallel particle steps, then serial bookkeeping.
/// `init` returns a starting state and its initial log-weight offset;
/// `step` advances a particle to step `i` and returns its log-increment.
pub(crate) fn drive<I, S>(
    k: usize,
    seed: u64,
    n_steps: usize,
    policy: ResamplePolicy,
    exec: Execution,
    init: I,
    step: S,
) -> Result<SteeringRun>
where
    I: Fn(&mut StreamRng) -> Result<(JointState, f64)> + Sync,
    S: Fn(usize, &mut JointState, &mut StreamRng) -> Result<f64> + Sync,
{
    let mut rngs: Vec<StreamRng> = (0..k as u64).map(|j| substream(seed, PARTICLE_FAMILY, j)).collect();
    let mut resample_rng = substream(seed, RESAMPLE_FAMILY, 0);
    type Start = Result<(JointState, f64)>;
    let starts: Vec<Start> = {
        let mut work: Vec<(&mut StreamRng, Option<Start>)> =
            rngs.iter_mut().map(|r| (r, None)).collect();
        exec.for_each_mut(&mut work, |_, (r, out)| *out = Some(init(r)));
        work.into_iter().map(|w| w.1.expect("initialized")).collect()
    };
    let mut states = Vec::with_capacity(k);
    let mut offsets = Vec::with_capacity(k);
    for s in starts {
        let (state, offset) = s?;
        states.push(state);
        offsets.push(offset);
    }
    let mut ensemble = ParticleEnsemble::uniform(states)?;
    for (p, o) in ensemble.particles.iter_mut().zip(&offsets) {
        p.log_weight += o;
    }
    let mut trace = SteeringTrace::default();
    for i in 1..=n_steps {
        let results: Vec<Result<f64>> = {
            let mut work: Vec<(&mut Particle, &mut StreamRng, Result<f64>)> =
                ensemble.particles.iter_mut().zip(rngs.iter_mut()).map(|(p, r)| (p, r, Ok(0.0))).collect();
            exec.for_each_mut(&mut work, |_, (p, r, out)| *out = step(i, &mut p.state, r));
            work.into_iter().map(|w| w.2).collect()
        };
        let mut incs = Vec::with_capacity(k);
        for (p, r) in ensemble.particles.iter_mut().zip(results) {
            let inc = r?;
            p.log_weight += inc;
            incs.push(inc);
        }
        trace.increments.push(incs);
        trace.log_weights.push(ensemble.log_weights());
        let ess = ensemble.ess()?;
        trace.ess.push(ess);
        let resample = policy.due(i, n_steps, ess, k);
        if resample {
            ensemble.resample(&mut resample_rng)?;
        }
        trace.resampled.push(resample);
    }
    Ok(SteeringRun { ensemble, trace })
}
