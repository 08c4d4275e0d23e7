//! Reverse-time joint sampling of sequence and structure.

mod augment;
mod guidance;
mod joint;
mod sequence;
mod structure;

pub use augment::{centre_random_augmentation, random_rotation};
pub use guidance::{noisy_guidance, GuidanceConfig, GuidanceContext};
pub(crate) use joint::guided_output;
pub use joint::{initial_state, joint_step, sample_chains, sample_joint, sequence_update, Trajectory};
pub use sequence::{
    path_planning_step, standard_step, temper_logits, unmask_count, SequenceKernel,
    TemperatureConfig,
};
pub use structure::{structure_step, Integrator, StepGeometry};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::CoordMode;

/// Whether tempering happens on the guided logits or on each pass before
/// blending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GuidanceOrder {
    #[default]
    GuideThenTemper,
    TemperThenGuide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub gamma_0: f64,
    pub gamma_min: f64,
    pub noise_scale: f64,
    pub step_scale: f64,
    pub integrator: Integrator,
    pub kernel: SequenceKernel,
    pub do_noisy_guidance: bool,
    pub augmentation: bool,
    pub coordinates: CoordMode,
    pub guidance_order: GuidanceOrder,
    pub temperature: TemperatureConfig,
    pub guidance: GuidanceConfig,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            gamma_0: 0.8,
            gamma_min: 1.0,
            noise_scale: 0.1,
            step_scale: 1.5,
            integrator: Integrator::ChurnEuler,
            kernel: SequenceKernel::PathPlanning,
            do_noisy_guidance: false,
            augmentation: true,
            coordinates: CoordMode::Toy,
            guidance_order: GuidanceOrder::GuideThenTemper,
            temperature: TemperatureConfig::default(),
            guidance: GuidanceConfig::default(),
        }
    }
}

impl SamplerConfig {
    /// Settings under which samples follow an exact oracle: no churn, unit
    /// step scale, no tempering, no guidance.
    pub fn exact() -> Self {
        Self {
            gamma_0: 0.0,
            step_scale: 1.0,
            temperature: TemperatureConfig::off(),
            augmentation: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_scale >= 0.0) {
            return Err(Error::Config("noise_scale must be non-negative".into()));
        }
        if !(self.step_scale > 0.0) {
            return Err(Error::Config("step_scale must be positive".into()));
        }
        if !(self.gamma_0 >= 0.0) {
            return Err(Error::Config("gamma_0 must be non-negative".into()));
        }
        let t = &self.temperature;
        if t.global && !(t.global_high > 0.0 && t.global_low > 0.0) {
            return Err(Error::Config("temperatures must be positive".into()));
        }
        if t.entropy_adaptive && !(t.entropy_beta >= 0.0) {
            return Err(Error::Config("entropy beta must be non-negative".into()));
        }
        if self.do_noisy_guidance {
            self.guidance.validate()?;
        }
        Ok(())
    }
}
