//! Sectioned run configuration.
//!
//! ```toml
//! [schedule]
//! sigma_max = 160.0
//! n_steps = 200
//! mask_schedule = { family = "linear" }
//!
//! [sampler]
//! gamma_0 = 0.8
//! gamma_min = 1.0
//! noise_scale = 0.1
//! step_scale = 1.5
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterCriteria;
use crate::fkc::{FkcMmConfig, FkcSgConfig};
use crate::losses::LossWeights;
use crate::sampler::SamplerConfig;
use crate::schedule::{MaskSchedule, NoiseSchedule, TimeCoupling};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub rho: f64,
    pub sigma_data: f64,
    pub n_steps: usize,
    pub mask_schedule: MaskSchedule,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        let n = NoiseSchedule::default();
        Self {
            sigma_max: n.sigma_max,
            sigma_min: n.sigma_min,
            rho: n.rho,
            sigma_data: n.sigma_data,
            n_steps: n.n_steps,
            mask_schedule: MaskSchedule::linear(),
        }
    }
}

impl ScheduleConfig {
    pub fn noise(&self) -> NoiseSchedule {
        NoiseSchedule {
            sigma_max: self.sigma_max,
            sigma_min: self.sigma_min,
            rho: self.rho,
            sigma_data: self.sigma_data,
            n_steps: self.n_steps,
        }
    }

    pub fn coupling(&self) -> Result<TimeCoupling> {
        TimeCoupling::new(self.noise(), self.mask_schedule)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schedule: ScheduleConfig,
    pub sampler: SamplerConfig,
    pub steer_sg: FkcSgConfig,
    pub steer_mm: FkcMmConfig,
    pub filter: FilterCriteria,
    pub losses: LossWeights,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Missing(format!("config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.noise().validate()?;
        self.schedule.mask_schedule.validate()?;
        self.sampler.validate()?;
        self.steer_sg.validate()?;
        self.steer_mm.validate()?;
        self.filter.validate()?;
        self.losses.validate()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }
}
