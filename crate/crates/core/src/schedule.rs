//! Structure noise levels, sequence mask schedules and the unified time
//! coupling that zips them together.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSchedule {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub rho: f64,
    pub sigma_data: f64,
    pub n_steps: usize,
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self {
            sigma_max: 160.0,
            sigma_min: 0.0004,
            rho: 7.0,
            sigma_data: 16.0,
            n_steps: 200,
        }
    }
}

impl NoiseSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 1 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        if !(self.sigma_min > 0.0 && self.sigma_max >= self.sigma_min && self.sigma_max.is_finite()) {
            return Err(Error::Config(format!(
                "need sigma_max >= sigma_min > 0, got sigma_max={} sigma_min={}",
                self.sigma_max, self.sigma_min
            )));
        }
        if !(self.rho > 0.0) {
            return Err(Error::Config(format!("rho must be positive, got {}", self.rho)));
        }
        Ok(())
    }

    /// Noise level at normalized time `u` (1 = `sigma_max`, 0 = `sigma_min`).
    pub fn level_at(&self, u: f64) -> f64 {
        let inv = 1.0 / self.rho;
        let hi = self.sigma_max.powf(inv);
        let lo = self.sigma_min.powf(inv);
        (hi + (1.0 - u) * (lo - hi)).powf(self.rho)
    }

    /// Step levels `c_0 = sigma_max, ..., c_T <= sigma_min`.
    pub fn steps(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let t = self.n_steps as f64;
        let inv = 1.0 / self.rho;
        let hi = self.sigma_max.powf(inv);
        let lo = self.sigma_min.powf(inv);
        let mut c: Vec<f64> = (0..=self.n_steps)
            .map(|i| (hi + (i as f64 / t) * (lo - hi)).powf(self.rho))
            .collect();
        c[0] = self.sigma_max;
        let last = c.len() - 1;
        c[last] = c[last].min(self.sigma_min);
        Ok(c)
    }
}

/// Free-function form of [`NoiseSchedule::steps`].
pub fn noise_steps(schedule: &NoiseSchedule) -> Result<Vec<f64>> {
    schedule.steps()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MaskFamily {
    #[default]
    Linear,
    Power,
}

/// Survival fraction `alpha(r) = 1 - r^p` of unmasked tokens at mask time `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskSchedule {
    pub family: MaskFamily,
    pub exponent: f64,
}

impl Default for MaskSchedule {
    fn default() -> Self {
        Self::linear()
    }
}

impl MaskSchedule {
    pub fn linear() -> Self {
        Self {
            family: MaskFamily::Linear,
            exponent: 1.0,
        }
    }

    pub fn power(exponent: f64) -> Self {
        Self {
            family: MaskFamily::Power,
            exponent,
        }
    }

    fn p(&self) -> f64 {
        match self.family {
            MaskFamily::Linear => 1.0,
            MaskFamily::Power => self.exponent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == MaskFamily::Power && !(self.exponent > 0.0 && self.exponent.is_finite()) {
            return Err(Error::Config(format!(
                "power mask schedule needs a positive exponent, got {}",
                self.exponent
            )));
        }
        Ok(())
    }

    pub fn alpha(&self, r: f64) -> Result<f64> {
        check_unit(r)?;
        Ok(1.0 - r.powf(self.p()))
    }

    /// `1 - alpha(r)`, computed directly so the linear case is exactly `r`.
    pub fn masked_fraction(&self, r: f64) -> Result<f64> {
        check_unit(r)?;
        Ok(r.powf(self.p()))
    }

    /// `d alpha / d r`.
    pub fn alpha_prime(&self, r: f64) -> Result<f64> {
        check_unit(r)?;
        let p = self.p();
        Ok(-p * r.powf(p - 1.0))
    }
}

fn check_unit(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::Domain(format!("mask time {r} outside [0, 1]")))
    }
}

/// Free-function form of [`MaskSchedule::alpha`].
pub fn alpha(schedule: &MaskSchedule, r: f64) -> Result<f64> {
    schedule.alpha(r)
}

/// Per-step unified time `tau`, structure level `t` and mask time `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeCoupling {
    pub tau: Vec<f64>,
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub noise: NoiseSchedule,
    pub mask: MaskSchedule,
}

impl TimeCoupling {
    pub fn new(noise: NoiseSchedule, mask: MaskSchedule) -> Result<Self> {
        mask.validate()?;
        let t = noise.steps()?;
        let n = noise.n_steps as f64;
        let tau: Vec<f64> = (0..=noise.n_steps).map(|i| 1.0 - i as f64 / n).collect();
        let r = tau.clone();
        Ok(Self {
            tau,
            t,
            r,
            noise,
            mask,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.noise.n_steps
    }

    /// Fraction of positions unmasked at step `i`.
    pub fn unmasked_fraction(&self, i: usize) -> f64 {
        1.0 - self.r[i].powf(self.mask.p())
    }
}
