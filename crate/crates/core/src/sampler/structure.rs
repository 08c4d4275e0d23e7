//! Reverse-time structure updates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SamplerConfig;
use crate::error::{Error, Result};
use crate::forward::add_noise;

/// How one structure step moves from `c_prev` to `c_next`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Churn to `t_hat`, then a scaled Euler step on `(x - D) / t_hat`.
    #[default]
    ChurnEuler,
    /// Euler-Maruyama on the variance-exploding reverse SDE.
    ReverseSde,
}

/// Levels and gains of a single step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepGeometry {
    pub c_prev: f64,
    pub c_next: f64,
    /// Level at which the denoiser is evaluated.
    pub t_hat: f64,
    /// Std of the churn noise added before denoising.
    pub churn_std: f64,
    /// Integral of `g^2 / 2` over the step, the factor that multiplies
    /// score terms in drifts and weights.
    pub gain: f64,
    pub integrator: Integrator,
}

impl StepGeometry {
    pub fn plan(c_prev: f64, c_next: f64, cfg: &SamplerConfig) -> Result<Self> {
        if !(c_next >= 0.0) || c_next > c_prev {
            return Err(Error::DegenerateStep(format!(
                "need c_prev >= c_next >= 0, got {c_prev} -> {c_next}"
            )));
        }
        let geo = match cfg.integrator {
            Integrator::ChurnEuler => {
                let gamma = if c_next > cfg.gamma_min { cfg.gamma_0 } else { 0.0 };
                let t_hat = c_prev * (gamma + 1.0);
                Self {
                    c_prev,
                    c_next,
                    t_hat,
                    churn_std: cfg.noise_scale * (t_hat * t_hat - c_prev * c_prev).max(0.0).sqrt(),
                    gain: t_hat * (t_hat - c_next),
                    integrator: cfg.integrator,
                }
            }
            Integrator::ReverseSde => Self {
                c_prev,
                c_next,
                t_hat: c_prev,
                churn_std: 0.0,
                gain: 0.5 * (c_prev * c_prev - c_next * c_next),
                integrator: cfg.integrator,
            },
        };
        if !(geo.t_hat > 0.0) {
            return Err(Error::DegenerateStep(format!("t_hat = {}", geo.t_hat)));
        }
        Ok(geo)
    }

    /// Add churn noise in place.
    pub fn perturb<R: Rng + ?Sized>(&self, coords: &mut [f64], rng: &mut R) {
        add_noise(coords, self.churn_std, rng);
    }

    /// Move `noisy` towards `denoised`, writing the next state into `noisy`.
    /// `extra` is an additional drift already scaled to the step.
    pub fn finish<R: Rng + ?Sized>(
        &self,
        noisy: &mut [f64],
        denoised: &[f64],
        extra: Option<&[f64]>,
        step_scale: f64,
        rng: &mut R,
    ) {
        match self.integrator {
            Integrator::ChurnEuler => {
                let dt = self.c_next - self.t_hat;
                for (x, d) in noisy.iter_mut().zip(denoised) {
                    let delta = (*x - d) / self.t_hat;
                    *x += step_scale * dt * delta;
                }
            }
            Integrator::ReverseSde => {
                let c2 = self.c_prev * self.c_prev;
                let k = 2.0 * self.gain / c2;
                for (x, d) in noisy.iter_mut().zip(denoised) {
                    *x += k * (d - *x);
                }
            }
        }
        if let Some(extra) = extra {
            for (x, e) in noisy.iter_mut().zip(extra) {
                *x += e;
            }
        }
        if self.integrator == Integrator::ReverseSde {
            add_noise(noisy, (2.0 * self.gain).sqrt(), rng);
        }
    }
}

/// One structure step: churn, denoise at `t_hat`, integrate to `c_next`.
pub fn structure_step<R, F>(
    coords: &[f64],
    c_prev: f64,
    c_next: f64,
    cfg: &SamplerConfig,
    rng: &mut R,
    denoise: F,
) -> Result<Vec<f64>>
where
    R: Rng + ?Sized,
    F: FnOnce(&[f64], f64) -> Result<Vec<f64>>,
{
    let geo = StepGeometry::plan(c_prev, c_next, cfg)?;
    let mut x = coords.to_vec();
    geo.perturb(&mut x, rng);
    let d = denoise(&x, geo.t_hat)?;
    geo.finish(&mut x, &d, None, cfg.step_scale, rng);
    Ok(x)
}
