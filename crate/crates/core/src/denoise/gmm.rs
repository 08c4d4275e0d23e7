use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{log_sum_exp, sample_categorical, Denoiser, DenoiserOutput, Logits};
use crate::error::{Error, Result};
use crate::state::{ContinuousState, SequenceState, Vocabulary};

/// Isotropic Gaussian mixture `sum_k pi_k N(mu_k, sigma0^2 I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixtureModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub sigma0: f64,
}

impl GaussianMixtureModel {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, sigma0: f64) -> Result<Self> {
        let m = Self {
            weights,
            means,
            sigma0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() || self.weights.len() != self.means.len() {
            return Err(Error::Config("mixture needs one mean per weight".into()));
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Config("mixture weights must be positive".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("mixture weights sum to {total}, expected 1")));
        }
        let d = self.means[0].len();
        if d == 0 || self.means.iter().any(|m| m.len() != d) {
            return Err(Error::Config("mixture means must share a positive dimension".into()));
        }
        if !(self.sigma0 > 0.0) {
            return Err(Error::Config("sigma0 must be positive".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// Posterior component probabilities given `x_t` at noise level `t`.
    pub fn responsibilities(&self, x: &[f64], t: f64) -> Vec<f64> {
        let log_post = self.log_joint_components(x, t);
        let z = log_sum_exp(&log_post);
        log_post.iter().map(|l| (l - z).exp()).collect()
    }

    /// `log pi_k + log N(x; mu_k, (sigma0^2 + t^2) I)` for every component.
    pub fn log_joint_components(&self, x: &[f64], t: f64) -> Vec<f64> {
        let var = self.sigma0 * self.sigma0 + t * t;
        let d = x.len() as f64;
        let norm = -0.5 * d * (2.0 * std::f64::consts::PI * var).ln();
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(w, mu)| {
                let sq: f64 = x.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum();
                w.ln() + norm - 0.5 * sq / var
            })
            .collect()
    }

    /// Log density of the noised marginal at level `t`.
    pub fn log_density(&self, x: &[f64], t: f64) -> f64 {
        log_sum_exp(&self.log_joint_components(x, t))
    }

    /// Posterior mean of the clean point, `E[x0 | x_t]`.
    pub fn posterior_mean(&self, x: &[f64], t: f64) -> Vec<f64> {
        if t == 0.0 {
            return x.to_vec();
        }
        let s2 = self.sigma0 * self.sigma0;
        let t2 = t * t;
        let resp = self.responsibilities(x, t);
        let mut out = vec![0.0; x.len()];
        for (w, mu) in resp.iter().zip(&self.means) {
            for ((o, xi), m) in out.iter_mut().zip(x).zip(mu) {
                *o += w * (s2 * xi + t2 * m) / (s2 + t2);
            }
        }
        out
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (w, mu) in self.weights.iter().zip(&self.means) {
            for (o, m) in out.iter_mut().zip(mu) {
                *o += w * m;
            }
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let k = sample_categorical(&self.weights, rng);
        self.means[k]
            .iter()
            .map(|m| {
                let e: f64 = rng.sample(StandardNormal);
                m + self.sigma0 * e
            })
            .collect()
    }
}

/// Free-function form of [`GaussianMixtureModel::posterior_mean`].
pub fn gm_denoise(model: &GaussianMixtureModel, x_t: &ContinuousState, t: f64) -> ContinuousState {
    ContinuousState {
        coords: model.posterior_mean(&x_t.coords, t),
        mode: x_t.mode,
    }
}

impl Denoiser for GaussianMixtureModel {
    fn vocab(&self) -> Vocabulary {
        Vocabulary::new(2).expect("static vocabulary")
    }

    fn seq_len(&self) -> usize {
        0
    }

    fn dim(&self) -> usize {
        GaussianMixtureModel::dim(self)
    }

    fn denoise(
        &self,
        coords: &ContinuousState,
        seq: &SequenceState,
        t: f64,
        _r: f64,
    ) -> Result<DenoiserOutput> {
        self.check_shapes(coords, seq)?;
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("noise level must be non-negative, got {t}")));
        }
        Ok(DenoiserOutput {
            x0_hat: gm_denoise(self, coords, t),
            logits: Logits::new(0, 2),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_1d() -> GaussianMixtureModel {
        GaussianMixtureModel::new(vec![0.3, 0.7], vec![vec![-2.0], vec![1.5]], 0.5).unwrap()
    }

    #[test]
    fn single_component_is_conjugate() {
        let m = GaussianMixtureModel::new(vec![1.0], vec![vec![3.0, -1.0]], 0.8).unwrap();
        let x = [0.4, 2.0];
        let t = 1.7;
        let out = m.posterior_mean(&x, t);
        let s2 = 0.64;
        let t2 = t * t;
        assert!((out[0] - (s2 * 0.4 + t2 * 3.0) / (s2 + t2)).abs() < 1e-14);
        assert!((out[1] - (s2 * 2.0 - t2) / (s2 + t2)).abs() < 1e-14);
    }

    #[test]
    fn symmetric_pair_at_origin() {
        let m = GaussianMixtureModel::new(vec![0.5, 0.5], vec![vec![2.0], vec![-2.0]], 0.5).unwrap();
        assert!(m.posterior_mean(&[0.0], 3.0)[0].abs() < 1e-15);
        assert_eq!(m.posterior_mean(&[0.3], 0.0), vec![0.3]);
        assert!((m.posterior_mean(&[0.3], 1e-8)[0] - 0.3).abs() < 1e-12);
    }

    // E[x0 | x_t] by trapezoid quadrature of x0 * p(x0) N(x_t; x0, t^2).
    fn quadrature_1d(m: &GaussianMixtureModel, x: f64, t: f64) -> f64 {
        let (lo, hi, n) = (-8.0, 8.0, 400_000);
        let h = (hi - lo) / n as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..=n {
            let x0 = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let p = m.log_density(&[x0], 0.0).exp() * (-(x - x0).powi(2) / (2.0 * t * t)).exp();
            num += w * x0 * p;
            den += w * p;
        }
        num / den
    }

    #[test]
    fn matches_quadrature_1d() {
        let m = two_1d();
        for &t in &[0.3, 1.0, 4.0] {
            for &x in &[-3.0, -0.5, 0.0, 1.0, 2.5] {
                let a = m.posterior_mean(&[x], t)[0];
                let q = quadrature_1d(&m, x, t);
                assert!((a - q).abs() <= 1e-6 * q.abs().max(1.0), "x={x} t={t}: {a} vs {q}");
            }
        }
    }

    #[test]
    fn matches_quadrature_2d() {
        let m = GaussianMixtureModel::new(
            vec![0.4, 0.6],
            vec![vec![1.0, -1.0], vec![-1.5, 0.5]],
            0.6,
        )
        .unwrap();
        let (lo, hi, n) = (-6.0, 6.0, 1200);
        let h = (hi - lo) / n as f64;
        for &(x, t) in &[([0.2, 0.1], 0.7), ([-1.0, 1.0], 1.5)] {
            let mut num = [0.0; 2];
            let mut den = 0.0;
            for i in 0..=n {
                for j in 0..=n {
                    let p0 = [lo + i as f64 * h, lo + j as f64 * h];
                    let wi = if i == 0 || i == n { 0.5 } else { 1.0 };
                    let wj = if j == 0 || j == n { 0.5 } else { 1.0 };
                    let d2 = (x[0] - p0[0]).powi(2) + (x[1] - p0[1]).powi(2);
                    let p = wi * wj * m.log_density(&p0, 0.0).exp() * (-d2 / (2.0 * t * t)).exp();
                    num[0] += p * p0[0];
                    num[1] += p * p0[1];
                    den += p;
                }
            }
            let a = m.posterior_mean(&x, t);
            for k in 0..2 {
                let q = num[k] / den;
                assert!((a[k] - q).abs() <= 1e-6 * q.abs().max(1.0));
            }
        }
    }

    #[test]
    fn rejects_bad_mixtures() {
        assert!(GaussianMixtureModel::new(vec![0.5, 0.4], vec![vec![0.0], vec![1.0]], 1.0).is_err());
        assert!(GaussianMixtureModel::new(vec![1.0], vec![vec![0.0]], 0.0).is_err());
    }
}
