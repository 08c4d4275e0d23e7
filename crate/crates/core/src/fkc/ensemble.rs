//! Weighted particle ensembles and multinomial resampling.

use rand::Rng;

use crate::error::{Error, Result};
use crate::state::JointState;

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub state: JointState,
    pub log_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub particles: Vec<Particle>,
}

/// Normalized weights from log-weights, stabilized by the maximum.
pub fn normalize_log_weights(log_weights: &[f64]) -> Result<Vec<f64>> {
    if log_weights.is_empty() {
        return Err(Error::Domain("empty ensemble".into()));
    }
    if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
        return Err(Error::Domain("log-weights must be finite or -inf".into()));
    }
    let m = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Err(Error::DegenerateEnsemble);
    }
    let w: Vec<f64> = log_weights.iter().map(|lw| (lw - m).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

/// `(Σw)² / Σw²` of a weight vector.
pub fn ess_of(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    s * s / s2
}

/// `n` independent categorical draws by inverse CDF.
pub fn multinomial<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    let last = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
    (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            cdf.partition_point(|&c| c <= u).min(last)
        })
        .collect()
}

impl ParticleEnsemble {
    /// Equal-weight ensemble, log-weights `log(1/K)`.
    pub fn uniform(states: Vec<JointState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Config("an ensemble needs at least one particle".into()));
        }
        let lw = -(states.len() as f64).ln();
        Ok(Self {
            particles: states.into_iter().map(|state| Particle { state, log_weight: lw }).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn log_weights(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.log_weight).collect()
    }

    pub fn weights(&self) -> Result<Vec<f64>> {
        normalize_log_weights(&self.log_weights())
    }

    pub fn ess(&self) -> Result<f64> {
        Ok(ess_of(&self.weights()?))
    }

    /// Weighted average of `f` over the particles.
    pub fn expectation<F: Fn(&JointState) -> f64>(&self, f: F) -> Result<f64> {
        let w = self.weights()?;
        Ok(self.particles.iter().zip(&w).map(|(p, w)| w * f(&p.state)).sum())
    }

    /// Replace the ensemble by K multinomial offspring and reset weights to
    /// `log(1/K)`. Returns the ancestor of every new slot.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<usize>> {
        let w = self.weights()?;
        let k = self.len();
        let ancestors = multinomial(&w, k, rng);
        let lw = -(k as f64).ln();
        self.particles = ancestors
            .iter()
            .map(|&a| Particle { state: self.particles[a].state.clone(), log_weight: lw })
            .collect();
        Ok(ancestors)
    }
}
