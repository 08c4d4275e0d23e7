//! Rewards over joint sequence and structure, with coordinate gradients.

mod cbeta;
mod contacts;

pub use cbeta::{cbeta_backprop, reconstruct_cbeta, Vec3, CB_A, CB_B, CB_C};
pub use contacts::{
    backbone_cbetas, contact_reward, reward, reward_gradient, soft_contacts, ContactRewardSpec,
    PairRule, ResidueClassMasks,
};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reward `R(x, tokens)` that can be differentiated in `x`.
pub trait Reward: Sync {
    fn value(&self, coords: &[f64], tokens: &[usize]) -> Result<f64>;
    fn gradient(&self, coords: &[f64], tokens: &[usize]) -> Result<Vec<f64>>;
}

/// Contact reward on flattened per-residue `(N, CA, C)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactReward(pub ContactRewardSpec);

impl Reward for ContactReward {
    fn value(&self, coords: &[f64], tokens: &[usize]) -> Result<f64> {
        contact_reward(coords, &ResidueClassMasks::from_tokens(tokens), &self.0)
    }

    fn gradient(&self, coords: &[f64], tokens: &[usize]) -> Result<Vec<f64>> {
        reward_gradient(coords, &ResidueClassMasks::from_tokens(tokens), &self.0)
    }
}

/// `R = bonus * 1{tokens[position] = token} + <weights, x>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenLinearReward {
    pub position: usize,
    pub token: usize,
    #[serde(default = "one")]
    pub bonus: f64,
    pub weights: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl Reward for TokenLinearReward {
    fn value(&self, coords: &[f64], tokens: &[usize]) -> Result<f64> {
        if coords.len() != self.weights.len() {
            return Err(Error::Shape("reward weights do not match coordinates".into()));
        }
        let hit = tokens.get(self.position) == Some(&self.token);
        Ok(if hit { self.bonus } else { 0.0 }
            + coords.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>())
    }

    fn gradient(&self, coords: &[f64], _tokens: &[usize]) -> Result<Vec<f64>> {
        if coords.len() != self.weights.len() {
            return Err(Error::Shape("reward weights do not match coordinates".into()));
        }
        Ok(self.weights.clone())
    }
}

/// Reward description as read from a reward spec file.
///
/// ```toml
/// kind = "contact"
/// preset = "disulfide"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardSpec {
    Contact {
        #[serde(default)]
        preset: Option<PairRule>,
        #[serde(default)]
        d0: Option<f64>,
        #[serde(default)]
        tau: Option<f64>,
        #[serde(default)]
        delta_min: Option<usize>,
        #[serde(default)]
        rule: Option<PairRule>,
    },
    TokenLinear(TokenLinearReward),
}

/// A resolved reward ready for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyReward {
    Contact(ContactReward),
    TokenLinear(TokenLinearReward),
}

impl Reward for AnyReward {
    fn value(&self, coords: &[f64], tokens: &[usize]) -> Result<f64> {
        let v = match self {
            AnyReward::Contact(r) => r.value(coords, tokens)?,
            AnyReward::TokenLinear(r) => r.value(coords, tokens)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteReward)
        }
    }

    fn gradient(&self, coords: &[f64], tokens: &[usize]) -> Result<Vec<f64>> {
        match self {
            AnyReward::Contact(r) => r.gradient(coords, tokens),
            AnyReward::TokenLinear(r) => r.gradient(coords, tokens),
        }
    }
}

impl RewardSpec {
    pub fn resolve(&self) -> Result<AnyReward> {
        match self {
            RewardSpec::Contact { preset, d0, tau, delta_min, rule } => {
                let base = match preset.or(*rule) {
                    Some(PairRule::Disulfide) => ContactRewardSpec::disulfide(),
                    Some(PairRule::CationPi) => ContactRewardSpec::cation_pi(),
                    None => {
                        return Err(Error::Config("contact reward needs a preset or a rule".into()))
                    }
                };
                let spec = ContactRewardSpec {
                    d0: d0.unwrap_or(base.d0),
                    tau: tau.unwrap_or(base.tau),
                    delta_min: delta_min.unwrap_or(base.delta_min),
                    rule: rule.unwrap_or(base.rule),
                };
                spec.validate()?;
                Ok(AnyReward::Contact(ContactReward(spec)))
            }
            RewardSpec::TokenLinear(r) => Ok(AnyReward::TokenLinear(r.clone())),
        }
    }

    pub fn load(path: &Path) -> Result<AnyReward> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Missing(format!("reward spec {}: {e}", path.display())))?;
        let spec: RewardSpec =
            toml::from_str(&text).map_err(|e| Error::Config(format!("reward spec: {e}")))?;
        spec.resolve()
    }
}
