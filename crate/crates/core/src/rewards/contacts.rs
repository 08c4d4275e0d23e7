//! Soft residue-pair contact rewards on virtual C-beta positions.

use serde::{Deserialize, Serialize};

use super::cbeta::{cbeta_backprop, norm, reconstruct_cbeta, sub, Vec3};
use crate::error::{Error, Result};
use crate::residue::AminoAcid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairRule {
    /// Cys with Cys.
    Disulfide,
    /// Arg/Lys with Phe/Tyr/Trp/His, either order.
    CationPi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactRewardSpec {
    /// Contact midpoint distance (Å).
    pub d0: f64,
    /// Sigmoid sharpness (Å).
    pub tau: f64,
    pub delta_min: usize,
    pub rule: PairRule,
}

impl ContactRewardSpec {
    pub fn disulfide() -> Self {
        Self {
            d0: 4.5,
            tau: 0.3,
            delta_min: 3,
            rule: PairRule::Disulfide,
        }
    }

    pub fn cation_pi() -> Self {
        Self {
            d0: 8.0,
            tau: 0.5,
            delta_min: 4,
            rule: PairRule::CationPi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > 0.0 && self.tau > 0.0) {
            return Err(Error::Config("contact d0 and tau must be positive".into()));
        }
        Ok(())
    }
}

/// Per-residue class flags. Masked or unknown tokens carry no class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueClassMasks {
    pub is_cys: Vec<bool>,
    pub is_cation: Vec<bool>,
    pub is_aromatic: Vec<bool>,
}

impl ResidueClassMasks {
    pub fn from_tokens(tokens: &[usize]) -> Self {
        let aa: Vec<Option<AminoAcid>> = tokens.iter().map(|&t| AminoAcid::from_token(t)).collect();
        Self {
            is_cys: aa.iter().map(|a| *a == Some(AminoAcid::Cys)).collect(),
            is_cation: aa.iter().map(|a| a.is_some_and(AminoAcid::is_cation)).collect(),
            is_aromatic: aa.iter().map(|a| a.is_some_and(AminoAcid::is_aromatic)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.is_cys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_cys.is_empty()
    }

    pub fn pair(&self, rule: PairRule, i: usize, j: usize) -> bool {
        match rule {
            PairRule::Disulfide => self.is_cys[i] && self.is_cys[j],
            PairRule::CationPi => {
                (self.is_cation[i] && self.is_aromatic[j]) || (self.is_aromatic[i] && self.is_cation[j])
            }
        }
    }

    fn eligible(&self, spec: &ContactRewardSpec, i: usize, j: usize) -> bool {
        i < j && j - i >= spec.delta_min && self.pair(spec.rule, i, j)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Row-major `L x L` matrix of soft contacts (upper triangle only).
pub fn soft_contacts(cb: &[Vec3], masks: &ResidueClassMasks, spec: &ContactRewardSpec) -> Result<Vec<f64>> {
    let l = cb.len();
    if masks.len() != l {
        return Err(Error::Shape(format!("{l} positions but {} residue masks", masks.len())));
    }
    let mut c = vec![0.0; l * l];
    for i in 0..l {
        for j in i + 1..l {
            if masks.eligible(spec, i, j) {
                c[i * l + j] = sigmoid((spec.d0 - norm(sub(cb[i], cb[j]))) / spec.tau);
            }
        }
    }
    Ok(c)
}

/// `sum_i log(1 + sum_j c_ij)`.
pub fn reward(contacts: &[f64], len: usize) -> f64 {
    (0..len)
        .map(|i| contacts[i * len..(i + 1) * len].iter().sum::<f64>().ln_1p())
        .sum()
}

fn residue(backbone: &[f64], i: usize) -> [Vec3; 3] {
    let p = &backbone[9 * i..9 * i + 9];
    [[p[0], p[1], p[2]], [p[3], p[4], p[5]], [p[6], p[7], p[8]]]
}

fn check_backbone(backbone: &[f64], masks: &ResidueClassMasks) -> Result<usize> {
    if backbone.len() != 9 * masks.len() {
        return Err(Error::Shape(format!(
            "backbone needs 9 coordinates per residue, got {} for {} residues",
            backbone.len(),
            masks.len()
        )));
    }
    Ok(masks.len())
}

pub fn backbone_cbetas(backbone: &[f64]) -> Result<Vec<Vec3>> {
    (0..backbone.len() / 9)
        .map(|i| {
            let [n, ca, c] = residue(backbone, i);
            reconstruct_cbeta(n, ca, c)
        })
        .collect()
}

/// Reward from flattened per-residue `(N, CA, C)` coordinates.
pub fn contact_reward(backbone: &[f64], masks: &ResidueClassMasks, spec: &ContactRewardSpec) -> Result<f64> {
    let l = check_backbone(backbone, masks)?;
    let cb = backbone_cbetas(backbone)?;
    Ok(reward(&soft_contacts(&cb, masks, spec)?, l))
}

/// Exact gradient of [`contact_reward`] with respect to every backbone
/// coordinate.
pub fn reward_gradient(backbone: &[f64], masks: &ResidueClassMasks, spec: &ContactRewardSpec) -> Result<Vec<f64>> {
    let l = check_backbone(backbone, masks)?;
    let cb = backbone_cbetas(backbone)?;
    let contacts = soft_contacts(&cb, masks, spec)?;
    let mut g_cb = vec![[0.0; 3]; l];
    for i in 0..l {
        let s: f64 = contacts[i * l..(i + 1) * l].iter().sum();
        let outer = 1.0 / (1.0 + s);
        for j in i + 1..l {
            if !masks.eligible(spec, i, j) {
                continue;
            }
            let diff = sub(cb[i], cb[j]);
            let d = norm(diff);
            if d == 0.0 {
                return Err(Error::SingularGradient(format!("C-beta {i} and {j} coincide")));
            }
            let c = contacts[i * l + j];
            // dc/dd = -c (1 - c) / tau
            let k = -outer * c * (1.0 - c) / spec.tau / d;
            for a in 0..3 {
                g_cb[i][a] += k * diff[a];
                g_cb[j][a] -= k * diff[a];
            }
        }
    }
    let mut grad = vec![0.0; 9 * l];
    for i in 0..l {
        let [n, ca, c] = residue(backbone, i);
        let parts = cbeta_backprop(n, ca, c, g_cb[i]);
        for (a, part) in parts.iter().enumerate() {
            grad[9 * i + 3 * a..9 * i + 3 * a + 3].copy_from_slice(part);
        }
    }
    Ok(grad)
}
