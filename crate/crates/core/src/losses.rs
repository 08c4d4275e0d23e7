//! Training losses as plain functions of coordinates and logits.

use serde::{Deserialize, Serialize};

use crate::denoise::{log_sum_exp, Logits};
use crate::error::{Error, Result};
use crate::geometry::{distance, superpose, Atom, AtomCloud, Point};
use crate::schedule::MaskSchedule;
use crate::state::SequenceState;

/// Atoms below this occupancy are treated as unresolved.
pub const ATOM_MIN_OCCUPANCY: f64 = 0.9;
/// Residues with any backbone atom below this occupancy are dropped from the sequence loss.
pub const RESIDUE_MIN_OCCUPANCY: f64 = 0.8;
/// Length of a histidine run that counts as an expression tag.
pub const HIS_TAG_RUN: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub alpha_dna: f64,
    pub alpha_rna: f64,
    pub alpha_ligand: f64,
    pub alpha_seq: f64,
    pub alpha_mse: f64,
    pub alpha_smooth_lddt: f64,
    pub alpha_distogram: f64,
    pub sigma_data: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha_dna: 5.0,
            alpha_rna: 5.0,
            alpha_ligand: 10.0,
            alpha_seq: 1.0,
            alpha_mse: 4.0,
            alpha_smooth_lddt: 4.0,
            alpha_distogram: 0.03,
            sigma_data: 16.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.alpha_dna,
            self.alpha_rna,
            self.alpha_ligand,
            self.alpha_seq,
            self.alpha_mse,
            self.alpha_smooth_lddt,
            self.alpha_distogram,
        ];
        if all.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::Config("loss weights must be finite and non-negative".into()));
        }
        if !(self.sigma_data.is_finite() && self.sigma_data > 0.0) {
            return Err(Error::Config("sigma_data must be positive".into()));
        }
        Ok(())
    }

    /// `w_l = 1 + α_dna·dna + α_rna·rna + α_ligand·ligand`.
    pub fn atom_weight(&self, f: AtomFlags) -> f64 {
        let on = |b: bool| if b { 1.0 } else { 0.0 };
        1.0 + self.alpha_dna * on(f.dna) + self.alpha_rna * on(f.rna) + self.alpha_ligand * on(f.ligand)
    }

    /// Noise-level factor `(t² + σ²) / (t + σ)²` applied to the MSE term.
    pub fn mse_scale(&self, t_hat: f64) -> f64 {
        let s = self.sigma_data;
        (t_hat * t_hat + s * s) / ((t_hat + s) * (t_hat + s))
    }

    pub fn structure_loss(&self, t_hat: f64, mse: f64, smooth_lddt: f64) -> f64 {
        self.mse_scale(t_hat) * mse + smooth_lddt
    }

    /// Weighted sum of the four training terms; the distogram value is supplied by the caller.
    pub fn total(&self, seq: f64, mse: f64, smooth_lddt: f64, distogram: f64) -> f64 {
        self.alpha_seq * seq + self.alpha_mse * mse + self.alpha_smooth_lddt * smooth_lddt + self.alpha_distogram * distogram
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AtomFlags {
    pub dna: bool,
    pub rna: bool,
    pub ligand: bool,
}

impl AtomFlags {
    pub const PROTEIN: Self = Self { dna: false, rna: false, ligand: false };

    pub fn of(atom: &Atom) -> Self {
        let name = atom.residue_name.trim();
        Self {
            dna: !atom.is_ligand && matches!(name, "DA" | "DC" | "DG" | "DT" | "DU" | "DI"),
            rna: !atom.is_ligand && matches!(name, "A" | "C" | "G" | "U" | "I"),
            ligand: atom.is_ligand,
        }
    }

    pub fn nucleotide(self) -> bool {
        self.dna || self.rna
    }
}

pub fn atom_flags(cloud: &AtomCloud) -> Vec<AtomFlags> {
    cloud.atoms.iter().map(AtomFlags::of).collect()
}

pub fn resolved_atoms(cloud: &AtomCloud) -> Vec<bool> {
    cloud.atoms.iter().map(|a| a.occupancy >= ATOM_MIN_OCCUPANCY).collect()
}

/// Mean weighted squared error after rigidly aligning `truth` onto `pred`
/// with the per-atom weights, divided by three. Unresolved atoms are left
/// out of both the alignment and the mean.
pub fn weighted_mse(
    pred: &[Point],
    truth: &[Point],
    flags: &[AtomFlags],
    resolved: Option<&[bool]>,
    weights: &LossWeights,
) -> Result<f64> {
    if pred.len() != truth.len() || flags.len() != pred.len() || resolved.is_some_and(|r| r.len() != pred.len()) {
        return Err(Error::Shape("pred, truth, flags and resolved mask must match in length".into()));
    }
    let keep: Vec<usize> = (0..pred.len()).filter(|&i| resolved.is_none_or(|r| r[i])).collect();
    if keep.is_empty() {
        return Err(Error::Domain("no resolved atoms".into()));
    }
    let p: Vec<Point> = keep.iter().map(|&i| pred[i]).collect();
    let t: Vec<Point> = keep.iter().map(|&i| truth[i]).collect();
    let w: Vec<f64> = keep.iter().map(|&i| weights.atom_weight(flags[i])).collect();
    let align = superpose(&t, &p, Some(&w))?;
    let sum: f64 = t.iter().zip(&p).zip(&w).map(|((t, p), w)| w * distance(align.apply(*t), *p).powi(2)).sum();
    Ok(sum / keep.len() as f64 / 3.0)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Smooth pair score for a distance error `δ`.
pub fn lddt_pair_score(delta: f64) -> f64 {
    0.25 * (sigmoid(0.5 - delta) + sigmoid(1.0 - delta) + sigmoid(2.0 - delta) + sigmoid(4.0 - delta))
}

/// One minus the mean smooth pair score over ordered pairs `l != m` whose
/// true distance lies inside the inclusion radius of atom `l` (30 Å for
/// nucleotide atoms, 15 Å otherwise).
pub fn smooth_lddt_loss(pred: &[Point], truth: &[Point], nucleotide: &[bool]) -> Result<f64> {
    let n = pred.len();
    if truth.len() != n || nucleotide.len() != n {
        return Err(Error::Shape("pred, truth and nucleotide flags must match in length".into()));
    }
    if n < 2 {
        return Err(Error::Domain("smooth lDDT needs at least two atoms".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for l in 0..n {
        let radius = if nucleotide[l] { 30.0 } else { 15.0 };
        for m in 0..n {
            if l == m {
                continue;
            }
            let d_true = distance(truth[l], truth[m]);
            if d_true < radius {
                num += lddt_pair_score((d_true - distance(pred[l], pred[m])).abs());
                den += 1.0;
            }
        }
    }
    if den == 0.0 {
        return Err(Error::Domain("no atom pair inside the inclusion radius".into()));
    }
    Ok(1.0 - num / den)
}

/// Positive per-sample ELBO weight `-α'(r) / (1 - α(r))`.
pub fn masked_elbo_weight(r: f64, schedule: &MaskSchedule) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::Domain("ELBO weight is singular at r = 0".into()));
    }
    Ok(-schedule.alpha_prime(r)? / schedule.masked_fraction(r)?)
}

/// ELBO-weighted cross-entropy over positions masked in `x_r`, skipping
/// positions the optional validity mask rules out.
pub fn masked_ce_loss(
    logits: &Logits,
    x0: &SequenceState,
    x_r: &SequenceState,
    r: f64,
    schedule: &MaskSchedule,
    valid: Option<&[bool]>,
) -> Result<f64> {
    let n = x0.len();
    if x_r.len() != n || logits.len() != n || valid.is_some_and(|v| v.len() != n) {
        return Err(Error::Shape("logits, clean and noisy sequences must match in length".into()));
    }
    let mask = x_r.vocab.mask_id();
    let mut ce = 0.0;
    let mut any = false;
    for i in 0..n {
        if x_r.tokens[i] != mask || valid.is_some_and(|v| !v[i]) {
            continue;
        }
        let row = logits.row(i);
        let target = *row
            .get(x0.tokens[i])
            .ok_or_else(|| Error::Domain(format!("clean token at position {i} is not a real token")))?;
        ce += log_sum_exp(row) - target;
        any = true;
    }
    if !any {
        return Ok(0.0);
    }
    Ok(masked_elbo_weight(r, schedule)? * ce)
}

/// Positions inside a run of at least five consecutive histidines.
pub fn his_tag_mask(residue_names: &[&str]) -> Vec<bool> {
    let mut out = vec![false; residue_names.len()];
    let mut start = 0;
    while start < residue_names.len() {
        let mut end = start;
        while end < residue_names.len() && residue_names[end] == "HIS" {
            end += 1;
        }
        if end - start >= HIS_TAG_RUN {
            out[start..end].iter_mut().for_each(|o| *o = true);
        }
        start = end.max(start + 1);
    }
    out
}

/// Which protein residues may contribute to the sequence loss: all four
/// backbone atoms present with occupancy of at least 0.8, and not part of a
/// histidine tag.
pub fn residue_validity(cloud: &AtomCloud) -> Vec<bool> {
    let residues = cloud.protein_residues();
    let names: Vec<&str> = residues.iter().map(|g| g.residue_name.as_str()).collect();
    let tag = his_tag_mask(&names);
    residues
        .iter()
        .zip(tag)
        .map(|(g, tagged)| {
            let backbone_ok = ["N", "CA", "C", "O"].iter().all(|name| {
                g.atoms
                    .iter()
                    .map(|&i| &cloud.atoms[i])
                    .any(|a| a.name == *name && a.occupancy >= RESIDUE_MIN_OCCUPANCY)
            });
            backbone_ok && !tagged
        })
        .collect()
}
