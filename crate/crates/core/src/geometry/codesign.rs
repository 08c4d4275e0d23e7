//! Self-consistency of a design against its refolded prediction.

use super::kabsch::{distance, kabsch};
use super::AtomCloud;
use crate::error::{Error, Result};

pub const CODESIGN_THRESHOLD: f64 = 2.0;
pub const NOVELTY_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CodesignResult {
    pub pass: bool,
    pub backbone_rmsd: f64,
    /// Heavy-atom centroid distance per ligand, after protein superposition.
    pub ligand_distances: Vec<f64>,
}

pub fn codesign_passes(backbone_rmsd: f64, ligand_distances: &[f64], threshold: f64) -> bool {
    backbone_rmsd < threshold && ligand_distances.iter().all(|&d| d < threshold)
}

/// Superposes the refold's protein backbone onto the design and compares
/// ligand centroids in that frame. Ligands are paired by chain and name.
pub fn codesignable(design: &AtomCloud, refold: &AtomCloud, threshold: f64) -> Result<CodesignResult> {
    let (bd, br) = (design.backbone_positions(), refold.backbone_positions());
    if bd.len() != br.len() {
        return Err(Error::Shape(format!("backbone atom counts differ: {} vs {}", bd.len(), br.len())));
    }
    let align = kabsch(&br, &bd, None)?;
    let (ld, lr) = (design.ligands(), refold.ligands());
    if ld.len() != lr.len() {
        return Err(Error::Shape(format!("ligand counts differ: {} vs {}", ld.len(), lr.len())));
    }
    let mut ligand_distances = Vec::with_capacity(ld.len());
    let mut used = vec![false; lr.len()];
    for g in &ld {
        let k = lr
            .iter()
            .enumerate()
            .position(|(k, h)| !used[k] && h.chain == g.chain && h.residue_name == g.residue_name)
            .ok_or_else(|| Error::Shape(format!("no refolded ligand {} on chain {}", g.residue_name, g.chain)))?;
        used[k] = true;
        let moved = align.apply(refold.heavy_centroid(&lr[k])?);
        ligand_distances.push(distance(design.heavy_centroid(g)?, moved));
    }
    Ok(CodesignResult {
        pass: codesign_passes(align.rmsd, &ligand_distances, threshold),
        backbone_rmsd: align.rmsd,
        ligand_distances,
    })
}

/// A motif is novel when its best database match has matched-residue RMSD
/// above the threshold, or when nothing matched at all.
pub fn motif_is_novel(match_rmsd: Option<f64>, threshold: f64) -> bool {
    match_rmsd.is_none_or(|r| r > threshold)
}
