//! Separation of on- and off-target ligand placements across refolds.

use crate::error::{Error, Result};
use crate::geometry::{distance, kabsch, AtomCloud, Point};

pub const SEPARATION_THRESHOLD: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub min_distance: f64,
    pub separated: bool,
    /// Ligand-centroid distance for every (on, off) fold pair, row-major.
    pub distances: Vec<f64>,
}

fn sole_ligand(cloud: &AtomCloud) -> Result<Point> {
    let ligands = cloud.ligands();
    match ligands.as_slice() {
        [one] => cloud.heavy_centroid(one),
        [] => Err(Error::Missing("ligand in fold".into())),
        _ => Err(Error::Shape(format!("expected one ligand per fold, found {}", ligands.len()))),
    }
}

/// Superposes every off-target fold onto every on-target fold by protein
/// backbone and measures how far the ligand centroids land apart. A
/// sequence is specific when even the closest pair exceeds `threshold`.
pub fn specificity_separation(on: &[AtomCloud], off: &[AtomCloud], threshold: f64) -> Result<Separation> {
    if on.is_empty() || off.is_empty() {
        return Err(Error::Domain("need at least one on- and one off-target fold".into()));
    }
    let mut distances = Vec::with_capacity(on.len() * off.len());
    for a in on {
        let ca = sole_ligand(a)?;
        let ba = a.backbone_positions();
        for b in off {
            let cb = sole_ligand(b)?;
            let bb = b.backbone_positions();
            if ba.len() != bb.len() {
                return Err(Error::Shape("folds differ in backbone atom count".into()));
            }
            let align = kabsch(&bb, &ba, None)?;
            distances.push(distance(ca, align.apply(cb)));
        }
    }
    let min_distance = distances.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Separation {
        min_distance,
        separated: min_distance > threshold,
        distances,
    })
}
