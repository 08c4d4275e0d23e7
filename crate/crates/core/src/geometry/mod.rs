//! Alignment, motif similarity, topology and co-designability metrics.

mod codesign;
mod hungarian;
mod kabsch;
mod motif;
mod topology;

pub use codesign::{codesign_passes, codesignable, motif_is_novel, CodesignResult, CODESIGN_THRESHOLD, NOVELTY_THRESHOLD};
pub use hungarian::hungarian;
pub use kabsch::{centroid, distance, kabsch, rmsd, superpose, Alignment, Point};
pub use motif::{
    chem_cost, chem_distance, cluster_ratio, complete_linkage, frobenius_distance, lddt, lddt_with_assignment,
    motif_rmsd, nearest_neighbours, nn_diversity, pairwise, MotifAlignment, MotifFrame, MotifMetric,
    CLUSTER_THRESHOLD, LDDT_THRESHOLDS,
};
pub use topology::{radius_of_gyration, relative_contact_order, ContactOrder};

use crate::error::{Error, Result};
use crate::residue::{class_of_name, ChemClass};

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub name: String,
    pub element: String,
    pub residue_name: String,
    pub residue_index: i32,
    pub chain: String,
    pub pos: Point,
    pub is_ligand: bool,
    pub occupancy: f64,
}

impl Atom {
    pub fn is_backbone(&self) -> bool {
        !self.is_ligand && matches!(self.name.as_str(), "N" | "CA" | "C" | "O")
    }

    pub fn is_hydrogen(&self) -> bool {
        matches!(self.element.as_str(), "H" | "D")
    }

    pub fn class(&self) -> ChemClass {
        class_of_name(&self.residue_name)
    }
}

/// Contiguous atoms sharing chain, residue index and residue name.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueGroup {
    pub chain: String,
    pub residue_index: i32,
    pub residue_name: String,
    pub is_ligand: bool,
    pub atoms: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AtomCloud {
    pub atoms: Vec<Atom>,
}

impl AtomCloud {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let cloud = Self { atoms };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn validate(&self) -> Result<()> {
        for a in &self.atoms {
            if a.pos.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("atom {} has a non-finite position", a.name)));
            }
        }
        for w in self.atoms.windows(2) {
            if w[0].chain == w[1].chain && !w[0].is_ligand && !w[1].is_ligand && w[1].residue_index < w[0].residue_index {
                return Err(Error::Domain(format!("residue indices decrease within chain {}", w[0].chain)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn positions(&self) -> Vec<Point> {
        self.atoms.iter().map(|a| a.pos).collect()
    }

    pub fn residues(&self) -> Vec<ResidueGroup> {
        let mut out: Vec<ResidueGroup> = Vec::new();
        for (i, a) in self.atoms.iter().enumerate() {
            match out.last_mut() {
                Some(g) if g.chain == a.chain && g.residue_index == a.residue_index && g.residue_name == a.residue_name && g.is_ligand == a.is_ligand => {
                    g.atoms.push(i)
                }
                _ => out.push(ResidueGroup {
                    chain: a.chain.clone(),
                    residue_index: a.residue_index,
                    residue_name: a.residue_name.clone(),
                    is_ligand: a.is_ligand,
                    atoms: vec![i],
                }),
            }
        }
        out
    }

    pub fn protein_residues(&self) -> Vec<ResidueGroup> {
        self.residues().into_iter().filter(|g| !g.is_ligand).collect()
    }

    pub fn ligands(&self) -> Vec<ResidueGroup> {
        self.residues().into_iter().filter(|g| g.is_ligand).collect()
    }

    /// Cα position of each protein residue, in order.
    pub fn ca_positions(&self) -> Result<Vec<Point>> {
        self.protein_residues()
            .iter()
            .map(|g| {
                g.atoms
                    .iter()
                    .map(|&i| &self.atoms[i])
                    .find(|a| a.name == "CA")
                    .map(|a| a.pos)
                    .ok_or_else(|| Error::Missing(format!("CA atom in residue {}{}", g.chain, g.residue_index)))
            })
            .collect()
    }

    pub fn backbone_positions(&self) -> Vec<Point> {
        self.atoms.iter().filter(|a| a.is_backbone()).map(|a| a.pos).collect()
    }

    pub fn heavy_centroid(&self, group: &ResidueGroup) -> Result<Point> {
        let ps: Vec<Point> = group.atoms.iter().map(|&i| &self.atoms[i]).filter(|a| !a.is_hydrogen()).map(|a| a.pos).collect();
        if ps.is_empty() {
            return Err(Error::Geometry(format!("ligand {} has no heavy atoms", group.residue_name)));
        }
        Ok(centroid(&ps, None))
    }

    /// Motif frame from protein residues at the given positions (0-based order).
    pub fn motif(&self, positions: &[usize]) -> Result<MotifFrame> {
        let res = self.protein_residues();
        let ca = self.ca_positions()?;
        let mut frame = MotifFrame::default();
        for &p in positions {
            let g = res.get(p).ok_or_else(|| Error::Shape(format!("motif residue {p} out of range")))?;
            frame.ca.push(ca[p]);
            frame.residue_types.push(g.residue_name.clone());
        }
        Ok(frame)
    }
}
