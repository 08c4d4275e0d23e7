//! Sequence and surface chemistry checks.

use serde::{Deserialize, Serialize};

use super::surface::{shrake_rupley, vdw_radius, Spheres};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{distance, AtomCloud};
use crate::residue::AminoAcid;

/// Formal charge at pH 7: +1 per Arg/Lys, -1 per Asp/Glu, His neutral.
pub fn net_charge(seq: &[AminoAcid]) -> i32 {
    seq.iter().map(|a| a.formal_charge()).sum()
}

/// Standard residues of the protein chains in order; unknown names are skipped.
pub fn sequence_of(cloud: &AtomCloud) -> Vec<AminoAcid> {
    cloud.protein_residues().iter().filter_map(|g| AminoAcid::from_three(&g.residue_name)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceHydrophobicity {
    pub fraction: f64,
    pub exposed: usize,
    pub hydrophobic: usize,
}

/// Among standard residues whose relative accessible area (protein alone,
/// heavy atoms) exceeds `exposed_rsa`, the fraction that are hydrophobic.
pub fn surface_hydrophobicity(
    cloud: &AtomCloud,
    exposed_rsa: f64,
    probe: f64,
    n_points: usize,
    exec: Execution,
) -> SurfaceHydrophobicity {
    let atoms: Vec<usize> = (0..cloud.len())
        .filter(|&i| !cloud.atoms[i].is_ligand && !cloud.atoms[i].is_hydrogen())
        .collect();
    let mut spheres = Spheres::default();
    for &i in &atoms {
        spheres.push(cloud.atoms[i].pos, vdw_radius(&cloud.atoms[i].element));
    }
    let area = shrake_rupley(&spheres, spheres.len(), probe, n_points, exec);
    let mut per_atom = vec![0.0; cloud.len()];
    for (k, &i) in atoms.iter().enumerate() {
        per_atom[i] = area[k];
    }
    let (mut exposed, mut hydrophobic) = (0, 0);
    for g in cloud.protein_residues() {
        let Some(aa) = AminoAcid::from_three(&g.residue_name) else { continue };
        let sasa: f64 = g.atoms.iter().map(|&i| per_atom[i]).sum();
        if sasa / aa.max_asa() > exposed_rsa {
            exposed += 1;
            if aa.is_surface_hydrophobic() {
                hydrophobic += 1;
            }
        }
    }
    let fraction = if exposed == 0 { 0.0 } else { hydrophobic as f64 / exposed as f64 };
    SurfaceHydrophobicity { fraction, exposed, hydrophobic }
}

/// Expected coordination of a metal ion: which residues bind it and the
/// ideal metal-donor distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetalSite {
    pub element: String,
    pub residues: Vec<String>,
    pub ideal_bond: f64,
    /// Residues with a donor closer than `ideal_bond + search_margin` count as coordinating.
    #[serde(default = "default_margin")]
    pub search_margin: f64,
}

fn default_margin() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coordination {
    pub pass: bool,
    /// Residue name, residue index and donor distance for each coordinating residue.
    pub ligands: Vec<(String, i32, f64)>,
}

/// Side-chain N, O or S atoms closest to the metal, one per residue, must
/// match the expected residue multiset with every distance within
/// `tolerance` of the ideal bond.
pub fn metal_coordination_check(cloud: &AtomCloud, site: &MetalSite, tolerance: f64) -> Result<Coordination> {
    let metal = cloud
        .atoms
        .iter()
        .find(|a| a.element.eq_ignore_ascii_case(&site.element))
        .ok_or_else(|| Error::Missing(format!("metal {}", site.element)))?;
    let reach = site.ideal_bond + site.search_margin;
    let mut ligands = Vec::new();
    for g in cloud.protein_residues() {
        let best = g
            .atoms
            .iter()
            .map(|&i| &cloud.atoms[i])
            .filter(|a| !a.is_backbone() && matches!(a.element.to_ascii_uppercase().as_str(), "N" | "O" | "S"))
            .map(|a| distance(a.pos, metal.pos))
            .fold(f64::INFINITY, f64::min);
        if best < reach {
            ligands.push((g.residue_name.clone(), g.residue_index, best));
        }
    }
    let mut found: Vec<String> = ligands.iter().map(|l| l.0.to_ascii_uppercase()).collect();
    let mut want: Vec<String> = site.residues.iter().map(|r| r.to_ascii_uppercase()).collect();
    found.sort();
    want.sort();
    let lengths_ok = ligands.iter().all(|l| (l.2 - site.ideal_bond).abs() <= tolerance);
    Ok(Coordination { pass: found == want && lengths_ok, ligands })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::tests::atom;
    use crate::geometry::Atom;

    fn names(s: &str) -> Vec<AminoAcid> {
        s.chars().map(|c| AminoAcid::from_one(c).unwrap()).collect()
    }

    #[test]
    fn charges() {
        assert_eq!(net_charge(&names("GGGGG")), 0);
        assert_eq!(net_charge(&names(&"K".repeat(16))), 16);
        assert_eq!(net_charge(&names(&format!("{}{}", "R".repeat(10), "E".repeat(4)))), 6);
        assert_eq!(net_charge(&names("HHHDK")), 0);
    }

    fn spread(res: &[&str]) -> AtomCloud {
        let atoms = res.iter().enumerate().map(|(i, r)| atom("CA", r, i as i32 + 1, "A", [20.0 * i as f64, 0.0, 0.0], false)).collect();
        AtomCloud::new(atoms).unwrap()
    }

    #[test]
    fn hydrophobic_surface() {
        let s = |c: &AtomCloud| surface_hydrophobicity(c, 0.25, 1.4, 960, Execution::Sequential);
        assert_eq!(s(&spread(&["GLY"; 6])).fraction, 0.0);
        assert_eq!(s(&spread(&["LEU"; 6])).fraction, 1.0);
        let half = s(&spread(&["LEU", "SER", "VAL", "THR"]));
        assert_eq!((half.fraction, half.exposed), (0.5, 4));
        // A residue buried in a tight cluster is not exposed.
        let mut atoms = vec![atom("CA", "LEU", 1, "A", [0.0; 3], false)];
        for (k, u) in crate::filter::fibonacci_sphere(40).iter().enumerate() {
            atoms.push(atom("CA", "GLY", k as i32 + 2, "A", (u * 3.4).into(), false));
        }
        let buried = s(&AtomCloud::new(atoms).unwrap());
        assert_eq!(buried.hydrophobic, 0);
    }

    fn site(bonds: &[(&str, f64)]) -> AtomCloud {
        let mut atoms: Vec<Atom> = Vec::new();
        let dirs = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]];
        for (k, ((res, d), u)) in bonds.iter().zip(dirs).enumerate() {
            let donor = if *res == "CYS" { "SG" } else { "NE2" };
            let mut a = atom(donor, res, k as i32 + 1, "A", [u[0] * d, u[1] * d, u[2] * d], false);
            a.element = if *res == "CYS" { "S".into() } else { "N".into() };
            atoms.push(atom("CA", res, k as i32 + 1, "A", [u[0] * (d + 3.0), u[1] * (d + 3.0), 0.0], false));
            atoms.push(a);
        }
        let mut fe = atom("FE", "FE", 1, "B", [0.0; 3], true);
        fe.element = "FE".into();
        atoms.push(fe);
        AtomCloud::new(atoms).unwrap()
    }

    #[test]
    fn metal_sites() {
        let spec = MetalSite { element: "FE".into(), residues: vec!["CYS".into(); 4], ideal_bond: 2.3, search_margin: 1.0 };
        let ok = site(&[("CYS", 2.3); 4]);
        assert!(metal_coordination_check(&ok, &spec, 0.5).unwrap().pass);
        let long = site(&[("CYS", 2.3), ("CYS", 2.3), ("CYS", 2.3), ("CYS", 3.0)]);
        assert!(!metal_coordination_check(&long, &spec, 0.5).unwrap().pass);
        let three = site(&[("CYS", 2.3); 3]);
        let c = metal_coordination_check(&three, &spec, 0.5).unwrap();
        assert!(!c.pass && c.ligands.len() == 3);
        let wrong = site(&[("CYS", 2.3), ("CYS", 2.3), ("CYS", 2.3), ("HIS", 2.3)]);
        assert!(!metal_coordination_check(&wrong, &spec, 0.5).unwrap().pass);
        let bare = spread(&["GLY"]);
        assert!(matches!(metal_coordination_check(&bare, &spec, 0.5), Err(Error::Missing(_))));
    }
}
