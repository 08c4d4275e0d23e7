#![allow(dead_code)]

use std::path::Path;

use codesign::filter::fibonacci_sphere;
use codesign::geometry::{Atom, AtomCloud, Point};
use codesign::io::write_pdb;

pub fn atom(name: &str, res: &str, idx: i32, chain: &str, pos: Point, ligand: bool) -> Atom {
    Atom {
        name: name.into(),
        element: name.chars().next().unwrap().to_string(),
        residue_name: res.into(),
        residue_index: idx,
        chain: chain.into(),
        pos,
        is_ligand: ligand,
        occupancy: 1.0,
    }
}

/// 120 one-atom residues on a sphere of radius 3.8 Å around `centre`, with a
/// two-atom ligand at the origin. `names` picks the residue type by index.
pub fn shell_design(centre: Point, names: impl Fn(usize) -> &'static str) -> AtomCloud {
    let mut atoms = Vec::new();
    for (k, u) in fibonacci_sphere(120).iter().enumerate() {
        let p = [centre[0] + 3.8 * u[0], centre[1] + 3.8 * u[1], centre[2] + 3.8 * u[2]];
        atoms.push(atom("CA", names(k), k as i32 + 1, "A", p, false));
    }
    atoms.push(atom("C1", "LIG", 1, "B", [0.0, 0.0, -0.6], true));
    atoms.push(atom("O1", "LIG", 1, "B", [0.0, 0.0, 0.6], true));
    AtomCloud::new(atoms).unwrap()
}

/// (id, iptm, ptm, chain-pair PAE, chain-pair ipTM, sequence cluster, structure cluster)
pub const FILTER_DESIGNS: [(&str, f64, f64, f64, f64, &str, &str); 10] = [
    ("d01", 0.90, 0.90, 0.0, 0.80, "S1", "T1"),
    ("d02", 0.95, 0.90, 0.0, 0.85, "S1", "T1"),
    ("d03", 0.99, 0.99, 0.0, 0.99, "S2", "T2"),
    ("d04", 0.85, 0.80, 0.0, 0.75, "S1", "T1"),
    ("d05", 0.97, 0.95, 0.0, 0.90, "S2", "T2"),
    ("d06", 0.80, 0.80, 1.0, 0.70, "S2", "T2"),
    ("d07", 0.65, 0.90, 0.0, 0.80, "S3", "T2"),
    ("d08", 0.70, 0.70, 0.0, 0.50, "S2", "T1"),
    ("d09", 0.88, 0.85, 0.0, 0.70, "S3", "T1"),
    ("d10", 0.90, 0.75, 0.5, 0.80, "S3", "T1"),
];

/// Ten designs with confidence records, cluster maps and a config capping
/// structure clusters at 3.
///
/// d03 has its protein 40 Å away from the ligand, d05 carries twenty lysines
/// (net charge +20) and d07 misses the ipTM cutoff; d08 sits exactly on
/// every confidence cutoff. Passing scores: d02 1.55, d01 1.475, d04 1.375,
/// d09 1.3525, d10 1.1875, d08 1.025, d06 0.8. Greedy selection takes d02
/// and d01 (S1 now full), skips d04 (S1), takes d09 (T1 now at 3), skips
/// d10 and d08 (T1), then takes d06.
pub const FILTER_EXPECTED: [&str; 4] = ["d02", "d01", "d09", "d06"];

pub fn write_filter_fixture(dir: &Path) {
    let designs = dir.join("designs");
    std::fs::create_dir_all(&designs).unwrap();
    let mut seq = String::from("# design cluster\n");
    let mut st = String::new();
    for (id, iptm, ptm, pae, ic, s, t) in FILTER_DESIGNS {
        let cloud = match id {
            "d03" => shell_design([40.0, 0.0, 0.0], |_| "GLY"),
            "d05" => shell_design([0.0; 3], |k| if k % 6 == 0 { "LYS" } else { "GLY" }),
            _ => shell_design([0.0; 3], |k| if k % 10 == 0 { "SER" } else { "GLY" }),
        };
        std::fs::write(designs.join(format!("{id}.pdb")), write_pdb(&cloud)).unwrap();
        let conf = format!("iptm = {iptm}\nptm = {ptm}\nchain_pair_pae = {pae}\nchain_pair_iptm = {ic}\n");
        std::fs::write(designs.join(format!("{id}.conf")), conf).unwrap();
        seq.push_str(&format!("{id} {s}\n"));
        st.push_str(&format!("{id},{t}\n"));
    }
    std::fs::write(dir.join("seq_clusters.txt"), seq).unwrap();
    std::fs::write(dir.join("struct_clusters.csv"), st).unwrap();
    std::fs::write(dir.join("filter.toml"), "[filter]\nstructure_cluster_cap = 3\n").unwrap();
}
