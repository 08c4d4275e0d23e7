//! Fixed-column ATOM/HETATM records: the subset of PDB needed for
//! coordinates, residue identity and occupancy.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Atom, AtomCloud};

fn column(line: &str, lo: usize, hi: usize) -> &str {
    let hi = hi.min(line.len());
    if lo >= hi {
        ""
    } else {
        line.get(lo..hi).unwrap_or("")
    }
}

fn number(line: &str, lo: usize, hi: usize, n: usize, what: &str) -> Result<f64> {
    let raw = column(line, lo, hi).trim();
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse { line: n, msg: format!("{what} is not a number: {raw:?}") })
}

fn element_from_name(name: &str) -> String {
    name.chars().find(|c| c.is_ascii_alphabetic()).map(|c| c.to_ascii_uppercase().to_string()).unwrap_or_default()
}

/// Parse the first model of a PDB-style text. Records other than ATOM and
/// HETATM are skipped; alternate locations other than the first are dropped.
pub fn parse_pdb(text: &str) -> Result<AtomCloud> {
    let mut atoms = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.starts_with("ENDMDL") || line.trim_end() == "END" {
            break;
        }
        let record = column(line, 0, 6);
        let is_ligand = match record {
            "ATOM  " | "ATOM" => false,
            "HETATM" => true,
            _ => continue,
        };
        if !line.is_ascii() {
            return Err(Error::Parse { line: n, msg: "non-ASCII characters in record".into() });
        }
        if line.len() < 54 {
            return Err(Error::Parse { line: n, msg: format!("record has {} columns, coordinates need 54", line.len()) });
        }
        let alt = column(line, 16, 17);
        if !(alt.trim().is_empty() || alt == "A") {
            continue;
        }
        let name = column(line, 12, 16).trim().to_string();
        if name.is_empty() {
            return Err(Error::Parse { line: n, msg: "empty atom name".into() });
        }
        let residue_index = column(line, 22, 26)
            .trim()
            .parse::<i32>()
            .map_err(|_| Error::Parse { line: n, msg: format!("residue number {:?}", column(line, 22, 26)) })?;
        let pos = [
            number(line, 30, 38, n, "x")?,
            number(line, 38, 46, n, "y")?,
            number(line, 46, 54, n, "z")?,
        ];
        let occupancy = if column(line, 54, 60).trim().is_empty() { 1.0 } else { number(line, 54, 60, n, "occupancy")? };
        let element = match column(line, 76, 78).trim() {
            "" => element_from_name(&name),
            e => e.to_ascii_uppercase(),
        };
        atoms.push(Atom {
            name,
            element,
            residue_name: column(line, 17, 20).trim().to_string(),
            residue_index,
            chain: column(line, 21, 22).trim().to_string(),
            pos,
            is_ligand,
            occupancy,
        });
    }
    AtomCloud::new(atoms)
}

pub fn read_pdb(path: &Path) -> Result<AtomCloud> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Missing(format!("structure {}: {e}", path.display())))?;
    parse_pdb(&text)
}

/// Write ATOM/HETATM records with serials numbered from 1, then END.
pub fn write_pdb(cloud: &AtomCloud) -> String {
    let mut out = String::new();
    for (i, a) in cloud.atoms.iter().enumerate() {
        let record = if a.is_ligand { "HETATM" } else { "ATOM" };
        let name = if a.name.len() < 4 && a.element.len() == 1 { format!(" {:<3}", a.name) } else { format!("{:<4}", a.name) };
        out.push_str(&format!(
            "{:<6}{:>5} {} {:>3} {:1}{:>4}    {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}          {:>2}\n",
            record,
            (i + 1) % 100_000,
            name,
            a.residue_name,
            a.chain,
            a.residue_index,
            a.pos[0],
            a.pos[1],
            a.pos[2],
            a.occupancy,
            0.0,
            a.element
        ));
    }
    out.push_str("END\n");
    out
}
