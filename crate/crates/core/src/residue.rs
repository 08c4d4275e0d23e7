//! Amino-acid vocabulary shared by rewards, geometry and filters.
//!
//! Token indices follow the alphabetical three-letter order
//! `ALA ARG ASN ASP CYS GLN GLU GLY HIS ILE LEU LYS MET PHE PRO SER THR TRP TYR VAL`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AminoAcid {
    Ala,
    Arg,
    Asn,
    Asp,
    Cys,
    Gln,
    Glu,
    Gly,
    His,
    Ile,
    Leu,
    Lys,
    Met,
    Phe,
    Pro,
    Ser,
    Thr,
    Trp,
    Tyr,
    Val,
}

/// Coarse chemical class used by the chemistry-aware motif cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChemClass {
    Hydrophobic,
    Polar,
    Positive,
    Negative,
    Special,
}

pub const AMINO_ACIDS: [AminoAcid; 20] = [
    AminoAcid::Ala,
    AminoAcid::Arg,
    AminoAcid::Asn,
    AminoAcid::Asp,
    AminoAcid::Cys,
    AminoAcid::Gln,
    AminoAcid::Glu,
    AminoAcid::Gly,
    AminoAcid::His,
    AminoAcid::Ile,
    AminoAcid::Leu,
    AminoAcid::Lys,
    AminoAcid::Met,
    AminoAcid::Phe,
    AminoAcid::Pro,
    AminoAcid::Ser,
    AminoAcid::Thr,
    AminoAcid::Trp,
    AminoAcid::Tyr,
    AminoAcid::Val,
];

const THREE: [&str; 20] = [
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE", "LEU", "LYS", "MET",
    "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL",
];

const ONE: [char; 20] = [
    'A', 'R', 'N', 'D', 'C', 'Q', 'E', 'G', 'H', 'I', 'L', 'K', 'M', 'F', 'P', 'S', 'T', 'W', 'Y',
    'V',
];

// Theoretical maximum accessible surface areas (Å²) of Gly-X-Gly tripeptides.
const MAX_ASA: [f64; 20] = [
    129.0, 274.0, 195.0, 193.0, 167.0, 225.0, 223.0, 104.0, 224.0, 197.0, 201.0, 236.0, 224.0,
    240.0, 159.0, 155.0, 172.0, 285.0, 263.0, 174.0,
];

impl AminoAcid {
    pub fn token(self) -> usize {
        self as usize
    }

    pub fn from_token(token: usize) -> Option<Self> {
        AMINO_ACIDS.get(token).copied()
    }

    pub fn from_three(code: &str) -> Option<Self> {
        let code = code.trim().to_ascii_uppercase();
        THREE.iter().position(|&c| c == code).map(|i| AMINO_ACIDS[i])
    }

    pub fn from_one(code: char) -> Option<Self> {
        let code = code.to_ascii_uppercase();
        ONE.iter().position(|&c| c == code).map(|i| AMINO_ACIDS[i])
    }

    pub fn three_letter(self) -> &'static str {
        THREE[self as usize]
    }

    pub fn one_letter(self) -> char {
        ONE[self as usize]
    }

    pub fn class(self) -> ChemClass {
        use AminoAcid::*;
        match self {
            Ala | Val | Ile | Leu | Met | Phe | Trp => ChemClass::Hydrophobic,
            Ser | Thr | Asn | Gln | Tyr => ChemClass::Polar,
            Lys | Arg | His => ChemClass::Positive,
            Asp | Glu => ChemClass::Negative,
            Gly | Pro | Cys => ChemClass::Special,
        }
    }

    /// Residues counted by the surface-hydrophobicity filter.
    pub fn is_surface_hydrophobic(self) -> bool {
        use AminoAcid::*;
        matches!(self, Ala | Val | Ile | Leu | Met | Phe | Trp | Pro)
    }

    /// Formal side-chain charge at pH 7; His is neutral.
    pub fn formal_charge(self) -> i32 {
        match self {
            AminoAcid::Arg | AminoAcid::Lys => 1,
            AminoAcid::Asp | AminoAcid::Glu => -1,
            _ => 0,
        }
    }

    pub fn is_cation(self) -> bool {
        matches!(self, AminoAcid::Arg | AminoAcid::Lys)
    }

    /// π-aromatic for the cation-π reward. His counts as aromatic only.
    pub fn is_aromatic(self) -> bool {
        matches!(
            self,
            AminoAcid::Phe | AminoAcid::Tyr | AminoAcid::Trp | AminoAcid::His
        )
    }

    pub fn max_asa(self) -> f64 {
        MAX_ASA[self as usize]
    }
}

/// Chemical class of a residue name; unknown residues are `Special`.
pub fn class_of_name(name: &str) -> ChemClass {
    AminoAcid::from_three(name).map_or(ChemClass::Special, AminoAcid::class)
}
