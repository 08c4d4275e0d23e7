//! Joint sequence/structure state carried along a sampling trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real-token vocabulary of size `V`; index `V` is the mask sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    size: usize,
}

impl Vocabulary {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::Config(format!("vocabulary needs at least 2 tokens, got {size}")));
        }
        Ok(Self { size })
    }

    /// Number of real tokens.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn mask_id(&self) -> usize {
        self.size
    }

    pub fn is_mask(&self, token: usize) -> bool {
        token == self.size
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceState {
    pub tokens: Vec<usize>,
    pub vocab: Vocabulary,
}

impl SequenceState {
    pub fn new(tokens: Vec<usize>, vocab: Vocabulary) -> Result<Self> {
        if let Some(&bad) = tokens.iter().find(|&&t| t > vocab.mask_id()) {
            return Err(Error::Domain(format!(
                "token {bad} outside vocabulary of size {}",
                vocab.size()
            )));
        }
        Ok(Self { tokens, vocab })
    }

    pub fn all_masked(len: usize, vocab: Vocabulary) -> Self {
        Self {
            tokens: vec![vocab.mask_id(); len],
            vocab,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn masked_count(&self) -> usize {
        self.tokens.iter().filter(|&&t| self.vocab.is_mask(t)).count()
    }

    pub fn mask_fraction(&self) -> f64 {
        if self.tokens.is_empty() {
            0.0
        } else {
            self.masked_count() as f64 / self.tokens.len() as f64
        }
    }
}

/// Whether coordinates are an abstract vector or flattened 3D atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoordMode {
    #[default]
    Toy,
    Cartesian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousState {
    pub coords: Vec<f64>,
    pub mode: CoordMode,
}

impl ContinuousState {
    pub fn toy(coords: Vec<f64>) -> Self {
        Self {
            coords,
            mode: CoordMode::Toy,
        }
    }

    /// 3D state from flattened `[x0, y0, z0, x1, ...]` coordinates in Å.
    pub fn cartesian(coords: Vec<f64>) -> Result<Self> {
        if !coords.len().is_multiple_of(3) {
            return Err(Error::Shape(format!(
                "cartesian coordinates need a multiple of 3 entries, got {}",
                coords.len()
            )));
        }
        Ok(Self {
            coords,
            mode: CoordMode::Cartesian,
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    /// Refuses toy-mode states for operations that need atoms.
    pub fn require_cartesian(&self) -> Result<()> {
        match self.mode {
            CoordMode::Cartesian => Ok(()),
            CoordMode::Toy => Err(Error::Domain(
                "operation requires 3D coordinates, state is in toy mode".into(),
            )),
        }
    }
}

/// Paired sequence and coordinates at unified time `tau`, structure noise
/// level `t` and sequence mask time `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub seq: SequenceState,
    pub structure: ContinuousState,
    pub tau: f64,
    pub t: f64,
    pub r: f64,
}
