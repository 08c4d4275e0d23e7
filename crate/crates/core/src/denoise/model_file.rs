use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CoupledToyModel, Denoiser, DenoiserOutput, DiscreteTable, GaussianMixtureModel};
use crate::error::{Error, Result};
use crate::state::{ContinuousState, SequenceState, Vocabulary};

/// Any oracle loadable from a model file, tagged by `kind`.
///
/// ```toml
/// kind = "gaussian_mixture"
/// sigma0 = 0.5
/// weights = [0.5, 0.5]
/// means = [[-2.0], [2.0]]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleModel {
    GaussianMixture(GaussianMixtureModel),
    DiscreteTable(DiscreteTable),
    Coupled(CoupledToyModel),
}

impl OracleModel {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut model: OracleModel =
            toml::from_str(text).map_err(|e| Error::Config(format!("oracle model: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Missing(format!("oracle file {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("oracle models serialize")
    }

    pub fn validate(&mut self) -> Result<()> {
        match self {
            OracleModel::GaussianMixture(m) => m.validate(),
            OracleModel::DiscreteTable(t) => t.prepare(),
            OracleModel::Coupled(c) => c.validate(),
        }
    }

    fn inner(&self) -> &dyn Denoiser {
        match self {
            OracleModel::GaussianMixture(m) => m,
            OracleModel::DiscreteTable(t) => t,
            OracleModel::Coupled(c) => c,
        }
    }
}

impl Denoiser for OracleModel {
    fn vocab(&self) -> Vocabulary {
        self.inner().vocab()
    }

    fn seq_len(&self) -> usize {
        self.inner().seq_len()
    }

    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn denoise(
        &self,
        coords: &ContinuousState,
        seq: &SequenceState,
        t: f64,
        r: f64,
    ) -> Result<DenoiserOutput> {
        self.inner().denoise(coords, seq, t, r)
    }
}
