//! Model file formats.
//!
//! Offspring laws and marking rules travel as JSON documents matching
//! `schemas/model.schema.json`:
//!
//! ```json
//! { "pmf": [0.5, 0.0, 0.5], "marking": { "kind": "constant", "value": 0.02 } }
//! ```
//!
//! Sequential mutation chains match `schemas/sequential.schema.json`:
//!
//! ```json
//! { "levels": [ { "pmf": [0.5, 0.0, 0.5], "mutation_prob": 1e-3 } ] }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mutation::{SequentialLevel, SequentialModel};
use crate::offspring::{MarkingRule, OffspringLaw};

/// Marking rule as written in model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarkingSpec {
    None,
    Constant { value: f64 },
    Table { values: Vec<f64> },
}

/// One offspring law plus its marking rule, as written in model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub pmf: Vec<f64>,
    pub marking: MarkingSpec,
}

impl ModelSpec {
    pub fn build(&self) -> Result<(OffspringLaw, MarkingRule)> {
        let law = OffspringLaw::from_pmf(self.pmf.clone())?;
        let rule = match &self.marking {
            MarkingSpec::None => MarkingRule::none(&law),
            MarkingSpec::Constant { value } => MarkingRule::constant(*value, &law)?,
            MarkingSpec::Table { values } => MarkingRule::from_table(values.clone(), &law)?,
        };
        Ok((law, rule))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Binary law with mean `1 + epsilon` and constant marking probability.
    pub fn binary_marked(epsilon: f64, marking: f64) -> Result<Self> {
        let law = OffspringLaw::binary(epsilon)?;
        Ok(Self {
            pmf: law.pmf().to_vec(),
            marking: MarkingSpec::Constant { value: marking },
        })
    }
}

/// Builds a family of (law, rule) pairs, attributing failures to the
/// offending member index.
pub fn build_family(specs: &[ModelSpec]) -> Result<Vec<(OffspringLaw, MarkingRule)>> {
    specs
        .iter()
        .enumerate()
        .map(|(index, spec)| {
            spec.build().map_err(|e| Error::InvalidFamilyMember {
                index,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// One level of a sequential chain, as written in model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub pmf: Vec<f64>,
    pub mutation_prob: f64,
}

/// Sequential mutation chain, wild type first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequentialModelSpec {
    pub levels: Vec<LevelSpec>,
}

impl SequentialModelSpec {
    pub fn build(&self) -> Result<SequentialModel> {
        let levels = self
            .levels
            .iter()
            .enumerate()
            .map(|(index, level)| {
                let law = OffspringLaw::from_pmf(level.pmf.clone()).map_err(|e| {
                    Error::InvalidFamilyMember {
                        index,
                        reason: e.to_string(),
                    }
                })?;
                Ok(SequentialLevel {
                    law,
                    mutation_prob: level.mutation_prob,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SequentialModel::new(levels)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn from_model(model: &SequentialModel) -> Self {
        Self {
            levels: model
                .levels
                .iter()
                .map(|l| LevelSpec {
                    pmf: l.law.pmf().to_vec(),
                    mutation_prob: l.mutation_prob,
                })
                .collect(),
        }
    }
}
