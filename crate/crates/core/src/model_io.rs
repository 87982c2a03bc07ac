//! Versioned JSON persistence for fitted classifiers and ensembles.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassDistribution, Classifier};
use crate::data::{check_values, Schema};
use crate::error::{Error, Result};
use crate::evaluation::FittedSystem;

pub const FORMAT_VERSION: u32 = 1;

/// A fitted model together with the schema its inputs must follow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub schema: Schema,
    pub model: FittedSystem,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

impl ModelBundle {
    pub fn new(schema: Schema, model: FittedSystem) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            schema,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let probe: VersionProbe = serde_json::from_str(text)?;
        if probe.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(probe.format_version));
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks that `other` declares the same features in the same order.
    pub fn check_schema(&self, other: &Schema) -> Result<()> {
        let mine = &self.schema.features;
        for (j, f) in mine.iter().enumerate() {
            match other.features.get(j) {
                Some(g) if g == f => {}
                Some(g) => {
                    return Err(Error::SchemaMismatch {
                        feature: f.name.clone(),
                        message: format!("model expects `{}` ({:?}), data has `{}` ({:?})", f.name, f.kind, g.name, g.kind),
                    })
                }
                None => {
                    return Err(Error::SchemaMismatch {
                        feature: f.name.clone(),
                        message: "missing from data".into(),
                    })
                }
            }
        }
        if let Some(extra) = other.features.get(mine.len()) {
            return Err(Error::SchemaMismatch {
                feature: extra.name.clone(),
                message: "not known to the model".into(),
            });
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_values(&self.schema.features, x)?;
        match &self.model {
            FittedSystem::Ensemble(m) => {
                let p = crate::architectures::predict_ensemble(m, x)?;
                Ok(Prediction {
                    class: p.class,
                    distribution: p.distribution,
                    selected: p.selected,
                })
            }
            FittedSystem::Single(m) => Ok(Prediction {
                class: m.predict_class(x)?,
                distribution: m.predict_proba(x)?,
                selected: None,
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub class: u8,
    pub distribution: ClassDistribution,
    pub selected: Option<usize>,
}
