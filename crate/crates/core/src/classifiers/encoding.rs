//! Numeric design matrix for the logistic, k-NN and neural learners:
//! z-scored numeric columns and one indicator per category.

use serde::{Deserialize, Serialize};

use super::{check_layout, layout_of, Layout};
use crate::data::{Dataset, FeatureKind};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "coding", rename_all = "snake_case")]
pub enum ColumnCoding {
    Standardized { mean: f64, std: f64 },
    OneHot { categories: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub columns: Vec<ColumnCoding>,
}

impl Encoder {
    /// Fits standardization statistics on `train`. Constant columns get unit scale.
    pub fn fit(train: &Dataset) -> Self {
        let n = train.len().max(1) as f64;
        let columns = train
            .features
            .iter()
            .enumerate()
            .map(|(j, f)| match &f.kind {
                FeatureKind::Categorical(c) => ColumnCoding::OneHot { categories: c.len() },
                FeatureKind::Numeric => {
                    let mean = train.instances.iter().map(|i| i.values[j]).sum::<f64>() / n;
                    let var = train
                        .instances
                        .iter()
                        .map(|i| (i.values[j] - mean).powi(2))
                        .sum::<f64>()
                        / n;
                    let std = var.sqrt();
                    ColumnCoding::Standardized {
                        mean,
                        std: if std > 1e-12 { std } else { 1.0 },
                    }
                }
            })
            .collect();
        Self { columns }
    }

    pub fn width(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match c {
                ColumnCoding::Standardized { .. } => 1,
                ColumnCoding::OneHot { categories } => *categories,
            })
            .sum()
    }

    pub fn layout(&self) -> Layout {
        self.columns
            .iter()
            .map(|c| match c {
                ColumnCoding::Standardized { .. } => None,
                ColumnCoding::OneHot { categories } => Some(*categories),
            })
            .collect()
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_layout(&self.layout(), x)?;
        Ok(self.encode_unchecked(x))
    }

    pub(crate) fn encode_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width());
        for (c, &v) in self.columns.iter().zip(x) {
            match c {
                ColumnCoding::Standardized { mean, std } => out.push((v - mean) / std),
                ColumnCoding::OneHot { categories } => {
                    let start = out.len();
                    out.resize(start + categories, 0.0);
                    out[start + v as usize] = 1.0;
                }
            }
        }
        out
    }

    pub fn encode_dataset(&self, ds: &Dataset) -> Vec<Vec<f64>> {
        debug_assert_eq!(layout_of(&ds.features), self.layout());
        ds.instances.iter().map(|i| self.encode_unchecked(&i.values)).collect()
    }
}
