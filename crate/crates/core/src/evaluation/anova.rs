//! Fixed-effects analysis of variance for balanced, fully crossed designs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::fdist::f_survival;
use crate::error::{Error, Result};

/// One response with its level under every factor.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub levels: Vec<String>,
    pub response: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub source: String,
    pub sum_squares: f64,
    pub df: usize,
    pub mean_square: f64,
    pub f_ratio: f64,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub effects: Vec<AnovaRow>,
    pub residual_ss: f64,
    pub residual_df: usize,
    pub residual_ms: f64,
    pub total_ss: f64,
    pub total_df: usize,
    /// Residual mean square is zero (or has no degrees of freedom), so the
    /// F-ratios are infinite or undefined.
    pub degenerate: bool,
}

impl AnovaTable {
    pub fn effect(&self, source: &str) -> Option<&AnovaRow> {
        self.effects.iter().find(|r| r.source == source)
    }
}

fn level_means(obs: &[Observation], key: impl Fn(&Observation) -> Vec<&str>) -> BTreeMap<Vec<&str>, (f64, usize)> {
    let mut acc: BTreeMap<Vec<&str>, (f64, usize)> = BTreeMap::new();
    for o in obs {
        let e = acc.entry(key(o)).or_insert((0.0, 0));
        e.0 += o.response;
        e.1 += 1;
    }
    for v in acc.values_mut() {
        v.0 /= v.1 as f64;
    }
    acc
}

/// Checks that every combination of levels occurs the same number of times.
pub fn check_balanced(n_factors: usize, obs: &[Observation]) -> Result<Vec<Vec<String>>> {
    if obs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(o) = obs.iter().find(|o| o.levels.len() != n_factors) {
        return Err(Error::LengthMismatch {
            expected: n_factors,
            actual: o.levels.len(),
        });
    }
    let mut levels: Vec<Vec<String>> = vec![Vec::new(); n_factors];
    for o in obs {
        for (j, l) in o.levels.iter().enumerate() {
            if !levels[j].contains(l) {
                levels[j].push(l.clone());
            }
        }
    }
    for l in &mut levels {
        l.sort();
    }
    let cells = level_means(obs, |o| o.levels.iter().map(String::as_str).collect());
    let expected: usize = levels.iter().map(Vec::len).product();
    if cells.len() != expected {
        return Err(Error::Unbalanced(format!(
            "{} of {expected} level combinations observed",
            cells.len()
        )));
    }
    let per_cell = obs.len() / expected;
    if per_cell * expected != obs.len() {
        return Err(Error::Unbalanced("unequal replicate counts".into()));
    }
    let mut counts: BTreeMap<&[String], usize> = BTreeMap::new();
    for o in obs {
        *counts.entry(o.levels.as_slice()).or_default() += 1;
    }
    if counts.values().any(|&c| c != per_cell) {
        return Err(Error::Unbalanced("unequal replicate counts".into()));
    }
    Ok(levels)
}

/// Main effects for every factor plus the requested two-way interactions.
pub fn anova(factor_names: &[&str], obs: &[Observation], interactions: &[(usize, usize)]) -> Result<AnovaTable> {
    let k = factor_names.len();
    let levels = check_balanced(k, obs)?;
    for (j, l) in levels.iter().enumerate() {
        if l.len() < 2 {
            return Err(Error::param(
                "factors",
                format!("factor `{}` has a single level", factor_names[j]),
            ));
        }
    }
    for &(a, b) in interactions {
        if a >= k || b >= k || a == b {
            return Err(Error::param("interactions", format!("bad factor pair ({a}, {b})")));
        }
    }

    let n = obs.len();
    let grand = obs.iter().map(|o| o.response).sum::<f64>() / n as f64;
    let total_ss: f64 = obs.iter().map(|o| (o.response - grand).powi(2)).sum();

    let mut raw = Vec::new();
    let mut mains = Vec::with_capacity(k);
    for (j, name) in factor_names.iter().enumerate() {
        let means = level_means(obs, |o| vec![o.levels[j].as_str()]);
        let ss: f64 = means.values().map(|&(m, c)| c as f64 * (m - grand).powi(2)).sum();
        raw.push((name.to_string(), ss, levels[j].len() - 1));
        mains.push(means);
    }
    for &(a, b) in interactions {
        let cells = level_means(obs, |o| vec![o.levels[a].as_str(), o.levels[b].as_str()]);
        let ss: f64 = cells
            .iter()
            .map(|(key, &(m, c))| {
                let ma = mains[a][&vec![key[0]]].0;
                let mb = mains[b][&vec![key[1]]].0;
                c as f64 * (m - ma - mb + grand).powi(2)
            })
            .sum();
        raw.push((
            format!("{}:{}", factor_names[a], factor_names[b]),
            ss,
            (levels[a].len() - 1) * (levels[b].len() - 1),
        ));
    }

    let total_df = n - 1;
    let effect_df: usize = raw.iter().map(|r| r.2).sum();
    let residual_df = total_df.checked_sub(effect_df).ok_or_else(|| {
        Error::Unbalanced(format!("{effect_df} effect degrees of freedom exceed {total_df}"))
    })?;
    let residual_ss = (total_ss - raw.iter().map(|r| r.1).sum::<f64>()).max(0.0);
    let residual_ms = if residual_df > 0 {
        residual_ss / residual_df as f64
    } else {
        0.0
    };
    let degenerate = !(residual_ms > 0.0);
    let effects = raw
        .into_iter()
        .map(|(source, ss, df)| {
            let ms = ss / df as f64;
            let (f_ratio, p_value) = if degenerate {
                if ms > 0.0 {
                    (f64::INFINITY, 0.0)
                } else {
                    (f64::NAN, f64::NAN)
                }
            } else {
                let f = ms / residual_ms;
                (f, f_survival(f, df as f64, residual_df as f64))
            };
            AnovaRow {
                source,
                sum_squares: ss,
                df,
                mean_square: ms,
                f_ratio,
                p_value,
            }
        })
        .collect();
    Ok(AnovaTable {
        effects,
        residual_ss,
        residual_df,
        residual_ms,
        total_ss,
        total_df,
        degenerate,
    })
}
