//! Typed tabular datasets, CSV + JSON-schema ingestion, and the
//! train/validation/test and k-fold partitioning protocol.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Number of classes. The task is binary: 0 = negative, 1 = positive.
pub const N_CLASSES: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub enum FeatureKind {
    Numeric,
    /// Ordered category labels; values are stored as the index into this list.
    Categorical(Vec<String>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Numeric,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical(categories.into_iter().map(Into::into).collect()),
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, FeatureKind::Categorical(_))
    }

    /// Category count, or `None` for numeric features.
    pub fn cardinality(&self) -> Option<usize> {
        match &self.kind {
            FeatureKind::Numeric => None,
            FeatureKind::Categorical(c) => Some(c.len()),
        }
    }

    fn validate(&self) -> Result<()> {
        if let FeatureKind::Categorical(cats) = &self.kind {
            if cats.len() < 2 {
                return Err(Error::Schema(format!(
                    "categorical feature `{}` must list at least 2 categories",
                    self.name
                )));
            }
            let mut seen = HashSet::new();
            for c in cats {
                if !seen.insert(c) {
                    return Err(Error::Schema(format!(
                        "feature `{}` lists category `{c}` twice",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct RawFeature {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    categories: Option<Vec<String>>,
}

/// Column declarations plus the name of the label column.
///
/// JSON form: `{"label": name, "features": [{"name", "kind", "categories"}]}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schema {
    pub label: String,
    pub features: Vec<FeatureSpec>,
}

#[derive(Serialize, Deserialize)]
struct RawSchema {
    label: String,
    features: Vec<RawFeature>,
}

impl Schema {
    pub fn new(label: impl Into<String>, features: Vec<FeatureSpec>) -> Result<Self> {
        let schema = Self {
            label: label.into(),
            features,
        };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for f in &self.features {
            if !names.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name `{}`", f.name)));
            }
            if f.name == self.label {
                return Err(Error::Schema(format!(
                    "feature `{}` has the same name as the label",
                    f.name
                )));
            }
            f.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawSchema = serde_json::from_str(text)?;
        let mut features = Vec::with_capacity(raw.features.len());
        for f in raw.features {
            let kind = match (f.kind.as_str(), f.categories) {
                ("numeric", None) => FeatureKind::Numeric,
                ("numeric", Some(c)) if c.is_empty() => FeatureKind::Numeric,
                ("numeric", Some(_)) => {
                    return Err(Error::Schema(format!(
                        "numeric feature `{}` must not list categories",
                        f.name
                    )))
                }
                ("categorical", Some(c)) => FeatureKind::Categorical(c),
                ("categorical", None) => {
                    return Err(Error::Schema(format!(
                        "categorical feature `{}` has no categories",
                        f.name
                    )))
                }
                (other, _) => {
                    return Err(Error::Schema(format!(
                        "feature `{}` has unknown kind `{other}`",
                        f.name
                    )))
                }
            };
            features.push(FeatureSpec { name: f.name, kind });
        }
        Self::new(raw.label, features)
    }

    pub fn to_json(&self) -> String {
        let raw = RawSchema {
            label: self.label.clone(),
            features: self
                .features
                .iter()
                .map(|f| RawFeature {
                    name: f.name.clone(),
                    kind: if f.is_categorical() { "categorical" } else { "numeric" }.into(),
                    categories: match &f.kind {
                        FeatureKind::Numeric => None,
                        FeatureKind::Categorical(c) => Some(c.clone()),
                    },
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("schema serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

// Schemas travel inside model bundles, so give them the same JSON shape as the sidecar file.
impl Serialize for Schema {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: serde_json::Value =
            serde_json::from_str(&self.to_json()).map_err(serde::ser::Error::custom)?;
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Schema {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        Schema::from_json(&v.to_string()).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    /// Stable identity (source row index) used for provenance audits.
    pub id: usize,
    /// Numeric value, or category index stored as an exact integer.
    pub values: Vec<f64>,
    pub label: u8,
    pub weight: f64,
}

impl Instance {
    pub fn new(id: usize, values: Vec<f64>, label: u8) -> Self {
        Self {
            id,
            values,
            label,
            weight: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Vec<FeatureSpec>,
    pub label_name: String,
    pub instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(schema: Schema, instances: Vec<Instance>) -> Result<Self> {
        schema.validate()?;
        let ds = Self {
            features: schema.features,
            label_name: schema.label,
            instances,
        };
        for inst in &ds.instances {
            ds.check_instance(&inst.values)?;
            if inst.label as usize >= N_CLASSES {
                return Err(Error::Schema(format!(
                    "instance {} has label {} outside {{0,1}}",
                    inst.id, inst.label
                )));
            }
            if !(inst.weight >= 0.0) || !inst.weight.is_finite() {
                return Err(Error::Schema(format!(
                    "instance {} has invalid weight {}",
                    inst.id, inst.weight
                )));
            }
        }
        Ok(ds)
    }

    pub fn schema(&self) -> Schema {
        Schema {
            label: self.label_name.clone(),
            features: self.features.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.instances.iter().map(|i| i.label).collect()
    }

    pub fn class_counts(&self) -> [usize; N_CLASSES] {
        let mut counts = [0; N_CLASSES];
        for inst in &self.instances {
            counts[inst.label as usize] += 1;
        }
        counts
    }

    pub fn has_both_classes(&self) -> bool {
        self.class_counts().iter().all(|&c| c > 0)
    }

    pub fn require_both_classes(&self) -> Result<()> {
        let counts = self.class_counts();
        for (class, &count) in counts.iter().enumerate() {
            if count == 0 {
                return Err(Error::MissingClass(class as u8));
            }
        }
        Ok(())
    }

    pub fn total_weight(&self) -> f64 {
        self.instances.iter().map(|i| i.weight).sum()
    }

    /// Checks that a value vector is aligned with this schema.
    pub fn check_instance(&self, values: &[f64]) -> Result<()> {
        check_values(&self.features, values)
    }

    /// New dataset holding the instances at `indices` (duplicates allowed).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.clone(),
            label_name: self.label_name.clone(),
            instances: indices.iter().map(|&i| self.instances[i].clone()).collect(),
        }
    }

    /// New dataset restricted to the features at `feature_indices`, in that order.
    pub fn project(&self, feature_indices: &[usize]) -> Dataset {
        Dataset {
            features: feature_indices.iter().map(|&j| self.features[j].clone()).collect(),
            label_name: self.label_name.clone(),
            instances: self
                .instances
                .iter()
                .map(|inst| Instance {
                    id: inst.id,
                    values: feature_indices.iter().map(|&j| inst.values[j]).collect(),
                    label: inst.label,
                    weight: inst.weight,
                })
                .collect(),
        }
    }

    pub fn with_weights(mut self, weights: &[f64]) -> Dataset {
        assert_eq!(weights.len(), self.instances.len());
        for (inst, &w) in self.instances.iter_mut().zip(weights) {
            inst.weight = w;
        }
        self
    }

    pub fn ids(&self) -> Vec<usize> {
        self.instances.iter().map(|i| i.id).collect()
    }
}

pub fn check_values(features: &[FeatureSpec], values: &[f64]) -> Result<()> {
    if values.len() != features.len() {
        return Err(Error::LengthMismatch {
            expected: features.len(),
            actual: values.len(),
        });
    }
    for (f, &v) in features.iter().zip(values) {
        match &f.kind {
            FeatureKind::Numeric if !v.is_finite() => {
                return Err(Error::SchemaMismatch {
                    feature: f.name.clone(),
                    message: format!("non-finite value {v}"),
                })
            }
            FeatureKind::Categorical(c) if !(v >= 0.0 && v.fract() == 0.0 && (v as usize) < c.len()) => {
                return Err(Error::SchemaMismatch {
                    feature: f.name.clone(),
                    message: format!("category index {v} out of range 0..{}", c.len()),
                })
            }
            _ => {}
        }
    }
    Ok(())
}

/// Rows parsed against a schema; the label is optional so unlabeled scoring input can share the parser.
pub struct ParsedRows {
    pub values: Vec<Vec<f64>>,
    pub labels: Vec<Option<u8>>,
}

pub fn parse_rows<R: Read>(reader: R, schema: &Schema, require_label: bool) -> Result<ParsedRows> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyDataset);
    }
    let position = |name: &str| headers.iter().position(|h| h == name);

    let mut columns = Vec::with_capacity(schema.features.len());
    for f in &schema.features {
        let col = position(&f.name).ok_or_else(|| Error::SchemaMismatch {
            feature: f.name.clone(),
            message: "column missing from CSV header".into(),
        })?;
        columns.push(col);
    }
    let label_col = position(&schema.label);
    if require_label && label_col.is_none() {
        return Err(Error::Schema(format!(
            "label column `{}` missing from CSV header",
            schema.label
        )));
    }

    let mut out = ParsedRows {
        values: Vec::new(),
        labels: Vec::new(),
    };
    for (row_idx, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based data row numbering, header excluded
        let row = row_idx + 1;
        let mut values = Vec::with_capacity(columns.len());
        for (f, &col) in schema.features.iter().zip(&columns) {
            let cell = record.get(col).unwrap_or("");
            let bad = |message: String| Error::Cell {
                row,
                column: f.name.clone(),
                message,
            };
            if cell.is_empty() {
                return Err(bad("missing value".into()));
            }
            let v = match &f.kind {
                FeatureKind::Numeric => {
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| bad(format!("cannot parse `{cell}` as a number")))?;
                    if !v.is_finite() {
                        return Err(bad(format!("non-finite value `{cell}`")));
                    }
                    v
                }
                FeatureKind::Categorical(cats) => cats
                    .iter()
                    .position(|c| c == cell)
                    .ok_or_else(|| bad(format!("unknown category `{cell}`")))?
                    as f64,
            };
            values.push(v);
        }
        let label = match label_col {
            Some(col) => {
                let cell = record.get(col).unwrap_or("");
                Some(match cell {
                    "0" => 0,
                    "1" => 1,
                    other => {
                        return Err(Error::Cell {
                            row,
                            column: schema.label.clone(),
                            message: format!("label `{other}` is not 0 or 1"),
                        })
                    }
                })
            }
            None => None,
        };
        out.values.push(values);
        out.labels.push(label);
    }
    Ok(out)
}

/// Reads a labeled dataset from CSV text against `schema`.
pub fn read_dataset<R: Read>(reader: R, schema: Schema) -> Result<Dataset> {
    let rows = parse_rows(reader, &schema, true)?;
    if rows.values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let instances = rows
        .values
        .into_iter()
        .zip(rows.labels)
        .enumerate()
        .map(|(id, (values, label))| Instance::new(id, values, label.expect("label required")))
        .collect();
    Dataset::new(schema, instances)
}

pub fn load_dataset(csv_path: impl AsRef<Path>, schema_path: impl AsRef<Path>) -> Result<Dataset> {
    let schema = Schema::load(schema_path)?;
    let csv_path = csv_path.as_ref();
    let file = File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    read_dataset(file, schema)
}

pub fn format_value(feature: &FeatureSpec, v: f64) -> String {
    match &feature.kind {
        FeatureKind::Numeric => format!("{v}"),
        FeatureKind::Categorical(c) => c[v as usize].clone(),
    }
}

pub fn write_dataset_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.features.iter().map(|f| f.name.as_str()).collect();
    header.push(&ds.label_name);
    w.write_record(&header)?;
    for inst in &ds.instances {
        let mut record: Vec<String> = ds
            .features
            .iter()
            .zip(&inst.values)
            .map(|(f, &v)| format_value(f, v))
            .collect();
        record.push(inst.label.to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_dataset(
    ds: &Dataset,
    csv_path: impl AsRef<Path>,
    schema_path: impl AsRef<Path>,
) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let schema_path = schema_path.as_ref();
    let file = File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
    write_dataset_csv(ds, file)?;
    std::fs::write(schema_path, ds.schema().to_json() + "\n").map_err(|e| Error::io(schema_path, e))
}

/// Rounds `total * weights[p] / sum(weights)` to integers summing to `total`.
/// Leftover units go to the largest fractional parts; ties favour the earlier part.
pub fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &p in order.iter().take(total.saturating_sub(assigned)) {
        counts[p] += 1;
    }
    counts
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train: f64, validation: f64, test: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            train_fraction: train,
            validation_fraction: validation,
            test_fraction: test,
            seed,
            stratified: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fr = [self.train_fraction, self.validation_fraction, self.test_fraction];
        if fr.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
            return Err(Error::param("split", "fractions must be positive"));
        }
        let sum: f64 = fr.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::param("split", format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.6,
            validation_fraction: 0.3,
            test_fraction: 0.1,
            seed: 0,
            stratified: true,
        }
    }
}

/// Partitions instance indices into parts sized by `fractions`.
///
/// When stratified, part sizes are rounded first and each class's share of
/// every part is then rounded with the same largest-remainder rule, so the
/// class counts of each part are within one instance of proportional.
pub fn partition_indices(
    labels: &[u8],
    fractions: &[f64],
    seed: u64,
    stratified: bool,
) -> Vec<Vec<usize>> {
    let n = labels.len();
    let sizes = largest_remainder(n, fractions);
    let mut rng = seed::rng(seed);
    let mut parts = vec![Vec::new(); fractions.len()];
    if stratified {
        let mut by_class: [Vec<usize>; N_CLASSES] = Default::default();
        for (i, &y) in labels.iter().enumerate() {
            by_class[y as usize].push(i);
        }
        for members in by_class.iter_mut() {
            members.shuffle(&mut rng);
        }
        let size_weights: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
        let class0 = if n == 0 {
            vec![0; sizes.len()]
        } else {
            largest_remainder(by_class[0].len(), &size_weights)
        };
        let (mut c0, mut c1) = (0, 0);
        for (p, part) in parts.iter_mut().enumerate() {
            let take0 = class0[p];
            let take1 = sizes[p] - take0;
            part.extend_from_slice(&by_class[0][c0..c0 + take0]);
            part.extend_from_slice(&by_class[1][c1..c1 + take1]);
            c0 += take0;
            c1 += take1;
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut start = 0;
        for (p, part) in parts.iter_mut().enumerate() {
            part.extend_from_slice(&order[start..start + sizes[p]]);
            start += sizes[p];
        }
    }
    for part in &mut parts {
        part.sort_unstable();
    }
    parts
}

pub fn split_train_val_test(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    spec.validate()?;
    let parts = partition_indices(
        &ds.labels(),
        &[spec.train_fraction, spec.validation_fraction, spec.test_fraction],
        spec.seed,
        spec.stratified,
    );
    for (name, part) in ["train", "validation", "test"].iter().zip(&parts) {
        if part.is_empty() {
            return Err(Error::param("split", format!("{name} part is empty for {} instances", ds.len())));
        }
    }
    let train = ds.subset(&parts[0]);
    if spec.stratified {
        train.require_both_classes()?;
    }
    Ok((train, ds.subset(&parts[1]), ds.subset(&parts[2])))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

pub fn make_folds(ds: &Dataset, k: usize, seed: u64, stratified: bool) -> Result<FoldAssignment> {
    make_folds_for_labels(&ds.labels(), k, seed, stratified)
}

/// Deals shuffled instances round-robin into `k` folds (class by class when
/// stratified), then relabels folds with a random permutation so the folds
/// receiving the remainder are not always the first ones.
pub fn make_folds_for_labels(labels: &[u8], k: usize, seed: u64, stratified: bool) -> Result<FoldAssignment> {
    let n = labels.len();
    if k < 2 {
        return Err(Error::param("k", "need at least 2 folds"));
    }
    if k > n {
        return Err(Error::param("k", format!("{k} folds exceed {n} instances")));
    }
    let mut rng = seed::rng(seed);
    let mut order: Vec<usize> = (0..n).collect();
    if stratified {
        let mut by_class: [Vec<usize>; N_CLASSES] = Default::default();
        for (i, &y) in labels.iter().enumerate() {
            by_class[y as usize].push(i);
        }
        order.clear();
        for members in by_class.iter_mut() {
            members.shuffle(&mut rng);
            order.extend_from_slice(members);
        }
    } else {
        order.shuffle(&mut rng);
    }
    let mut relabel: Vec<usize> = (0..k).collect();
    relabel.shuffle(&mut rng);
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = relabel[pos % k];
    }
    Ok(FoldAssignment { k, fold_of })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, positives: usize) -> Dataset {
        let schema = Schema::new("y", vec![FeatureSpec::numeric("x")]).unwrap();
        let instances = (0..n)
            .map(|i| Instance::new(i, vec![i as f64], u8::from(i < positives)))
            .collect();
        Dataset::new(schema, instances).unwrap()
    }

    #[test]
    fn largest_remainder_matches_exact_fractions() {
        assert_eq!(largest_remainder(100, &[0.6, 0.3, 0.1]), vec![60, 30, 10]);
        assert_eq!(largest_remainder(10, &[0.6, 0.3, 0.1]), vec![6, 3, 1]);
        assert_eq!(largest_remainder(11, &[0.6, 0.3, 0.1]).iter().sum::<usize>(), 11);
        // 1/3 each of 2: tie broken by part order
        assert_eq!(largest_remainder(2, &[1.0, 1.0, 1.0]), vec![1, 1, 0]);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = toy(100, 50);
        let spec = SplitSpec::new(0.6, 0.3, 0.1, 7).unwrap();
        let (a, b, c) = split_train_val_test(&ds, &spec).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (60, 30, 10));
        let again = split_train_val_test(&ds, &spec).unwrap();
        assert_eq!(a, again.0);
        assert_eq!(c, again.2);

        let small = toy(10, 5);
        let (a, b, c) = split_train_val_test(&small, &spec).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (6, 3, 1));
    }

    #[test]
    fn split_rejects_empty_parts_and_bad_fractions() {
        let ds = toy(4, 2);
        let spec = SplitSpec::default();
        assert!(split_train_val_test(&ds, &spec).is_err());
        assert!(SplitSpec::new(0.6, 0.3, 0.15, 0).is_err());
        let one_class = toy(20, 0);
        assert!(matches!(
            split_train_val_test(&one_class, &SplitSpec::default()),
            Err(Error::MissingClass(1))
        ));
    }

    #[test]
    fn folds_balance() {
        let f = make_folds(&toy(10, 5), 5, 1, false).unwrap();
        assert_eq!(f.sizes(), vec![2; 5]);
        let f = make_folds(&toy(11, 5), 5, 1, true).unwrap();
        let mut sizes = f.sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
        assert!(make_folds(&toy(3, 1), 5, 1, true).is_err());
        assert!(make_folds(&toy(3, 1), 1, 1, true).is_err());
    }

    #[test]
    fn stratified_folds_count_each_class() {
        let ds = toy(20, 10);
        let f = make_folds(&ds, 5, 3, true).unwrap();
        // brute-force count per fold and class
        for fold in 0..5 {
            let mut counts = [0; 2];
            for (i, inst) in ds.instances.iter().enumerate() {
                if f.fold_of[i] == fold {
                    counts[inst.label as usize] += 1;
                }
            }
            assert_eq!(counts, [2, 2], "fold {fold}");
        }
    }

    #[test]
    fn schema_rejects_bad_declarations() {
        assert!(Schema::from_json(r#"{"label":"y","features":[{"name":"a","kind":"numeric"},{"name":"a","kind":"numeric"}]}"#).is_err());
        assert!(Schema::from_json(r#"{"label":"y","features":[{"name":"a","kind":"categorical","categories":["x"]}]}"#).is_err());
        assert!(Schema::from_json(r#"{"label":"y","features":[{"name":"a","kind":"numeric","categories":["x","z"]}]}"#).is_err());
        assert!(Schema::from_json(r#"{"label":"y","features":[{"name":"a","kind":"ordinal"}]}"#).is_err());
    }

    #[test]
    fn csv_errors_carry_row_and_column() {
        let schema = Schema::new(
            "y",
            vec![FeatureSpec::numeric("x"), FeatureSpec::categorical("c", ["a", "b"])],
        )
        .unwrap();
        let err = read_dataset("x,c,y\n1,a,0\nfoo,b,1\n".as_bytes(), schema.clone()).unwrap_err();
        assert!(matches!(err, Error::Cell { row: 2, ref column, .. } if column == "x"), "{err}");
        let err = read_dataset("x,c,y\n1,q,0\n".as_bytes(), schema.clone()).unwrap_err();
        assert!(err.to_string().contains("unknown category"));
        let err = read_dataset("x,c,y\n1,,0\n".as_bytes(), schema.clone()).unwrap_err();
        assert!(err.to_string().contains("missing value"));
        let err = read_dataset("x,c\n1,a\n".as_bytes(), schema.clone()).unwrap_err();
        assert!(err.to_string().contains("label column"));
        let err = read_dataset("x,c,y\n".as_bytes(), schema.clone()).unwrap_err();
        assert_eq!(err.to_string(), "empty dataset");
        let err = read_dataset("".as_bytes(), schema).unwrap_err();
        assert_eq!(err.to_string(), "empty dataset");
    }
}
