//! Per-instance error measures.

use crate::classifiers::Classifier;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Mean complement of the posterior assigned to the true class,
/// `(1/N) * sum(1 - p(y_i | x_i))`.
///
/// Models built from frequency counts already smooth their posteriors
/// (Laplace leaves, Dirichlet tables), so no extra prior is applied here.
pub fn smoothed_error(model: &impl Classifier, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for inst in &test.instances {
        total += 1.0 - model.predict_proba(&inst.values)?.p(inst.label);
    }
    Ok(total / test.len() as f64)
}

/// Fraction of misclassified instances.
pub fn zero_one_error(model: &impl Classifier, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut wrong = 0usize;
    for inst in &test.instances {
        if model.predict_class(&inst.values)? != inst.label {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / test.len() as f64)
}

/// Both measures in one pass.
pub fn error_pair(model: &impl Classifier, test: &Dataset) -> Result<(f64, f64)> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (mut smooth, mut wrong) = (0.0, 0usize);
    for inst in &test.instances {
        smooth += 1.0 - model.predict_proba(&inst.values)?.p(inst.label);
        if model.predict_class(&inst.values)? != inst.label {
            wrong += 1;
        }
    }
    let n = test.len() as f64;
    Ok((smooth / n, wrong as f64 / n))
}
