//! Distance fusion and assessment: min-max normalisation, the integrated
//! distance, distance-based classifiers with precision/recall reporting,
//! the α sweep, linear discriminant analysis and k-fold cross-validation.

mod classify;
mod cv;
mod lda;
mod metrics;

use thiserror::Error;

use crate::symbolic::{DistanceMatrix, StyleLabel, SymbolicError};

pub use classify::{
    alpha_sweep, centroid_dispersion, coefficient_of_variation, knn_k, knn_unanimous,
    nearest_centroid_loo, parse_alpha_grid, AlphaSweep, AlphaSweepRow, Classification, KRule,
};
pub use cv::{k_fold_cv, ten_fold_cv, ConfusionCell, CvClassifier, CvResult};
pub use lda::{lda_classify, lda_fit, LdaModel};
pub use metrics::{
    Averages, ClassificationOutcome, ClassificationReport, OutcomeItem, StyleMetrics,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("matrices are not aligned: {0}")]
    IdMismatch(String),
    #[error("alpha {0} outside [0, 1]")]
    AlphaRange(f64),
    #[error("{labels} labels for {objects} objects")]
    LabelCount { labels: usize, objects: usize },
    #[error("style {0} has a single member; leave-one-out needs at least 2")]
    SingletonStyle(StyleLabel),
    #[error("k = {k} but only {available} other objects are available")]
    KTooLarge { k: usize, available: usize },
    #[error("class {0} is empty")]
    EmptyClass(StyleLabel),
    #[error("coefficient of variation undefined: {0}")]
    Dispersion(&'static str),
    #[error("need at least {needed} items, got {got}")]
    TooFewItems { needed: usize, got: usize },
    #[error("feature vectors have inconsistent dimensions")]
    Dimension,
    #[error("linear discriminant analysis needs at least 2 classes")]
    TooFewClasses,
    #[error("within-class scatter is degenerate even after regularisation")]
    DegenerateScatter,
    #[error("invalid alpha grid {0:?}: expected start:stop:step")]
    AlphaGrid(String),
    #[error(transparent)]
    Matrix(#[from] SymbolicError),
}

/// Min-max scales off-diagonal entries to `[0, 1]`. A matrix whose
/// off-diagonal entries are all equal maps to all zeros.
pub fn normalize_matrix(d: &DistanceMatrix) -> DistanceMatrix {
    let (lo, hi) = d
        .upper()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    DistanceMatrix::from_fn(d.ids().to_vec(), |i, j| {
        if span > 0.0 {
            ((d.get(i, j) - lo) / span).clamp(0.0, 1.0)
        } else {
            0.0
        }
    })
    .expect("scaled entries of a valid matrix are valid")
}

/// `(1 − α)·Dmc + α·Dmd`, entrywise.
pub fn integrate(
    dmc: &DistanceMatrix,
    dmd: &DistanceMatrix,
    alpha: f64,
) -> Result<DistanceMatrix, AnalysisError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(AnalysisError::AlphaRange(alpha));
    }
    if dmc.ids() != dmd.ids() {
        return Err(AnalysisError::IdMismatch(
            "contour and feature matrices list different ids or orders".into(),
        ));
    }
    Ok(DistanceMatrix::from_fn(dmc.ids().to_vec(), |i, j| {
        (1.0 - alpha) * dmc.get(i, j) + alpha * dmd.get(i, j)
    })?)
}
