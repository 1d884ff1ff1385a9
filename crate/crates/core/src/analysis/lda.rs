use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::AnalysisError;
use crate::symbolic::StyleLabel;

const TIE_TOLERANCE: f64 = 1e-9;

/// A fitted linear discriminant model.
///
/// Directions are scaled so that `wᵀ(S_w + λI)w = 1`; distances in the
/// projected space are then Mahalanobis-like and do not depend on the units
/// of the input features.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdaModel {
    pub classes: Vec<StyleLabel>,
    pub priors: Vec<f64>,
    /// `dim × directions`, one discriminant direction per column.
    #[serde(skip)]
    pub projection: DMatrix<f64>,
    /// Eigenvalue of each direction, descending.
    pub eigenvalues: Vec<f64>,
    /// Class means in discriminant space, indexed like `classes`.
    pub projected_means: Vec<Vec<f64>>,
    pub lambda: f64,
}

impl LdaModel {
    pub fn dimension(&self) -> usize {
        self.projection.nrows()
    }

    pub fn directions(&self) -> usize {
        self.projection.ncols()
    }

    pub fn direction(&self, k: usize) -> Vec<f64> {
        self.projection.column(k).iter().copied().collect()
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(x);
        (self.projection.transpose() * v).iter().copied().collect()
    }
}

fn check_dims(features: &[Vec<f64>]) -> Result<usize, AnalysisError> {
    let dim = features.first().map_or(0, Vec::len);
    if dim == 0 || features.iter().any(|f| f.len() != dim) {
        return Err(AnalysisError::Dimension);
    }
    Ok(dim)
}

pub fn lda_fit(features: &[Vec<f64>], labels: &[StyleLabel]) -> Result<LdaModel, AnalysisError> {
    if features.len() != labels.len() {
        return Err(AnalysisError::LabelCount {
            labels: labels.len(),
            objects: features.len(),
        });
    }
    let dim = check_dims(features)?;
    let mut groups: BTreeMap<&StyleLabel, Vec<usize>> = BTreeMap::new();
    for (i, s) in labels.iter().enumerate() {
        groups.entry(s).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(AnalysisError::TooFewClasses);
    }

    let rows: Vec<DVector<f64>> = features
        .iter()
        .map(|f| DVector::from_column_slice(f))
        .collect();
    let n = rows.len() as f64;
    let overall = rows.iter().fold(DVector::zeros(dim), |a, x| a + x) / n;

    let mut sw = DMatrix::<f64>::zeros(dim, dim);
    let mut sb = DMatrix::<f64>::zeros(dim, dim);
    let mut means = Vec::with_capacity(groups.len());
    for idx in groups.values() {
        let m = idx.iter().fold(DVector::zeros(dim), |a, &i| a + &rows[i]) / idx.len() as f64;
        for &i in idx {
            let d = &rows[i] - &m;
            sw += &d * d.transpose();
        }
        let d = &m - &overall;
        sb += (&d * d.transpose()) * idx.len() as f64;
        means.push(m);
    }

    let mut lambda = 1e-6 * sw.trace() / dim as f64;
    if !(lambda > 0.0) {
        // No within-class spread at all; fall back to a unit-scale ridge.
        lambda = 1e-6;
    }
    let a = &sw + DMatrix::identity(dim, dim) * lambda;
    let chol = a.cholesky().ok_or(AnalysisError::DegenerateScatter)?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or(AnalysisError::DegenerateScatter)?;
    let m = &l_inv * &sb * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = m.symmetric_eigen();

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let r = (groups.len() - 1).min(dim);
    let lt_inv = l_inv.transpose();
    let mut projection = DMatrix::<f64>::zeros(dim, r);
    let mut eigenvalues = Vec::with_capacity(r);
    for (k, &e) in order.iter().take(r).enumerate() {
        let mut w = &lt_inv * eig.eigenvectors.column(e);
        // Fix the sign so the first class mean projects to the positive side.
        if w.dot(&(&means[0] - &overall)) < 0.0 {
            w = -w;
        }
        projection.set_column(k, &w);
        eigenvalues.push(eig.eigenvalues[e].max(0.0));
    }

    let projected_means = means
        .iter()
        .map(|m| (projection.transpose() * m).iter().copied().collect())
        .collect();
    Ok(LdaModel {
        classes: groups.keys().map(|s| (*s).clone()).collect(),
        priors: groups.values().map(|v| v.len() as f64 / n).collect(),
        projection,
        eigenvalues,
        projected_means,
        lambda,
    })
}

/// Nearest projected class mean. Near-ties go to the larger prior, then to
/// the earlier style.
pub fn lda_classify(model: &LdaModel, x: &[f64]) -> Result<StyleLabel, AnalysisError> {
    if x.len() != model.dimension() {
        return Err(AnalysisError::Dimension);
    }
    let p = model.project(x);
    let dist: Vec<f64> = model
        .projected_means
        .iter()
        .map(|m| m.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
        .collect();
    let mut best = 0;
    for c in 1..dist.len() {
        let closer = dist[c] < dist[best] - TIE_TOLERANCE;
        let tied = (dist[c] - dist[best]).abs() <= TIE_TOLERANCE;
        if closer || (tied && model.priors[c] > model.priors[best]) {
            best = c;
        }
    }
    Ok(model.classes[best].clone())
}
