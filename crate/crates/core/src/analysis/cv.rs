use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::lda::{lda_classify, lda_fit};
use super::AnalysisError;
use crate::symbolic::StyleLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CvClassifier {
    Lda,
    /// Majority vote among the `k` nearest training vectors (Euclidean).
    Knn {
        k: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionCell {
    pub truth: StyleLabel,
    pub predicted: StyleLabel,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub folds: usize,
    pub seed: u64,
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Fold index of each item, in input order.
    pub fold_of: Vec<usize>,
    /// Held-out prediction for each item, in input order.
    pub predictions: Vec<StyleLabel>,
    /// Non-zero (truth, predicted) pairs, sorted by style order.
    pub confusion: Vec<ConfusionCell>,
}

pub fn ten_fold_cv(
    features: &[Vec<f64>],
    labels: &[StyleLabel],
    classifier: CvClassifier,
    seed: u64,
) -> Result<CvResult, AnalysisError> {
    k_fold_cv(features, labels, classifier, 10, seed)
}

/// Random (unstratified) k-fold cross-validation. Items are shuffled with
/// a ChaCha8 stream seeded by `seed` and dealt round-robin into folds.
pub fn k_fold_cv(
    features: &[Vec<f64>],
    labels: &[StyleLabel],
    classifier: CvClassifier,
    folds: usize,
    seed: u64,
) -> Result<CvResult, AnalysisError> {
    let n = features.len();
    if labels.len() != n {
        return Err(AnalysisError::LabelCount {
            labels: labels.len(),
            objects: n,
        });
    }
    if folds < 2 || n < folds {
        return Err(AnalysisError::TooFewItems {
            needed: folds.max(2),
            got: n,
        });
    }
    let dim = features[0].len();
    if dim == 0 || features.iter().any(|f| f.len() != dim) {
        return Err(AnalysisError::Dimension);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }

    let per_fold = (0..folds)
        .into_par_iter()
        .map(|f| {
            let (train, test): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold_of[i] != f);
            let tx: Vec<Vec<f64>> = train.iter().map(|&i| features[i].clone()).collect();
            let ty: Vec<StyleLabel> = train.iter().map(|&i| labels[i].clone()).collect();
            let predict = fold_predictor(&tx, &ty, classifier)?;
            test.into_iter()
                .map(|i| Ok((i, predict(&features[i])?)))
                .collect::<Result<Vec<_>, AnalysisError>>()
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;

    let mut predictions = vec![None; n];
    for (i, p) in per_fold.into_iter().flatten() {
        predictions[i] = Some(p);
    }
    let predictions: Vec<StyleLabel> = predictions
        .into_iter()
        .map(|p| p.expect("every item is tested once"))
        .collect();

    let mut cells: BTreeMap<(StyleLabel, StyleLabel), usize> = BTreeMap::new();
    for (t, p) in labels.iter().zip(&predictions) {
        *cells.entry((t.clone(), p.clone())).or_default() += 1;
    }
    let correct = labels
        .iter()
        .zip(&predictions)
        .filter(|(t, p)| t == p)
        .count();
    Ok(CvResult {
        folds,
        seed,
        total: n,
        correct,
        accuracy: correct as f64 / n as f64,
        fold_of,
        predictions,
        confusion: cells
            .into_iter()
            .map(|((truth, predicted), count)| ConfusionCell {
                truth,
                predicted,
                count,
            })
            .collect(),
    })
}

type Predictor<'a> = Box<dyn Fn(&[f64]) -> Result<StyleLabel, AnalysisError> + 'a>;

fn fold_predictor<'a>(
    x: &'a [Vec<f64>],
    y: &'a [StyleLabel],
    classifier: CvClassifier,
) -> Result<Predictor<'a>, AnalysisError> {
    let first = y[0].clone();
    if y.iter().all(|s| *s == first) {
        return Ok(Box::new(move |_| Ok(first.clone())));
    }
    match classifier {
        CvClassifier::Lda => {
            let model = lda_fit(x, y)?;
            Ok(Box::new(move |q| lda_classify(&model, q)))
        }
        CvClassifier::Knn { k } => {
            if k == 0 || k > x.len() {
                return Err(AnalysisError::KTooLarge {
                    k,
                    available: x.len(),
                });
            }
            Ok(Box::new(move |q| Ok(knn_majority(x, y, q, k))))
        }
    }
}

/// Vote ties go to the tied style whose member is nearest.
fn knn_majority(x: &[Vec<f64>], y: &[StyleLabel], q: &[f64], k: usize) -> StyleLabel {
    let d = |v: &Vec<f64>| v.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| d(&x[a]).total_cmp(&d(&x[b])).then(a.cmp(&b)));
    let mut votes: BTreeMap<&StyleLabel, usize> = BTreeMap::new();
    for &i in &idx[..k] {
        *votes.entry(&y[i]).or_default() += 1;
    }
    let top = *votes.values().max().expect("k >= 1");
    idx[..k]
        .iter()
        .map(|&i| &y[i])
        .find(|s| votes[s] == top)
        .expect("a top-voted style is among the neighbours")
        .clone()
}
