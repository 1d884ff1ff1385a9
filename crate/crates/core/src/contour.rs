//! Melodic-contour similarity between interval sequences.
//!
//! Two components are combined with fixed regression weights: a rhythmically
//! weighted edit distance over interval symbols (`rawedw`) and a distinct
//! n-gram coordinate-matching count (`ngrcoord`). The combined similarity is
//! turned into a dissimilarity in `[0, 1]` by an affine map.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::symbolic::{DistanceMatrix, IntervalSequence, Melody, SymbolicError};

pub const WEIGHT_RAWEDW: f64 = 3.355;
pub const WEIGHT_NGRCOORD: f64 = 2.852;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourConfig {
    pub ngram_n: usize,
    /// Grid cell in seconds; each interval is repeated once per cell its
    /// arrival note lasts.
    pub grid_quantum: f64,
    pub weight_rawedw: f64,
    pub weight_ngrcoord: f64,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self {
            ngram_n: 3,
            grid_quantum: 0.1,
            weight_rawedw: WEIGHT_RAWEDW,
            weight_ngrcoord: WEIGHT_NGRCOORD,
        }
    }
}

impl ContourConfig {
    pub fn max_similarity(&self) -> f64 {
        self.weight_rawedw + self.weight_ngrcoord
    }
}

/// Expands each interval into `round(weight / quantum)` copies (at least one).
pub fn rhythm_weighted(seq: &IntervalSequence, quantum: f64) -> Vec<i32> {
    seq.steps()
        .iter()
        .zip(seq.weights())
        .flat_map(|(&s, &w)| {
            let copies = (w / quantum).round().max(1.0) as usize;
            std::iter::repeat_n(s, copies)
        })
        .collect()
}

/// Unit-cost Levenshtein distance, two-row dynamic programme.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rawedw(a: &IntervalSequence, b: &IntervalSequence, cfg: &ContourConfig) -> f64 {
    let a = rhythm_weighted(a, cfg.grid_quantum);
    let b = rhythm_weighted(b, cfg.grid_quantum);
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&a, &b) as f64 / longest as f64
}

pub fn distinct_ngrams(steps: &[i32], n: usize) -> HashSet<&[i32]> {
    if n == 0 {
        return HashSet::new();
    }
    steps.windows(n).collect()
}

pub fn ngrcoord(a: &IntervalSequence, b: &IntervalSequence, cfg: &ContourConfig) -> f64 {
    let sa = distinct_ngrams(a.steps(), cfg.ngram_n);
    let sb = distinct_ngrams(b.steps(), cfg.ngram_n);
    let largest = sa.len().max(sb.len());
    if largest == 0 {
        // Both shorter than n: fall back to exact sequence equality.
        return if a.steps() == b.steps() { 1.0 } else { 0.0 };
    }
    sa.intersection(&sb).count() as f64 / largest as f64
}

pub fn sigma_best(a: &IntervalSequence, b: &IntervalSequence, cfg: &ContourConfig) -> f64 {
    cfg.weight_rawedw * rawedw(a, b, cfg) + cfg.weight_ngrcoord * ngrcoord(a, b, cfg)
}

pub fn d_mc(a: &IntervalSequence, b: &IntervalSequence, cfg: &ContourConfig) -> f64 {
    (1.0 - sigma_best(a, b, cfg) / cfg.max_similarity()).clamp(0.0, 1.0)
}

pub fn melody_distance(a: &Melody, b: &Melody, cfg: &ContourConfig) -> Result<f64, SymbolicError> {
    Ok(d_mc(&a.to_intervals()?, &b.to_intervals()?, cfg))
}

/// Pairwise contour distances, computed in parallel over the upper triangle.
pub fn build_mc_matrix(
    corpus: &[Melody],
    cfg: &ContourConfig,
) -> Result<DistanceMatrix, SymbolicError> {
    if corpus.len() < 2 {
        return Err(SymbolicError::InvalidMatrix(format!(
            "need at least 2 melodies, got {}",
            corpus.len()
        )));
    }
    let intervals = corpus
        .iter()
        .map(|m| {
            m.to_intervals().map_err(|e| match e {
                SymbolicError::EmptyMelody => {
                    SymbolicError::InvalidMatrix(format!("melody {:?} has no notes", m.id()))
                }
                other => other,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n = corpus.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let upper: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| d_mc(&intervals[i], &intervals[j], cfg))
        .collect();
    let ids = corpus.iter().map(|m| m.id().to_string()).collect();
    DistanceMatrix::from_upper(ids, &upper)
}
