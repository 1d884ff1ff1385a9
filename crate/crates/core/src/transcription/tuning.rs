use serde::Serialize;

use super::{hz_to_cents, FrameSeries, SegmentationConfig, TranscriptionError};

pub const MIN_VOICED_FRAMES: usize = 10;

/// Tuning reference of a melody.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TuningEstimate {
    pub tuning_hz: f64,
    /// Offset from 440 Hz in cents.
    pub offset_cents: f64,
    /// Weighted mean absolute distance to the nearest semitone, in cents.
    pub residual_cents: f64,
}

impl TuningEstimate {
    pub fn reference() -> Self {
        Self::from_hz(440.0, 0.0)
    }

    pub fn from_hz(tuning_hz: f64, residual_cents: f64) -> Self {
        Self {
            tuning_hz,
            offset_cents: hz_to_cents(tuning_hz) - 6900.0,
            residual_cents,
        }
    }

    pub(crate) fn from_offset(offset_cents: f64, residual_cents: f64) -> Self {
        Self {
            tuning_hz: 440.0 * (offset_cents / 1200.0).exp2(),
            offset_cents,
            residual_cents,
        }
    }
}

/// Signed distance from `cents` to the nearest multiple of 100.
pub(crate) fn semitone_deviation(cents: f64) -> f64 {
    cents - 100.0 * (cents / 100.0).round()
}

/// Weighted mean absolute semitone deviation of `cents` after removing
/// `offset`.
pub(crate) fn tuning_objective(cents: &[f64], weights: &[f64], offset: f64) -> f64 {
    let total: f64 = weights.iter().sum();
    cents
        .iter()
        .zip(weights)
        .map(|(c, w)| w * semitone_deviation(c - offset).abs())
        .sum::<f64>()
        / total
}

/// Minimises the weighted mean absolute deviation over offsets
/// −49, …, +50 cents (one full period of the objective). Equal objectives
/// keep the first candidate in ascending order.
pub fn estimate_tuning(
    fs: &FrameSeries,
    cfg: &SegmentationConfig,
) -> Result<TuningEstimate, TranscriptionError> {
    let frames = fs.frames();
    let voiced = fs.voiced_count();
    if voiced < MIN_VOICED_FRAMES {
        return Err(TranscriptionError::InsufficientVoiced {
            needed: MIN_VOICED_FRAMES,
            got: voiced,
        });
    }
    let cents: Vec<Option<f64>> = frames
        .iter()
        .map(|f| f.is_voiced().then(|| hz_to_cents(f.f0)))
        .collect();
    let mut c = Vec::with_capacity(voiced);
    let mut w = Vec::with_capacity(voiced);
    for (i, ci) in cents.iter().enumerate() {
        let Some(ci) = *ci else { continue };
        let prev = i.checked_sub(1).and_then(|p| cents[p]);
        let next = cents.get(i + 1).copied().flatten();
        let d1 = prev.map_or(0.0, |p| ci - p);
        let d2 = match (prev, next) {
            (Some(p), Some(n)) => n - 2.0 * ci + p,
            _ => 0.0,
        };
        c.push(ci);
        w.push(frames[i].energy * (-(d1.abs() + d2.abs()) / cfg.derivative_scale_cents).exp());
    }
    if !(w.iter().sum::<f64>() > 0.0) {
        // Energy is all zero; fall back to equal weights.
        w.iter_mut().for_each(|x| *x = 1.0);
    }
    let (best, residual) = (-49..=50)
        .map(|k| {
            let o = k as f64;
            (o, tuning_objective(&c, &w, o))
        })
        .fold(
            (0.0, f64::INFINITY),
            |acc, cur| if cur.1 < acc.1 { cur } else { acc },
        );
    Ok(TuningEstimate::from_offset(best, residual))
}
