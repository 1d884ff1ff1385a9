//! Reference f0 front end: normalised cross-correlation over a 23.2 ms
//! window at 60 frames per second.

use std::path::Path;

use rayon::prelude::*;

use super::{Frame, FrameSeries, TranscriptionError, F0_RANGE};
use crate::symbolic::FRAME_PERIOD;

pub const WINDOW_SEC: f64 = 0.0232;
/// Peak correlation below this marks the frame unvoiced.
pub const VOICING_THRESHOLD: f64 = 0.45;
/// The fundamental is the shortest-lag peak within this fraction of the
/// best peak, which avoids sub-octave picks.
const PEAK_FRACTION: f64 = 0.9;

/// Reads a mono RIFF WAVE file (integer or float samples) as `[-1, 1]`
/// floats plus the sample rate.
pub fn read_wav(path: impl AsRef<Path>) -> Result<(Vec<f64>, u32), TranscriptionError> {
    let path = path.as_ref();
    let err = |message: String| TranscriptionError::Wav {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = hound::WavReader::open(path).map_err(|e| err(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(err(format!(
            "expected mono audio, found {} channels",
            spec.channels
        )));
    }
    let samples = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<Vec<_>, _>>(),
        hound::SampleFormat::Int => {
            let scale = (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<Vec<_>, _>>()
        }
    }
    .map_err(|e| err(e.to_string()))?;
    Ok((samples, spec.sample_rate))
}

pub fn estimate_f0(samples: &[f64], sample_rate: u32) -> Result<FrameSeries, TranscriptionError> {
    if sample_rate < 8000 {
        return Err(TranscriptionError::SampleRate(sample_rate));
    }
    let sr = sample_rate as f64;
    let window = (WINDOW_SEC * sr).round() as usize;
    if samples.len() < window || window == 0 {
        return Err(TranscriptionError::EmptySignal);
    }
    let hop = sr * FRAME_PERIOD;
    let count = ((samples.len() - window) as f64 / hop).floor() as usize + 1;
    let min_lag = (sr / F0_RANGE.1).floor().max(2.0) as usize;
    let max_lag = (sr / F0_RANGE.0).ceil() as usize;

    let frames: Vec<Frame> = (0..count)
        .into_par_iter()
        .map(|i| {
            let start = (i as f64 * hop).round() as usize;
            let x = &samples[start..start + window];
            let energy = (x.iter().map(|v| v * v).sum::<f64>() / window as f64).sqrt();
            let f0 = frame_f0(samples, start, window, min_lag, max_lag, sr);
            Frame {
                time: i as f64 * FRAME_PERIOD,
                f0,
                energy,
            }
        })
        .collect();
    FrameSeries::new(frames, FRAME_PERIOD)
}

fn frame_f0(
    s: &[f64],
    start: usize,
    window: usize,
    min_lag: usize,
    max_lag: usize,
    sr: f64,
) -> f64 {
    let available = s.len() - start - window;
    let max_lag = max_lag.min(available);
    if max_lag < min_lag + 2 {
        return 0.0;
    }
    let x = &s[start..start + window];
    let e0: f64 = x.iter().map(|v| v * v).sum();
    if e0 <= 1e-12 {
        return 0.0;
    }
    // Energy of the lagged window, updated incrementally.
    let mut e_lag: f64 = s[start + min_lag - 1..start + min_lag - 1 + window]
        .iter()
        .map(|v| v * v)
        .sum();
    let mut r = vec![0.0; max_lag + 2];
    for lag in (min_lag - 1)..=(max_lag + 1).min(available) {
        if lag >= min_lag {
            let out = s[start + lag - 1];
            let inp = s[start + lag - 1 + window];
            e_lag += inp * inp - out * out;
        }
        let y = &s[start + lag..start + lag + window];
        let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let den = (e0 * e_lag.max(0.0)).sqrt();
        r[lag] = if den > 0.0 { dot / den } else { 0.0 };
    }
    let peaks: Vec<usize> = (min_lag..=max_lag)
        .filter(|&l| r[l] >= r[l - 1] && r[l] > r[l + 1])
        .collect();
    let Some(best) = peaks.iter().map(|&l| r[l]).reduce(f64::max) else {
        return 0.0;
    };
    if best < VOICING_THRESHOLD {
        return 0.0;
    }
    let lag = peaks
        .into_iter()
        .find(|&l| r[l] >= PEAK_FRACTION * best)
        .expect("best peak qualifies");
    let (a, b, c) = (r[lag - 1], r[lag], r[lag + 1]);
    let den = a - 2.0 * b + c;
    let shift = if den.abs() > 1e-12 {
        0.5 * (a - c) / den
    } else {
        0.0
    };
    let f0 = sr / (lag as f64 + shift.clamp(-0.5, 0.5));
    if (F0_RANGE.0..=F0_RANGE.1).contains(&f0) {
        f0
    } else {
        0.0
    }
}
