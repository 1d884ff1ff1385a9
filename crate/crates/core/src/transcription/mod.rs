//! Frame-level pitch/energy to symbolic notes.
//!
//! The pipeline is [`estimate_tuning`] → [`segment_notes`] →
//! [`consolidate_and_refine`] → [`postprocess_short_notes`], composed by
//! [`transcribe`]. [`estimate_f0`] is a reference front end for raw PCM; the
//! usual input is an external frames CSV.

mod f0;
mod refine;
mod segment;
mod tuning;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::symbolic::{Melody, SymbolicError, FRAME_PERIOD};

pub use f0::{estimate_f0, read_wav, VOICING_THRESHOLD, WINDOW_SEC};
pub use refine::{consolidate_and_refine, postprocess_short_notes, Consolidation};
pub use segment::{
    segment_notes, segment_notes_scored, voiced_regions, RegionScorer, SegmentationResult,
};
pub use tuning::{estimate_tuning, TuningEstimate, MIN_VOICED_FRAMES};

pub const FRAMES_HEADER: &str = "time_sec,f0_hz,energy";
pub const F0_RANGE: (f64, f64) = (50.0, 2000.0);
/// Allowed jitter on frame spacing.
const SPACING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TranscriptionError {
    #[error("cannot read {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("frame {index}: {reason}")]
    InvalidFrame { index: usize, reason: String },
    #[error("need at least {needed} voiced frames, got {got}")]
    InsufficientVoiced { needed: usize, got: usize },
    #[error("invalid segmentation config: {0}")]
    InvalidConfig(String),
    #[error("signal is empty or shorter than one analysis window")]
    EmptySignal,
    #[error("sample rate {0} Hz is below 8000 Hz")]
    SampleRate(u32),
    #[error("{path}: {message}")]
    Wav { path: PathBuf, message: String },
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frame {
    pub time: f64,
    /// 0 means unvoiced.
    pub f0: f64,
    pub energy: f64,
}

impl Frame {
    pub fn is_voiced(&self) -> bool {
        self.f0 > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSeries {
    frames: Vec<Frame>,
    frame_period: f64,
}

impl FrameSeries {
    pub fn new(frames: Vec<Frame>, frame_period: f64) -> Result<Self, TranscriptionError> {
        if !(frame_period > 0.0 && frame_period.is_finite()) {
            return Err(TranscriptionError::InvalidFrame {
                index: 0,
                reason: format!("frame period {frame_period} must be positive"),
            });
        }
        for (i, f) in frames.iter().enumerate() {
            let bad = |reason: String| TranscriptionError::InvalidFrame { index: i, reason };
            if !f.time.is_finite() || f.time < 0.0 {
                return Err(bad(format!(
                    "time {} must be finite and non-negative",
                    f.time
                )));
            }
            if !(f.f0 == 0.0 || (F0_RANGE.0..=F0_RANGE.1).contains(&f.f0)) {
                return Err(bad(format!(
                    "f0 {} Hz is neither 0 nor in [50, 2000]",
                    f.f0
                )));
            }
            if !(f.energy >= 0.0 && f.energy.is_finite()) {
                return Err(bad(format!(
                    "energy {} must be finite and non-negative",
                    f.energy
                )));
            }
            if i > 0 {
                let step = f.time - frames[i - 1].time;
                if (step - frame_period).abs() > SPACING_TOLERANCE {
                    return Err(bad(format!(
                        "spacing {step} differs from frame period {frame_period}"
                    )));
                }
            }
        }
        Ok(Self {
            frames,
            frame_period,
        })
    }

    /// Frames at `start + i·period`.
    pub fn from_tracks(
        start: f64,
        frame_period: f64,
        f0: &[f64],
        energy: &[f64],
    ) -> Result<Self, TranscriptionError> {
        assert_eq!(f0.len(), energy.len(), "one energy value per f0 value");
        let frames = f0
            .iter()
            .zip(energy)
            .enumerate()
            .map(|(i, (&f0, &energy))| Frame {
                time: start + i as f64 * frame_period,
                f0,
                energy,
            })
            .collect();
        Self::new(frames, frame_period)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame_period(&self) -> f64 {
        self.frame_period
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn voiced_count(&self) -> usize {
        self.frames.iter().filter(|f| f.is_voiced()).count()
    }

    pub fn voiced_duration(&self) -> f64 {
        self.voiced_count() as f64 * self.frame_period
    }

    /// Index of the frame starting at `time` (nearest).
    pub(crate) fn index_at(&self, time: f64) -> usize {
        let t0 = self.frames.first().map_or(0.0, |f| f.time);
        (((time - t0) / self.frame_period).round().max(0.0) as usize).min(self.frames.len())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{FRAMES_HEADER}")?;
        for f in &self.frames {
            writeln!(out, "{:?},{:?},{:?}", f.time, f.f0, f.energy)?;
        }
        Ok(())
    }
}

/// Absolute pitch in cents on the MIDI scale (A4 = 440 Hz = 6900).
pub fn hz_to_cents(f: f64) -> f64 {
    6900.0 + 1200.0 * (f / 440.0).log2()
}

pub fn cents_to_hz(c: f64) -> f64 {
    440.0 * ((c - 6900.0) / 1200.0).exp2()
}

pub fn load_frames(path: impl AsRef<Path>) -> Result<FrameSeries, TranscriptionError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| TranscriptionError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_frames(&text, path)
}

/// Parses a frames CSV. The frame period is taken from the first two rows
/// (1/60 s for shorter files) and must then hold for the whole file.
pub fn parse_frames(text: &str, origin: &Path) -> Result<FrameSeries, TranscriptionError> {
    let perr = |line: usize, message: String| TranscriptionError::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == FRAMES_HEADER => {}
        Some((_, h)) => {
            return Err(perr(
                1,
                format!("expected header {FRAMES_HEADER:?}, found {h:?}"),
            ))
        }
        None => return Err(perr(1, "empty file".into())),
    }
    let mut frames = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 3 {
            return Err(perr(
                line_no,
                format!("expected 3 columns, found {}", cells.len()),
            ));
        }
        let num = |k: usize, name: &str| {
            cells[k]
                .parse::<f64>()
                .map_err(|e| perr(line_no, format!("{name}: {e}")))
        };
        frames.push(Frame {
            time: num(0, "time_sec")?,
            f0: num(1, "f0_hz")?,
            energy: num(2, "energy")?,
        });
    }
    let period = match frames.as_slice() {
        [a, b, ..] => b.time - a.time,
        _ => FRAME_PERIOD,
    };
    FrameSeries::new(frames, period).map_err(|e| match e {
        TranscriptionError::InvalidFrame { index, reason } => perr(index + 2, reason),
        other => other,
    })
}

/// Knobs for the transcription stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentationConfig {
    pub w_pitch: f64,
    pub w_energy: f64,
    pub w_duration: f64,
    pub min_note: f64,
    pub max_note: f64,
    pub short_note_threshold: f64,
    pub soft_transition_cents: f64,
    /// Scale `s` of the tuning weight `energy·exp(−(|Δ|+|Δ²|)/s)`, in cents.
    pub derivative_scale_cents: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            w_pitch: 0.5,
            w_energy: 0.3,
            w_duration: 0.2,
            min_note: 0.05,
            max_note: 2.0,
            short_note_threshold: 0.1,
            soft_transition_cents: 60.0,
            derivative_scale_cents: 50.0,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self, frame_period: f64) -> Result<(), TranscriptionError> {
        let bad = |m: String| Err(TranscriptionError::InvalidConfig(m));
        let w = [self.w_pitch, self.w_energy, self.w_duration];
        if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return bad("weights must be finite and non-negative".into());
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("weights sum to {}, not 1", w.iter().sum::<f64>()));
        }
        if !(self.min_note >= 2.0 * frame_period - 1e-12) {
            return bad(format!(
                "min_note {} is shorter than two frames ({})",
                self.min_note,
                2.0 * frame_period
            ));
        }
        if !(self.max_note > self.min_note) || !self.max_note.is_finite() {
            return bad("max_note must exceed min_note".into());
        }
        if !(self.short_note_threshold >= 0.0) || !(self.soft_transition_cents >= 0.0) {
            return bad("thresholds must be non-negative".into());
        }
        if !(self.derivative_scale_cents > 0.0) {
            return bad("derivative scale must be positive".into());
        }
        Ok(())
    }
}

/// A transcription with the diagnostics the pipeline logs.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcription {
    pub melody: Melody,
    pub tuning: TuningEstimate,
    pub merges: usize,
    pub passes: usize,
}

/// Full pipeline. A series with no voiced frames gives an empty melody at
/// 440 Hz; one with too few voiced frames to estimate tuning is an error.
pub fn transcribe(
    fs: &FrameSeries,
    cfg: &SegmentationConfig,
) -> Result<Transcription, TranscriptionError> {
    cfg.validate(fs.frame_period())?;
    if fs.voiced_count() == 0 {
        return Ok(Transcription {
            melody: Melody::empty("", 440.0),
            tuning: TuningEstimate::reference(),
            merges: 0,
            passes: 0,
        });
    }
    let tuning = estimate_tuning(fs, cfg)?;
    let segmented = segment_notes(fs, &tuning, cfg)?;
    let c = consolidate_and_refine(&segmented, fs, cfg)?;
    let melody = postprocess_short_notes(&c.melody, cfg)?;
    Ok(Transcription {
        tuning: TuningEstimate::from_hz(melody.tuning_hz(), c.residual_cents),
        melody,
        merges: c.merges,
        passes: c.passes,
    })
}
