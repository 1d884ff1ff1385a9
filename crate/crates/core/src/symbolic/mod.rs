//! Symbolic data model: notes, melodies, interval sequences, style labels,
//! the corpus manifest and labelled distance matrices.

mod manifest;
mod matrix;
mod notes;

use std::cmp::Ordering;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use manifest::{load_manifest, parse_manifest, CorpusManifest, ManifestEntry};
pub use matrix::DistanceMatrix;
pub use notes::{load_notes, parse_notes, write_notes, NOTES_HEADER};

/// Analysis grid period in seconds (60 frames per second).
pub const FRAME_PERIOD: f64 = 1.0 / 60.0;

/// Lowest and highest admissible MIDI pitch for a sung note.
pub const PITCH_RANGE: (i32, i32) = (36, 96);

#[derive(Debug, Error)]
pub enum SymbolicError {
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
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("unknown style {0:?} (expected debla, martinete1 or martinete2)")]
    UnknownStyle(String),
    #[error("entry {id:?} references missing file {path}")]
    MissingFile { id: String, path: PathBuf },
    #[error("entry {0:?} has neither a frames nor a notes file")]
    NoInput(String),
    #[error("note {index}: {reason}")]
    InvalidNote { index: usize, reason: String },
    #[error("notes {index} and {next} overlap by {overlap:.6} s")]
    Overlap {
        index: usize,
        next: usize,
        overlap: f64,
    },
    #[error("tuning frequency must be positive and finite, got {0}")]
    InvalidTuning(f64),
    #[error("melody has no notes")]
    EmptyMelody,
    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),
}

/// A single transcribed note. `pitch` is a MIDI-style semitone index
/// relative to the owning melody's tuning frequency (69 sounds at the tuning).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoteEvent {
    pub onset: f64,
    pub duration: f64,
    pub pitch: i32,
    pub energy: Option<f64>,
}

impl NoteEvent {
    pub fn new(onset: f64, duration: f64, pitch: i32) -> Self {
        Self {
            onset,
            duration,
            pitch,
            energy: None,
        }
    }

    pub fn end(&self) -> f64 {
        self.onset + self.duration
    }

    fn check(&self, index: usize) -> Result<(), SymbolicError> {
        let bad = |reason: String| Err(SymbolicError::InvalidNote { index, reason });
        if !self.onset.is_finite() || self.onset < 0.0 {
            return bad(format!("onset {} must be finite and >= 0", self.onset));
        }
        if !self.duration.is_finite() || self.duration <= 0.0 {
            return bad(format!("duration {} must be finite and > 0", self.duration));
        }
        if self.pitch < PITCH_RANGE.0 || self.pitch > PITCH_RANGE.1 {
            return bad(format!(
                "pitch {} outside [{}, {}]",
                self.pitch, PITCH_RANGE.0, PITCH_RANGE.1
            ));
        }
        if let Some(e) = self.energy {
            if !e.is_finite() || e < 0.0 {
                return bad(format!("energy {e} must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// An ordered, non-overlapping monophonic note sequence at a fixed tuning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Melody {
    id: String,
    tuning_hz: f64,
    notes: Vec<NoteEvent>,
}

impl Melody {
    /// Validates note order, overlap (tolerance of one frame period) and ranges.
    pub fn new(
        id: impl Into<String>,
        tuning_hz: f64,
        notes: Vec<NoteEvent>,
    ) -> Result<Self, SymbolicError> {
        if !tuning_hz.is_finite() || tuning_hz <= 0.0 {
            return Err(SymbolicError::InvalidTuning(tuning_hz));
        }
        for (i, n) in notes.iter().enumerate() {
            n.check(i)?;
        }
        for (i, pair) in notes.windows(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            if b.onset <= a.onset {
                return Err(SymbolicError::InvalidNote {
                    index: i + 1,
                    reason: format!(
                        "onset {} does not follow previous onset {}",
                        b.onset, a.onset
                    ),
                });
            }
            let overlap = a.end() - b.onset;
            if overlap > FRAME_PERIOD {
                return Err(SymbolicError::Overlap {
                    index: i,
                    next: i + 1,
                    overlap,
                });
            }
        }
        Ok(Self {
            id: id.into(),
            tuning_hz,
            notes,
        })
    }

    pub fn empty(id: impl Into<String>, tuning_hz: f64) -> Self {
        Self {
            id: id.into(),
            tuning_hz,
            notes: Vec::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tuning_hz(&self) -> f64 {
        self.tuning_hz
    }

    pub fn notes(&self) -> &[NoteEvent] {
        &self.notes
    }

    pub fn len(&self) -> usize {
        self.notes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Shift every pitch by `semitones`. Fails if a note leaves the pitch range.
    pub fn transposed(&self, semitones: i32) -> Result<Self, SymbolicError> {
        let notes = self
            .notes
            .iter()
            .map(|n| NoteEvent {
                pitch: n.pitch + semitones,
                ..*n
            })
            .collect();
        Self::new(self.id.clone(), self.tuning_hz, notes)
    }

    pub fn total_duration(&self) -> f64 {
        self.notes.iter().map(|n| n.duration).sum()
    }

    pub fn to_intervals(&self) -> Result<IntervalSequence, SymbolicError> {
        to_intervals(self)
    }
}

/// Pitch steps between consecutive notes, each weighted by the duration of
/// the note it arrives at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSequence {
    steps: Vec<i32>,
    weights: Vec<f64>,
}

impl IntervalSequence {
    /// # Panics
    ///
    /// Panics if `steps` and `weights` differ in length.
    pub fn new(steps: Vec<i32>, weights: Vec<f64>) -> Self {
        assert_eq!(steps.len(), weights.len(), "one weight per step");
        Self { steps, weights }
    }

    /// Unit-weight sequence (every step lasts 0.1 s, i.e. one grid cell by default).
    pub fn from_steps(steps: Vec<i32>) -> Self {
        let weights = vec![0.1; steps.len()];
        Self { steps, weights }
    }

    pub fn steps(&self) -> &[i32] {
        &self.steps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

pub fn to_intervals(m: &Melody) -> Result<IntervalSequence, SymbolicError> {
    if m.notes.is_empty() {
        return Err(SymbolicError::EmptyMelody);
    }
    let (steps, weights) = m
        .notes
        .windows(2)
        .map(|w| (w[1].pitch - w[0].pitch, w[1].duration))
        .unzip();
    Ok(IntervalSequence { steps, weights })
}

/// Style of a cante. The three studied substyles sort before any other label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StyleLabel {
    Debla,
    Martinete1,
    Martinete2,
    Other(String),
}

impl StyleLabel {
    /// Parses the exact lowercase manifest spelling.
    pub fn parse(s: &str) -> Result<Self, SymbolicError> {
        match s {
            "debla" => Ok(Self::Debla),
            "martinete1" => Ok(Self::Martinete1),
            "martinete2" => Ok(Self::Martinete2),
            other => Err(SymbolicError::UnknownStyle(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Self::Debla => "debla",
            Self::Martinete1 => "martinete1",
            Self::Martinete2 => "martinete2",
            Self::Other(name) => name,
        }
    }

    /// Short label used in tree exports (D, M1, M2).
    pub fn short(&self) -> &str {
        match self {
            Self::Debla => "D",
            Self::Martinete1 => "M1",
            Self::Martinete2 => "M2",
            Self::Other(name) => name,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Self::Martinete1 => 0,
            Self::Martinete2 => 1,
            Self::Debla => 2,
            Self::Other(_) => 3,
        }
    }
}

impl Ord for StyleLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Self::Other(a), Self::Other(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for StyleLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for StyleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for StyleLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for StyleLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}
