use std::ops::Range;

use super::{hz_to_cents, FrameSeries, SegmentationConfig, TranscriptionError, TuningEstimate};
use crate::symbolic::{Melody, NoteEvent, PITCH_RANGE};

/// Maximal runs of voiced frames.
pub fn voiced_regions(fs: &FrameSeries) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, f) in fs.frames().iter().enumerate() {
        match (f.is_voiced(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(s..fs.len());
    }
    out
}

/// Scores candidate notes inside one voiced region. Positions are local:
/// a segment `a..b` covers region frames `a` to `b − 1`.
///
/// A segment of `n` frames scores
/// `n · (w_pitch·P_pitch + w_energy·P_onset + w_duration·P_dur)`; weighting
/// by length makes the total independent of how many pieces a stretch is
/// cut into when the evidence is uniform.
#[derive(Debug, Clone)]
pub struct RegionScorer {
    /// Frame pitch in cents relative to the tuning (MIDI scale).
    rel: Vec<f64>,
    onset: Vec<f64>,
    energy: Vec<f64>,
    period: f64,
    cfg: SegmentationConfig,
}

impl RegionScorer {
    pub fn new(
        fs: &FrameSeries,
        region: Range<usize>,
        tuning: &TuningEstimate,
        cfg: &SegmentationConfig,
    ) -> Self {
        let frames = &fs.frames()[region];
        let rel: Vec<f64> = frames
            .iter()
            .map(|f| hz_to_cents(f.f0) - tuning.offset_cents)
            .collect();
        let db: Vec<f64> = frames
            .iter()
            .map(|f| 20.0 * f.energy.max(1e-12).log10())
            .collect();
        let rises: Vec<f64> = (0..db.len())
            .map(|i| {
                if i == 0 {
                    0.0
                } else {
                    (db[i] - db[i - 1]).max(0.0)
                }
            })
            .collect();
        let max_rise = rises.iter().copied().fold(0.0, f64::max);
        let onset = (0..db.len())
            .map(|i| match i {
                0 => 1.0,
                _ if max_rise > 0.0 => rises[i] / max_rise,
                _ => 0.0,
            })
            .collect();
        Self {
            rel,
            onset,
            energy: frames.iter().map(|f| f.energy).collect(),
            period: fs.frame_period(),
            cfg: *cfg,
        }
    }

    pub fn len(&self) -> usize {
        self.rel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rel.is_empty()
    }

    /// Longest admissible segment, in frames.
    pub fn max_segment_frames(&self) -> usize {
        ((2.0 * self.cfg.max_note / self.period + 1e-9).floor() as usize).max(1)
    }

    pub fn duration_prior(&self, duration: f64) -> f64 {
        let (lo, hi) = (self.cfg.min_note, self.cfg.max_note);
        if duration < lo {
            duration / lo
        } else if duration <= hi {
            1.0
        } else {
            ((2.0 * hi - duration) / hi).max(0.0)
        }
    }

    /// Score of segment `a..b`.
    pub fn score(&self, a: usize, b: usize) -> f64 {
        let mut sorted = self.rel[a..b].to_vec();
        sorted.sort_by(f64::total_cmp);
        self.score_sorted(&sorted, a)
    }

    /// Quantised pitch of segment `a..b` (lower median, nearest semitone).
    pub fn pitch(&self, a: usize, b: usize) -> i32 {
        let mut sorted = self.rel[a..b].to_vec();
        sorted.sort_by(f64::total_cmp);
        quantise(&sorted)
    }

    fn score_sorted(&self, sorted: &[f64], a: usize) -> f64 {
        let n = sorted.len();
        let target = 100.0 * quantise(sorted) as f64;
        let mad = sorted.iter().map(|c| (c - target).abs()).sum::<f64>() / n as f64;
        let p_pitch = (-mad / 50.0).exp();
        let p_dur = self.duration_prior(n as f64 * self.period);
        n as f64
            * (self.cfg.w_pitch * p_pitch
                + self.cfg.w_energy * self.onset[a]
                + self.cfg.w_duration * p_dur)
    }

    /// Optimal segmentation as a list of `a..b` ranges plus its total score.
    pub fn best_segmentation(&self) -> (Vec<Range<usize>>, f64) {
        let n = self.len();
        let cap = self.max_segment_frames();
        let mut best = vec![f64::NEG_INFINITY; n + 1];
        let mut back = vec![0usize; n + 1];
        best[0] = 0.0;
        let mut sorted: Vec<f64> = Vec::with_capacity(cap);
        for b in 1..=n {
            sorted.clear();
            for a in (b.saturating_sub(cap)..b).rev() {
                let v = self.rel[a];
                let pos = sorted.partition_point(|x| x.total_cmp(&v).is_lt());
                sorted.insert(pos, v);
                let s = best[a] + self.score_sorted(&sorted, a);
                if s > best[b] {
                    best[b] = s;
                    back[b] = a;
                }
            }
        }
        let mut cuts = Vec::new();
        let mut b = n;
        while b > 0 {
            cuts.push(back[b]..b);
            b = back[b];
        }
        cuts.reverse();
        (cuts, best[n])
    }

    fn mean_energy(&self, r: &Range<usize>) -> f64 {
        self.energy[r.clone()].iter().sum::<f64>() / r.len() as f64
    }
}

fn quantise(sorted: &[f64]) -> i32 {
    let median = sorted[(sorted.len() - 1) / 2];
    (median / 100.0).round() as i32
}

pub(crate) fn clamp_pitch(p: i32) -> i32 {
    if !(PITCH_RANGE.0..=PITCH_RANGE.1).contains(&p) {
        log::warn!("pitch {p} outside the singing range; clamped");
    }
    p.clamp(PITCH_RANGE.0, PITCH_RANGE.1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub melody: Melody,
    /// Sum of segment scores over all voiced regions.
    pub score: f64,
}

pub fn segment_notes(
    fs: &FrameSeries,
    tuning: &TuningEstimate,
    cfg: &SegmentationConfig,
) -> Result<Melody, TranscriptionError> {
    segment_notes_scored(fs, tuning, cfg).map(|r| r.melody)
}

/// Segments each voiced region independently by dynamic programming over
/// frame boundaries.
pub fn segment_notes_scored(
    fs: &FrameSeries,
    tuning: &TuningEstimate,
    cfg: &SegmentationConfig,
) -> Result<SegmentationResult, TranscriptionError> {
    cfg.validate(fs.frame_period())?;
    let mut notes = Vec::new();
    let mut total = 0.0;
    for region in voiced_regions(fs) {
        let scorer = RegionScorer::new(fs, region.clone(), tuning, cfg);
        let (cuts, score) = scorer.best_segmentation();
        total += score;
        for r in cuts {
            let first = &fs.frames()[region.start + r.start];
            notes.push(NoteEvent {
                onset: first.time,
                duration: r.len() as f64 * fs.frame_period(),
                pitch: clamp_pitch(scorer.pitch(r.start, r.end)),
                energy: Some(scorer.mean_energy(&r)),
            });
        }
    }
    Ok(SegmentationResult {
        melody: Melody::new("", tuning.tuning_hz, notes)?,
        score: total,
    })
}
