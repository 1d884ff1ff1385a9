use super::segment::clamp_pitch;
use super::{hz_to_cents, FrameSeries, SegmentationConfig, TranscriptionError};
use crate::symbolic::{Melody, NoteEvent};

const MAX_PASSES: usize = 100;
/// An alternative tuning must beat the current one by this much.
const IMPROVEMENT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Consolidation {
    pub melody: Melody,
    pub merges: usize,
    pub passes: usize,
    /// Mean absolute distance of note frames from their note's semitone at
    /// the final tuning, in cents.
    pub residual_cents: f64,
}

struct NoteFrames {
    /// Lower median of the note's voiced frame pitches, absolute cents.
    centre: f64,
    /// Voiced frame pitches in time order, absolute cents.
    cents: Vec<f64>,
}

impl NoteFrames {
    fn first(&self) -> Option<f64> {
        self.cents.first().copied()
    }

    fn last(&self) -> Option<f64> {
        self.cents.last().copied()
    }
}

/// Mean squared deviation of every note frame from its note's semitone
/// under `offset`. Each frame counts once, so longer notes weigh more; the
/// squared form averages vibrato out where a median would lock onto a peak.
fn note_objective(info: &[NoteFrames], offset: f64) -> f64 {
    note_error(info, offset, |d| d * d)
}

fn note_error(info: &[NoteFrames], offset: f64, loss: impl Fn(f64) -> f64) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for n in info {
        let target = 100.0 * ((n.centre - offset) / 100.0).round() + offset;
        sum += n.cents.iter().map(|c| loss(c - target)).sum::<f64>();
        count += n.cents.len();
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn note_frames(n: &NoteEvent, fs: &FrameSeries, offset: f64) -> NoteFrames {
    let start = fs.index_at(n.onset);
    let len = (n.duration / fs.frame_period()).round().max(1.0) as usize;
    let end = (start + len).min(fs.len());
    let cents: Vec<f64> = fs.frames()[start.min(end)..end]
        .iter()
        .filter(|f| f.is_voiced())
        .map(|f| hz_to_cents(f.f0))
        .collect();
    let mut sorted = cents.clone();
    sorted.sort_by(f64::total_cmp);
    let centre = match sorted.len() {
        0 => 100.0 * n.pitch as f64 + offset,
        k => sorted[(k - 1) / 2],
    };
    NoteFrames { centre, cents }
}

fn offset_of(tuning_hz: f64) -> f64 {
    hz_to_cents(tuning_hz) - 6900.0
}

/// Repeats passes of (a) tuning refinement on the pitch error of note
/// frames, (b) re-quantisation of note pitches and (c) merging of adjacent
/// equal-pitch notes joined by a soft transition, until a pass changes
/// nothing.
pub fn consolidate_and_refine(
    m: &Melody,
    fs: &FrameSeries,
    cfg: &SegmentationConfig,
) -> Result<Consolidation, TranscriptionError> {
    let mut tuning_hz = m.tuning_hz();
    let mut notes = m.notes().to_vec();
    let mut merges = 0;
    let mut passes = 0;
    let (lo, hi) = (offset_of(415.0), offset_of(466.0));
    let offset = loop {
        passes += 1;
        let current = offset_of(tuning_hz);
        let info: Vec<NoteFrames> = notes.iter().map(|n| note_frames(n, fs, current)).collect();
        let centres: Vec<f64> = info.iter().map(|i| i.centre).collect();

        // (a) tuning, searched over one period around the current value.
        let mut offset = current;
        let mut residual = if notes.is_empty() {
            0.0
        } else {
            note_objective(&info, current)
        };
        let mut tuning_changed = false;
        if !notes.is_empty() {
            let steps = (1..=49).flat_map(|k| [-k, k]).chain([50]);
            for k in steps {
                let o = current + k as f64;
                if !(lo..=hi).contains(&o) {
                    continue;
                }
                let r = note_objective(&info, o);
                if r < residual - IMPROVEMENT {
                    residual = r;
                    offset = o;
                    tuning_changed = true;
                }
            }
        }
        if tuning_changed {
            tuning_hz = 440.0 * (offset / 1200.0).exp2();
        }

        // (b) re-quantise.
        let mut pitch_changed = false;
        for (n, c) in notes.iter_mut().zip(&centres) {
            let p = clamp_pitch(((c - offset) / 100.0).round() as i32);
            pitch_changed |= p != n.pitch;
            n.pitch = p;
        }

        // (c) merge soft equal-pitch transitions.
        let mut merged: Vec<NoteEvent> = Vec::with_capacity(notes.len());
        let mut last_cents: Option<f64> = None;
        let mut pass_merges = 0;
        for (n, inf) in notes.iter().zip(&info) {
            if let Some(prev) = merged.last_mut() {
                let contiguous = (n.onset - prev.end()).abs() <= fs.frame_period() / 2.0;
                let soft = match (last_cents, inf.first()) {
                    (Some(a), Some(b)) => (b - a).abs() < cfg.soft_transition_cents,
                    _ => false,
                };
                if contiguous && soft && prev.pitch == n.pitch {
                    let end = n.end();
                    prev.energy = match (prev.energy, n.energy) {
                        (Some(a), Some(b)) => Some(
                            (a * prev.duration + b * n.duration) / (prev.duration + n.duration),
                        ),
                        (a, b) => a.or(b),
                    };
                    prev.duration = end - prev.onset;
                    last_cents = inf.last();
                    pass_merges += 1;
                    continue;
                }
            }
            merged.push(*n);
            last_cents = inf.last();
        }
        notes = merged;
        merges += pass_merges;

        if (pass_merges == 0 && !tuning_changed && !pitch_changed) || passes >= MAX_PASSES {
            break offset;
        }
    };
    let final_info: Vec<NoteFrames> = notes.iter().map(|n| note_frames(n, fs, offset)).collect();
    Ok(Consolidation {
        melody: Melody::new(m.id(), tuning_hz, notes)?,
        merges,
        passes,
        residual_cents: note_error(&final_info, offset, f64::abs),
    })
}

/// Absorbs every note shorter than the threshold into the nearest long note
/// (by time gap; ties go to the earlier note), which is stretched to cover
/// it. Melodies without a long note are returned unchanged.
pub fn postprocess_short_notes(
    m: &Melody,
    cfg: &SegmentationConfig,
) -> Result<Melody, TranscriptionError> {
    let notes = m.notes();
    let long: Vec<usize> = (0..notes.len())
        .filter(|&i| notes[i].duration >= cfg.short_note_threshold)
        .collect();
    if long.is_empty() || long.len() == notes.len() {
        return Ok(m.clone());
    }
    let gap = |a: &NoteEvent, b: &NoteEvent| (b.onset - a.end()).max(a.onset - b.end()).max(0.0);
    let mut out: Vec<NoteEvent> = long.iter().map(|&i| notes[i]).collect();
    for (i, n) in notes.iter().enumerate() {
        if n.duration >= cfg.short_note_threshold {
            continue;
        }
        let mut best = 0;
        for k in 1..long.len() {
            if gap(n, &notes[long[k]]) < gap(n, &notes[long[best]]) {
                best = k;
            }
        }
        log::debug!("absorbing note {i} into note {}", long[best]);
        let target = &mut out[best];
        let end = target.end().max(n.end());
        target.onset = target.onset.min(n.onset);
        target.duration = end - target.onset;
    }
    Ok(Melody::new(m.id(), m.tuning_hz(), out)?)
}
