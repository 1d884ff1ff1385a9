//! Synthetic data shared by the integration suites.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tonas_core::symbolic::{write_notes, FRAME_PERIOD};
use tonas_core::transcription::{Frame, FrameSeries};
use tonas_core::{Melody, NoteEvent, StyleLabel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ground truth of a synthetic frame series.
#[derive(Debug, Clone)]
pub struct TruthNote {
    pub onset_frame: usize,
    pub frames: usize,
    /// Semitone relative to the true tuning.
    pub pitch: i32,
}

#[derive(Debug, Clone)]
pub struct Synth {
    pub series: FrameSeries,
    pub notes: Vec<TruthNote>,
    pub tuning_hz: f64,
}

pub const PAD_FRAMES: usize = 10;
pub const DIP_DB: f64 = -10.0;

/// Notes of 0.2–1.0 s with distinct neighbouring pitches, sinusoidal
/// vibrato of `vibrato_cents` amplitude at 5–6 Hz, a −10 dB dip on the last
/// frame of each note and unvoiced padding at both ends.
pub fn synth_series(
    r: &mut impl Rng,
    note_count: usize,
    tuning_hz: f64,
    vibrato_cents: f64,
) -> Synth {
    let mut f0 = vec![0.0; PAD_FRAMES];
    let mut energy = vec![1e-3; PAD_FRAMES];
    let mut notes = Vec::new();
    let mut pitch = r.gen_range(57..=72);
    for k in 0..note_count {
        if k > 0 {
            let mut step = r.gen_range(-4..=4);
            while step == 0 {
                step = r.gen_range(-4..=4);
            }
            pitch = (pitch + step).clamp(48, 80);
        }
        let frames = r.gen_range(12..=60);
        let rate = r.gen_range(5.0..6.0);
        let phase = r.gen_range(0.0..std::f64::consts::TAU);
        let level = r.gen_range(0.5..1.0);
        notes.push(TruthNote {
            onset_frame: f0.len(),
            frames,
            pitch,
        });
        for i in 0..frames {
            let t = i as f64 * FRAME_PERIOD;
            let cents = 100.0 * (pitch - 69) as f64
                + vibrato_cents * (std::f64::consts::TAU * rate * t + phase).sin();
            f0.push(tuning_hz * (cents / 1200.0).exp2());
            let dip = if i + 1 == frames {
                10f64.powf(DIP_DB / 20.0)
            } else {
                1.0
            };
            energy.push(level * dip);
        }
    }
    f0.extend(std::iter::repeat_n(0.0, PAD_FRAMES));
    energy.extend(std::iter::repeat_n(1e-3, PAD_FRAMES));
    Synth {
        series: FrameSeries::from_tracks(0.0, FRAME_PERIOD, &f0, &energy).unwrap(),
        notes,
        tuning_hz,
    }
}

/// Random frame series of `len` frames for DP checks: voiced runs of at
/// most `max_run` frames, wandering pitch and random energy.
pub fn random_short_series(r: &mut impl Rng, len: usize, max_run: usize) -> FrameSeries {
    let mut frames = Vec::with_capacity(len);
    let mut run = 0;
    let mut cents: f64 = r.gen_range(5500.0..7500.0);
    for i in 0..len {
        let voiced = run < max_run && r.gen_bool(0.85);
        run = if voiced { run + 1 } else { 0 };
        if r.gen_bool(0.2) {
            cents += r.gen_range(-300.0..300.0);
        }
        cents += r.gen_range(-25.0..25.0);
        let f0 = if voiced {
            440.0 * ((cents - 6900.0) / 1200.0).exp2()
        } else {
            0.0
        };
        frames.push(Frame {
            time: i as f64 * FRAME_PERIOD,
            f0,
            energy: r.gen_range(0.01..1.0),
        });
    }
    FrameSeries::new(frames, FRAME_PERIOD).unwrap()
}

pub fn random_melody(r: &mut impl Rng, id: &str, max_notes: usize) -> Melody {
    let n = r.gen_range(1..=max_notes);
    let mut t = 0.0;
    let notes = (0..n)
        .map(|_| {
            let d = 0.05 * r.gen_range(1..=20) as f64;
            let note = NoteEvent::new(t, d, r.gen_range(50..=80));
            t += d;
            note
        })
        .collect();
    Melody::new(id, 440.0, notes).unwrap()
}

// ---------------------------------------------------------------------------
// Annotated corpora on disk

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Notes,
    Frames,
}

pub struct CorpusSpec<'a> {
    pub sizes: &'a [(StyleLabel, usize)],
    pub seed: u64,
    pub source: Source,
}

/// Characteristic interval motif of each style.
fn motif(style: &StyleLabel) -> &'static [i32] {
    match style {
        StyleLabel::Debla => &[2, 2, -1, -2, 1, -2, 3, -3],
        StyleLabel::Martinete1 => &[-1, -2, 2, 1, -1, -1, 0, 2],
        StyleLabel::Martinete2 => &[5, -2, -1, -2, 4, -4, 1, 1],
        StyleLabel::Other(_) => &[1, -1, 1, -1],
    }
}

fn corpus_melody(r: &mut impl Rng, id: &str, style: &StyleLabel) -> Melody {
    let steps = motif(style);
    let mut pitch = 64;
    let mut t = 0.0;
    let mut notes = Vec::new();
    for k in 0..=steps.len() {
        if k > 0 {
            let mut s = steps[k - 1];
            if r.gen_bool(0.2) {
                s += r.gen_range(-2..=2);
            }
            pitch += if s == 0 && k > 0 { 0 } else { s };
        }
        let d = 0.05 * r.gen_range(4..=14) as f64;
        notes.push(NoteEvent::new(t, d, pitch.clamp(40, 90)));
        t += d;
    }
    Melody::new(id, 440.0, notes).unwrap()
}

fn yn(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn pick<'a, T>(r: &mut impl Rng, items: &'a [T]) -> &'a T {
    &items[r.gen_range(0..items.len())]
}

pub fn annotation_json(r: &mut impl Rng, style: &StyleLabel) -> Value {
    let noisy = r.gen_bool(0.25);
    let (initial, highest, sym, final_note, dur) = match (style, noisy) {
        (StyleLabel::Debla, false) => (6, 7, "S", 2, "S"),
        (StyleLabel::Martinete1, false) => (5, 4, "L", 1, "R"),
        (StyleLabel::Martinete2, false) => (5, 6, "R", 2, "F"),
        _ => (
            *pick(r, &[5, 6]),
            *pick(r, &[4, 5, 6, 7]),
            *pick(r, &["L", "S", "R"]),
            *pick(r, &[1, 2]),
            *pick(r, &["F", "R", "S"]),
        ),
    };
    let torculus = r.gen_range(0..=3);
    let clivis = r.gen_bool(0.5);
    let specific = match style {
        StyleLabel::Debla => json!({
            "begins_ay": yn(r.gen_bool(0.5)), "ay_linked": yn(r.gen_bool(0.5)),
            "initial_note": initial, "first_hemistich_direction": pick(r, &["D", "S", "A"]),
            "first_hemistich_repeat": yn(r.gen_bool(0.5)), "caesura": yn(r.gen_bool(0.5)),
            "second_hemistich_direction": pick(r, &["D", "S", "A"]),
            "highest_degree_2nd": pick(r, &[5, 6, 7]), "torculus_count": torculus,
            "duration_class": dur
        }),
        StyleLabel::Martinete1 => json!({
            "first_hemistich_repeat": yn(r.gen_bool(0.5)), "clivis": yn(clivis),
            "highest_degree": pick(r, &[4, 5]), "torculus_count": torculus,
            "final_note": final_note, "duration_class": dur
        }),
        StyleLabel::Martinete2 => json!({
            "highest_degree": pick(r, &[4, 5, 6]), "torculus_count": torculus,
            "symmetry": sym, "duration_class": dur
        }),
        StyleLabel::Other(_) => json!({}),
    };
    json!({
        "style": style.as_str(),
        "common": {
            "initial_note": initial, "highest_degree": highest, "symmetry": sym,
            "torculus_count": torculus, "clivis": yn(clivis), "final_note": final_note,
            "duration_class": dur
        },
        "specific": specific
    })
}

/// Frames rendering a melody: flat pitch per note, dip on each last frame.
pub fn melody_frames(m: &Melody) -> FrameSeries {
    let mut f0 = vec![0.0; PAD_FRAMES];
    let mut energy = vec![1e-3; PAD_FRAMES];
    for n in m.notes() {
        let frames = (n.duration / FRAME_PERIOD).round() as usize;
        for i in 0..frames {
            f0.push(440.0 * ((n.pitch - 69) as f64 / 12.0).exp2());
            energy.push(if i + 1 == frames { 0.3 } else { 1.0 });
        }
    }
    f0.extend(std::iter::repeat_n(0.0, PAD_FRAMES));
    energy.extend(std::iter::repeat_n(1e-3, PAD_FRAMES));
    FrameSeries::from_tracks(0.0, FRAME_PERIOD, &f0, &energy).unwrap()
}

/// Writes melodies, annotations and `manifest.json` under `dir`; returns
/// the manifest path.
pub fn write_corpus(dir: &Path, spec: &CorpusSpec<'_>) -> PathBuf {
    let mut r = rng(spec.seed);
    let mut entries = Vec::new();
    for (style, count) in spec.sizes {
        for k in 0..*count {
            let id = format!("{}{:02}", style.short().to_lowercase(), k + 1);
            let m = corpus_melody(&mut r, &id, style);
            let mut entry = json!({"id": id, "style": style.as_str()});
            match spec.source {
                Source::Notes => {
                    let mut buf = Vec::new();
                    write_notes(&m, &mut buf).unwrap();
                    fs::write(dir.join(format!("{id}.notes.csv")), buf).unwrap();
                    entry["notes"] = json!(format!("{id}.notes.csv"));
                }
                Source::Frames => {
                    let mut buf = Vec::new();
                    melody_frames(&m).write_csv(&mut buf).unwrap();
                    fs::write(dir.join(format!("{id}.frames.csv")), buf).unwrap();
                    entry["frames"] = json!(format!("{id}.frames.csv"));
                }
            }
            let ann = annotation_json(&mut r, style);
            fs::write(
                dir.join(format!("{id}.json")),
                serde_json::to_string_pretty(&ann).unwrap(),
            )
            .unwrap();
            entry["annotations"] = json!(format!("{id}.json"));
            entries.push(entry);
        }
    }
    let path = dir.join("manifest.json");
    fs::write(
        &path,
        serde_json::to_string_pretty(&Value::Array(entries)).unwrap(),
    )
    .unwrap();
    path
}

/// Class sizes of the reference corpus.
pub fn reference_sizes() -> Vec<(StyleLabel, usize)> {
    vec![
        (StyleLabel::Martinete1, 36),
        (StyleLabel::Martinete2, 20),
        (StyleLabel::Debla, 16),
    ]
}
