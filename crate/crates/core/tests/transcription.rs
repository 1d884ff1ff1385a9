mod common;

use rand::Rng;
use tonas_core::symbolic::FRAME_PERIOD;
use tonas_core::transcription::{
    estimate_f0, estimate_tuning, transcribe, FrameSeries, SegmentationConfig,
};

fn shifted(fs: &FrameSeries, cents: f64) -> FrameSeries {
    let f0: Vec<f64> = fs
        .frames()
        .iter()
        .map(|f| {
            if f.is_voiced() {
                f.f0 * (cents / 1200.0).exp2()
            } else {
                0.0
            }
        })
        .collect();
    let energy: Vec<f64> = fs.frames().iter().map(|f| f.energy).collect();
    FrameSeries::from_tracks(0.0, fs.frame_period(), &f0, &energy).unwrap()
}

fn circular_cents(a: f64, b: f64) -> f64 {
    let d = 1200.0 * (a / b).log2();
    d - 100.0 * (d / 100.0).round()
}

#[test]
fn five_note_phrase_at_452() {
    let mut r = common::rng(452);
    let s = common::synth_series(&mut r, 5, 452.0, 0.0);
    let t = transcribe(&s.series, &SegmentationConfig::default()).unwrap();
    assert_eq!(t.melody.len(), 5);
    let k = (1200.0 * (t.melody.tuning_hz() / 452.0).log2() / 100.0).round() as i32;
    for (n, truth) in t.melody.notes().iter().zip(&s.notes) {
        assert_eq!(n.pitch + k, truth.pitch);
    }
    assert!(circular_cents(t.melody.tuning_hz(), 452.0).abs() <= 3.0);
}

#[test]
fn transcription_is_deterministic() {
    let cfg = SegmentationConfig::default();
    let mut r = common::rng(3);
    for _ in 0..10 {
        let s = common::synth_series(&mut r, 6, 440.0, 20.0);
        assert_eq!(
            transcribe(&s.series, &cfg).unwrap(),
            transcribe(&s.series, &cfg).unwrap()
        );
    }
}

#[test]
fn tuning_shift_equivariance() {
    let cfg = SegmentationConfig::default();
    let mut r = common::rng(21);
    for _ in 0..20 {
        let count = r.gen_range(3..=6);
        let s = common::synth_series(&mut r, count, 440.0, 20.0);
        let c = r.gen_range(-45.0..45.0);
        let base = transcribe(&s.series, &cfg).unwrap();
        let moved = transcribe(&shifted(&s.series, c), &cfg).unwrap();
        let delta = 1200.0 * (moved.melody.tuning_hz() / base.melody.tuning_hz()).log2();
        assert!((delta - c).abs() <= 3.0, "shift {c}: tuning moved {delta}");
        let pitches =
            |m: &tonas_core::Melody| m.notes().iter().map(|n| n.pitch).collect::<Vec<_>>();
        assert_eq!(pitches(&base.melody), pitches(&moved.melody));
    }
}

#[test]
fn voiced_time_is_conserved() {
    let cfg = SegmentationConfig::default();
    let mut r = common::rng(22);
    for _ in 0..20 {
        let (count, tuning) = (r.gen_range(3..=8), r.gen_range(420.0..460.0));
        let s = common::synth_series(&mut r, count, tuning, 20.0);
        let t = transcribe(&s.series, &cfg).unwrap();
        let covered: f64 = t.melody.notes().iter().map(|n| n.duration).sum();
        let voiced = s.series.voiced_duration();
        assert!((covered - voiced).abs() <= FRAME_PERIOD * (t.merges + 1) as f64);
    }
}

#[test]
fn unvoiced_series_gives_empty_melody() {
    let fs = FrameSeries::from_tracks(0.0, FRAME_PERIOD, &[0.0; 40], &[0.1; 40]).unwrap();
    let t = transcribe(&fs, &SegmentationConfig::default()).unwrap();
    assert!(t.melody.is_empty());
}

#[test]
fn too_few_voiced_frames_for_tuning() {
    let mut f0 = vec![0.0; 20];
    f0[3..8].fill(440.0);
    let fs = FrameSeries::from_tracks(0.0, FRAME_PERIOD, &f0, &[0.5; 20]).unwrap();
    assert!(estimate_tuning(&fs, &SegmentationConfig::default()).is_err());
}

#[test]
fn f0_of_a_sine_feeds_transcription() {
    let sr = 16_000u32;
    let pitches = [220.0, 246.94, 261.63];
    let mut samples = Vec::new();
    for f in pitches {
        for i in 0..(sr as usize / 2) {
            samples.push(0.5 * (std::f64::consts::TAU * f * i as f64 / sr as f64).sin());
        }
    }
    let fs = estimate_f0(&samples, sr).unwrap();
    let t = transcribe(&fs, &SegmentationConfig::default()).unwrap();
    let got: Vec<i32> = t.melody.notes().iter().map(|n| n.pitch).collect();
    assert_eq!(got, vec![57, 59, 60]);
}
