use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use super::{Melody, NoteEvent, SymbolicError};

pub const NOTES_HEADER: &str = "onset_sec,duration_sec,pitch_midi";

#[derive(Deserialize)]
struct Row {
    onset_sec: f64,
    duration_sec: f64,
    pitch_midi: i32,
}

/// Reads a notes CSV. The melody id is the file stem.
pub fn load_notes(path: impl AsRef<Path>, tuning_hz: f64) -> Result<Melody, SymbolicError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SymbolicError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().trim_end_matches(".notes").to_string())
        .unwrap_or_default();
    parse_notes(&text, path, id, tuning_hz)
}

pub fn parse_notes(
    text: &str,
    origin: &Path,
    id: impl Into<String>,
    tuning_hz: f64,
) -> Result<Melody, SymbolicError> {
    let parse_err = |line: usize, message: String| SymbolicError::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let header = text.lines().next().unwrap_or("");
    if header.trim_end_matches('\r') != NOTES_HEADER {
        return Err(parse_err(1, format!("expected header `{NOTES_HEADER}`")));
    }

    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut notes = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        notes.push(NoteEvent::new(
            row.onset_sec,
            row.duration_sec,
            row.pitch_midi,
        ));
    }
    notes.sort_by(|a, b| a.onset.total_cmp(&b.onset));
    Melody::new(id, tuning_hz, notes)
}

/// Writes the notes CSV. Values use the shortest representation that parses
/// back to the same `f64`, so reading the file reproduces the melody.
pub fn write_notes<W: Write>(m: &Melody, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{NOTES_HEADER}")?;
    for n in m.notes() {
        writeln!(out, "{:?},{:?},{}", n.onset, n.duration, n.pitch)?;
    }
    Ok(())
}
