use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{StyleLabel, SymbolicError};

/// One cante in the corpus. Paths are already resolved against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub id: String,
    pub style: StyleLabel,
    pub frames_path: Option<PathBuf>,
    pub notes_path: Option<PathBuf>,
    pub annotations_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id.clone()).collect()
    }

    pub fn labels(&self) -> Vec<StyleLabel> {
        self.entries.iter().map(|e| e.style.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    id: String,
    style: String,
    #[serde(default)]
    frames: Option<String>,
    #[serde(default)]
    notes: Option<String>,
    #[serde(default)]
    annotations: Option<String>,
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<CorpusManifest, SymbolicError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SymbolicError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest(&text, path, base)
}

/// Parses manifest text; `origin` is only used in error messages and `base`
/// is the directory relative paths are resolved against.
pub fn parse_manifest(
    text: &str,
    origin: &Path,
    base: &Path,
) -> Result<CorpusManifest, SymbolicError> {
    let raw: Vec<RawEntry> = serde_json::from_str(text).map_err(|e| SymbolicError::Parse {
        path: origin.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;

    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(raw.len());
    for r in raw {
        if !seen.insert(r.id.clone()) {
            return Err(SymbolicError::DuplicateId(r.id));
        }
        let style = StyleLabel::parse(&r.style)?;
        if r.frames.is_none() && r.notes.is_none() {
            return Err(SymbolicError::NoInput(r.id));
        }
        let resolve = |p: Option<String>| -> Result<Option<PathBuf>, SymbolicError> {
            p.map(|p| {
                let full = base.join(p);
                if full.is_file() {
                    Ok(full)
                } else {
                    Err(SymbolicError::MissingFile {
                        id: r.id.clone(),
                        path: full,
                    })
                }
            })
            .transpose()
        };
        entries.push(ManifestEntry {
            frames_path: resolve(r.frames)?,
            notes_path: resolve(r.notes)?,
            annotations_path: resolve(r.annotations)?,
            id: r.id,
            style,
        });
    }
    Ok(CorpusManifest { entries })
}
