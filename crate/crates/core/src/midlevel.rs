//! Expert-annotated mid-level features.
//!
//! Each cante carries a style-specific block (debla: 10 variables,
//! martinete 1: 6, martinete 2: 4) and the 7 variables common to all three
//! styles. Only the common block enters the distance: it is encoded as a
//! real vector and compared with the plain Euclidean norm.
//!
//! Encoding table: yes/no → 1/0; scale degrees, final note and torculus
//! count → their integer value; duration F/R/S → 0/1/2; symmetry L/S/R and
//! direction D/S/A → −1/0/+1.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::symbolic::{DistanceMatrix, StyleLabel, SymbolicError};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot read {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Json {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{block}: missing field {field:?}")]
    MissingField { block: String, field: String },
    #[error("{block}.{field}: value {value} not in allowed set {{{allowed}}}")]
    Domain {
        block: String,
        field: String,
        value: String,
        allowed: String,
    },
    #[error("annotation style {found:?} does not match expected {expected}")]
    StyleMismatch { expected: StyleLabel, found: String },
    #[error("duration class needs at least 2 durations, got {0}")]
    InsufficientDurations(usize),
    #[error("invalid duration {0} s")]
    InvalidDuration(f64),
    #[error("missing annotations for: {}", .0.join(", "))]
    MissingAnnotations(Vec<String>),
    #[error(transparent)]
    Matrix(#[from] SymbolicError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DurationClass {
    #[serde(rename = "F")]
    Fast,
    #[serde(rename = "R")]
    Regular,
    #[serde(rename = "S")]
    Slow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Symmetry {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "S")]
    Symmetric,
    #[serde(rename = "R")]
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    #[serde(rename = "D")]
    Descending,
    #[serde(rename = "S")]
    Symmetric,
    #[serde(rename = "A")]
    Ascending,
}

impl DurationClass {
    pub fn code(self) -> f64 {
        match self {
            Self::Fast => 0.0,
            Self::Regular => 1.0,
            Self::Slow => 2.0,
        }
    }
}

impl Symmetry {
    pub fn code(self) -> f64 {
        match self {
            Self::Left => -1.0,
            Self::Symmetric => 0.0,
            Self::Right => 1.0,
        }
    }
}

impl Direction {
    pub fn code(self) -> f64 {
        match self {
            Self::Descending => -1.0,
            Self::Symmetric => 0.0,
            Self::Ascending => 1.0,
        }
    }
}

/// The seven variables shared by all three styles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CommonFeatures {
    pub initial_note: u8,
    pub highest_degree: u8,
    pub symmetry: Symmetry,
    pub torculus_count: u32,
    pub clivis: bool,
    pub final_note: u8,
    pub duration_class: DurationClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DeblaFeatures {
    pub begins_ay: bool,
    pub ay_linked: bool,
    pub initial_note: u8,
    pub first_hemistich_direction: Direction,
    pub first_hemistich_repeat: bool,
    pub caesura: bool,
    pub second_hemistich_direction: Direction,
    pub highest_degree_2nd: u8,
    pub torculus_count: u32,
    pub duration_class: DurationClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Martinete1Features {
    pub first_hemistich_repeat: bool,
    pub clivis: bool,
    pub highest_degree: u8,
    pub torculus_count: u32,
    pub final_note: u8,
    pub duration_class: DurationClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Martinete2Features {
    pub highest_degree: u8,
    pub torculus_count: u32,
    pub symmetry: Symmetry,
    pub duration_class: DurationClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "style", rename_all = "lowercase")]
pub enum StyleFeatures {
    Debla(DeblaFeatures),
    Martinete1(Martinete1Features),
    Martinete2(Martinete2Features),
    /// Styles outside the three studied ones carry no specific block.
    Unspecified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Annotation {
    pub style: StyleLabel,
    pub common: CommonFeatures,
    pub specific: StyleFeatures,
    pub duration_sec: Option<f64>,
}

/// Fast below `μ − σ`, slow above `μ + σ`, regular on the closed interval
/// between. σ is the population standard deviation.
pub fn duration_class(all_durations: &[f64], d: f64) -> Result<DurationClass, FeatureError> {
    if all_durations.len() < 2 {
        return Err(FeatureError::InsufficientDurations(all_durations.len()));
    }
    if let Some(&bad) = all_durations
        .iter()
        .chain(std::iter::once(&d))
        .find(|x| !x.is_finite() || **x <= 0.0)
    {
        return Err(FeatureError::InvalidDuration(bad));
    }
    let (mean, sd) = mean_and_population_sd(all_durations);
    Ok(if d < mean - sd {
        DurationClass::Fast
    } else if d > mean + sd {
        DurationClass::Slow
    } else {
        DurationClass::Regular
    })
}

pub(crate) fn mean_and_population_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Which common variables enter the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub enum VariableSet {
    /// All seven common variables.
    #[default]
    Full7,
    /// Initial note, highest degree, final note and duration only.
    Reduced4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct FeatureEncoding {
    pub variables: VariableSet,
}

impl FeatureEncoding {
    pub const FULL7: Self = Self {
        variables: VariableSet::Full7,
    };
    pub const REDUCED4: Self = Self {
        variables: VariableSet::Reduced4,
    };

    pub fn dimension(&self) -> usize {
        match self.variables {
            VariableSet::Full7 => 7,
            VariableSet::Reduced4 => 4,
        }
    }

    pub fn variable_names(&self) -> &'static [&'static str] {
        match self.variables {
            VariableSet::Full7 => &[
                "initial_note",
                "highest_degree",
                "symmetry",
                "torculus_count",
                "clivis",
                "final_note",
                "duration_class",
            ],
            VariableSet::Reduced4 => &[
                "initial_note",
                "highest_degree",
                "final_note",
                "duration_class",
            ],
        }
    }

    pub fn encode(&self, f: &CommonFeatures) -> Vec<f64> {
        match self.variables {
            VariableSet::Full7 => vec![
                f64::from(f.initial_note),
                f64::from(f.highest_degree),
                f.symmetry.code(),
                f64::from(f.torculus_count),
                if f.clivis { 1.0 } else { 0.0 },
                f64::from(f.final_note),
                f.duration_class.code(),
            ],
            VariableSet::Reduced4 => vec![
                f64::from(f.initial_note),
                f64::from(f.highest_degree),
                f64::from(f.final_note),
                f.duration_class.code(),
            ],
        }
    }
}

pub fn encode(f: &CommonFeatures, enc: &FeatureEncoding) -> Vec<f64> {
    enc.encode(f)
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn d_md(f1: &CommonFeatures, f2: &CommonFeatures, enc: &FeatureEncoding) -> f64 {
    euclidean(&enc.encode(f1), &enc.encode(f2))
}

/// Pairwise MD distances in the order of `ids`.
pub fn build_md_matrix(
    ids: &[String],
    features: &HashMap<String, CommonFeatures>,
    enc: &FeatureEncoding,
) -> Result<DistanceMatrix, FeatureError> {
    let missing: Vec<String> = ids
        .iter()
        .filter(|id| !features.contains_key(*id))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(FeatureError::MissingAnnotations(missing));
    }
    if ids.len() < 2 {
        return Err(SymbolicError::InvalidMatrix(format!(
            "need at least 2 annotated cantes, got {}",
            ids.len()
        ))
        .into());
    }
    let vectors: Vec<Vec<f64>> = ids.iter().map(|id| enc.encode(&features[id])).collect();
    Ok(DistanceMatrix::from_fn(ids.to_vec(), |i, j| {
        euclidean(&vectors[i], &vectors[j])
    })?)
}

// ---------------------------------------------------------------------------
// Parsing

struct Block<'a> {
    name: &'a str,
    map: &'a Map<String, Value>,
    duration_override: Option<DurationClass>,
}

impl Block<'_> {
    fn raw(&self, field: &str) -> Result<&Value, FeatureError> {
        self.map
            .get(field)
            .ok_or_else(|| FeatureError::MissingField {
                block: self.name.to_string(),
                field: field.to_string(),
            })
    }

    fn domain(&self, field: &str, value: &Value, allowed: &str) -> FeatureError {
        FeatureError::Domain {
            block: self.name.to_string(),
            field: field.to_string(),
            value: value.to_string(),
            allowed: allowed.to_string(),
        }
    }

    fn string_choice<T: Copy>(
        &self,
        field: &str,
        choices: &[(&str, T)],
    ) -> Result<T, FeatureError> {
        let v = self.raw(field)?;
        let allowed = choices
            .iter()
            .map(|(s, _)| *s)
            .collect::<Vec<_>>()
            .join(", ");
        v.as_str()
            .and_then(|s| choices.iter().find(|(c, _)| *c == s).map(|(_, t)| *t))
            .ok_or_else(|| self.domain(field, v, &allowed))
    }

    fn yes_no(&self, field: &str) -> Result<bool, FeatureError> {
        self.string_choice(field, &[("yes", true), ("no", false)])
    }

    fn degree(&self, field: &str, allowed: &[u8]) -> Result<u8, FeatureError> {
        let v = self.raw(field)?;
        let list = allowed
            .iter()
            .map(u8::to_string)
            .collect::<Vec<_>>()
            .join(", ");
        v.as_u64()
            .and_then(|x| u8::try_from(x).ok())
            .filter(|x| allowed.contains(x))
            .ok_or_else(|| self.domain(field, v, &list))
    }

    fn count(&self, field: &str) -> Result<u32, FeatureError> {
        let v = self.raw(field)?;
        v.as_u64()
            .and_then(|x| u32::try_from(x).ok())
            .ok_or_else(|| self.domain(field, v, "0, 1, 2, ..."))
    }

    fn symmetry(&self, field: &str) -> Result<Symmetry, FeatureError> {
        self.string_choice(
            field,
            &[
                ("S", Symmetry::Symmetric),
                ("L", Symmetry::Left),
                ("R", Symmetry::Right),
            ],
        )
    }

    fn direction(&self, field: &str) -> Result<Direction, FeatureError> {
        self.string_choice(
            field,
            &[
                ("D", Direction::Descending),
                ("S", Direction::Symmetric),
                ("A", Direction::Ascending),
            ],
        )
    }

    fn duration(&self) -> Result<DurationClass, FeatureError> {
        if let Some(class) = self.duration_override {
            return Ok(class);
        }
        self.string_choice(
            "duration_class",
            &[
                ("F", DurationClass::Fast),
                ("R", DurationClass::Regular),
                ("S", DurationClass::Slow),
            ],
        )
    }
}

fn object<'a>(v: &'a Value, name: &str) -> Result<&'a Map<String, Value>, FeatureError> {
    v.get(name)
        .ok_or_else(|| FeatureError::MissingField {
            block: "annotation".into(),
            field: name.into(),
        })?
        .as_object()
        .ok_or_else(|| FeatureError::Domain {
            block: "annotation".into(),
            field: name.into(),
            value: v[name].to_string(),
            allowed: "JSON object".into(),
        })
}

fn parse_common(b: &Block<'_>) -> Result<CommonFeatures, FeatureError> {
    Ok(CommonFeatures {
        initial_note: b.degree("initial_note", &[5, 6])?,
        highest_degree: b.degree("highest_degree", &[4, 5, 6, 7])?,
        symmetry: b.symmetry("symmetry")?,
        torculus_count: b.count("torculus_count")?,
        clivis: b.yes_no("clivis")?,
        final_note: b.degree("final_note", &[1, 2])?,
        duration_class: b.duration()?,
    })
}

fn parse_specific(b: &Block<'_>, style: &StyleLabel) -> Result<StyleFeatures, FeatureError> {
    Ok(match style {
        StyleLabel::Debla => StyleFeatures::Debla(DeblaFeatures {
            begins_ay: b.yes_no("begins_ay")?,
            ay_linked: b.yes_no("ay_linked")?,
            initial_note: b.degree("initial_note", &[5, 6])?,
            first_hemistich_direction: b.direction("first_hemistich_direction")?,
            first_hemistich_repeat: b.yes_no("first_hemistich_repeat")?,
            caesura: b.yes_no("caesura")?,
            second_hemistich_direction: b.direction("second_hemistich_direction")?,
            highest_degree_2nd: b.degree("highest_degree_2nd", &[5, 6, 7])?,
            torculus_count: b.count("torculus_count")?,
            duration_class: b.duration()?,
        }),
        StyleLabel::Martinete1 => StyleFeatures::Martinete1(Martinete1Features {
            first_hemistich_repeat: b.yes_no("first_hemistich_repeat")?,
            clivis: b.yes_no("clivis")?,
            highest_degree: b.degree("highest_degree", &[4, 5])?,
            torculus_count: b.count("torculus_count")?,
            final_note: b.degree("final_note", &[1, 2])?,
            duration_class: b.duration()?,
        }),
        StyleLabel::Martinete2 => StyleFeatures::Martinete2(Martinete2Features {
            highest_degree: b.degree("highest_degree", &[4, 5, 6])?,
            torculus_count: b.count("torculus_count")?,
            symmetry: b.symmetry("symmetry")?,
            duration_class: b.duration()?,
        }),
        StyleLabel::Other(_) => StyleFeatures::Unspecified,
    })
}

fn read_json(path: &Path) -> Result<Value, FeatureError> {
    let text = std::fs::read_to_string(path).map_err(|source| FeatureError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| FeatureError::Json {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn duration_sec(v: &Value) -> Result<Option<f64>, FeatureError> {
    match v.get("duration_sec") {
        None | Some(Value::Null) => Ok(None),
        Some(x) => match x.as_f64() {
            Some(d) if d.is_finite() && d > 0.0 => Ok(Some(d)),
            _ => Err(FeatureError::Domain {
                block: "annotation".into(),
                field: "duration_sec".into(),
                value: x.to_string(),
                allowed: "positive seconds".into(),
            }),
        },
    }
}

/// Validates a parsed annotation document against `style`'s schema.
///
/// `duration_override`, when set, replaces `duration_class` in both blocks
/// (the corpus loader derives it from `duration_sec`).
pub fn annotation_from_value(
    v: &Value,
    style: &StyleLabel,
    duration_override: Option<DurationClass>,
) -> Result<Annotation, FeatureError> {
    let declared =
        v.get("style")
            .and_then(Value::as_str)
            .ok_or_else(|| FeatureError::MissingField {
                block: "annotation".into(),
                field: "style".into(),
            })?;
    if declared != style.as_str() {
        return Err(FeatureError::StyleMismatch {
            expected: style.clone(),
            found: declared.to_string(),
        });
    }
    let common = parse_common(&Block {
        name: "common",
        map: object(v, "common")?,
        duration_override,
    })?;
    let specific = match style {
        StyleLabel::Other(_) => StyleFeatures::Unspecified,
        _ => parse_specific(
            &Block {
                name: "specific",
                map: object(v, "specific")?,
                duration_override,
            },
            style,
        )?,
    };
    Ok(Annotation {
        style: style.clone(),
        common,
        specific,
        duration_sec: duration_sec(v)?,
    })
}

/// Parses one annotation file whose duration class is given explicitly.
pub fn parse_annotations(
    path: impl AsRef<Path>,
    style: &StyleLabel,
) -> Result<Annotation, FeatureError> {
    annotation_from_value(&read_json(path.as_ref())?, style, None)
}

/// Loads annotations for a corpus. Files that give `duration_sec` get their
/// duration class from the mean and spread of all supplied durations;
/// files without it must state `duration_class`.
pub fn load_corpus_annotations<'a, I>(entries: I) -> Result<Vec<(String, Annotation)>, FeatureError>
where
    I: IntoIterator<Item = (&'a str, &'a StyleLabel, &'a Path)>,
{
    let docs = entries
        .into_iter()
        .map(|(id, style, path)| Ok((id, style, read_json(path)?)))
        .collect::<Result<Vec<_>, FeatureError>>()?;
    let durations: Vec<f64> = docs
        .iter()
        .map(|(_, _, v)| duration_sec(v))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    docs.iter()
        .map(|(id, style, v)| {
            let over = match duration_sec(v)? {
                Some(d) => Some(duration_class(&durations, d)?),
                None => None,
            };
            Ok((id.to_string(), annotation_from_value(v, style, over)?))
        })
        .collect()
}

impl fmt::Display for CommonFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", FeatureEncoding::FULL7.encode(self))
    }
}
