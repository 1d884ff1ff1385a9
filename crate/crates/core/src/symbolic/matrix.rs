use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::SymbolicError;

/// Tolerance for asymmetry between the two triangles of a matrix file.
const FILE_SYMMETRY_TOLERANCE: f64 = 1e-6;

/// Symmetric, zero-diagonal, non-negative pairwise dissimilarities over a
/// labelled set of objects.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix by evaluating `f(i, j)` for `i < j` only and mirroring.
    pub fn from_fn<F>(ids: Vec<String>, mut f: F) -> Result<Self, SymbolicError>
    where
        F: FnMut(usize, usize) -> f64,
    {
        let n = ids.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self::from_flat(ids, values)
    }

    /// Builds from the upper triangle, listed row by row (`n(n-1)/2` values).
    pub fn from_upper(ids: Vec<String>, upper: &[f64]) -> Result<Self, SymbolicError> {
        let n = ids.len();
        if upper.len() != n * n.saturating_sub(1) / 2 {
            return Err(SymbolicError::InvalidMatrix(format!(
                "{} upper-triangle values for {n} ids",
                upper.len()
            )));
        }
        let mut it = upper.iter().copied();
        Self::from_fn(ids, |_, _| it.next().unwrap_or(f64::NAN))
    }

    /// Validates a full row-major matrix.
    pub fn from_flat(ids: Vec<String>, values: Vec<f64>) -> Result<Self, SymbolicError> {
        let n = ids.len();
        if values.len() != n * n {
            return Err(SymbolicError::InvalidMatrix(format!(
                "{} values for {n} ids",
                values.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(SymbolicError::DuplicateId(id.clone()));
            }
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(SymbolicError::InvalidMatrix(format!(
                    "non-zero diagonal at {:?}",
                    ids[i]
                )));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(SymbolicError::InvalidMatrix(format!(
                        "entry ({:?}, {:?}) = {v} is not a finite non-negative number",
                        ids[i], ids[j]
                    )));
                }
                if v != values[j * n + i] {
                    return Err(SymbolicError::InvalidMatrix(format!(
                        "asymmetric entry ({:?}, {:?})",
                        ids[i], ids[j]
                    )));
                }
            }
        }
        Ok(Self { ids, values })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.ids.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Off-diagonal upper-triangle entries in row order.
    pub fn upper(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.ids.len();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| self.get(i, j)))
    }

    /// Same matrix with rows/columns reordered to `order` (a permutation of indices).
    pub fn permuted(&self, order: &[usize]) -> Result<Self, SymbolicError> {
        let ids = order.iter().map(|&i| self.ids[i].clone()).collect();
        Self::from_fn(ids, |a, b| self.get(order[a], order[b]))
    }

    /// Tab-separated text: a line with `n`, then one `id<TAB>v1...<TAB>vn`
    /// line per object, values with 6 decimal places.
    pub fn to_tsv(&self) -> String {
        let n = self.ids.len();
        let mut s = String::new();
        let _ = writeln!(s, "{n}");
        for i in 0..n {
            s.push_str(&self.ids[i]);
            for j in 0..n {
                let _ = write!(s, "\t{:.6}", self.get(i, j));
            }
            s.push('\n');
        }
        s
    }

    pub fn parse_tsv(text: &str, origin: &Path) -> Result<Self, SymbolicError> {
        let err = |line: usize, message: String| SymbolicError::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        let n: usize = match lines.next() {
            Some((_, l)) => l
                .trim()
                .parse()
                .map_err(|_| err(1, format!("expected object count, got {l:?}")))?,
            None => return Err(err(1, "empty file".into())),
        };
        let mut ids = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n);
        for (idx, line) in lines.by_ref().take(n) {
            let mut fields = line.trim_end_matches('\r').split('\t');
            let id = fields.next().unwrap_or_default().to_string();
            if id.is_empty() {
                return Err(err(idx + 1, "missing id".into()));
            }
            let row: Vec<f64> = fields
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| err(idx + 1, e.to_string()))?;
            if row.len() != n {
                return Err(err(
                    idx + 1,
                    format!("expected {n} values, got {}", row.len()),
                ));
            }
            ids.push(id);
            rows.push(row);
        }
        if rows.len() != n {
            return Err(err(rows.len() + 2, format!("expected {n} rows")));
        }
        if let Some((idx, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(err(idx + 1, format!("unexpected trailing line {extra:?}")));
        }
        for i in 0..n {
            for j in 0..i {
                if (rows[i][j] - rows[j][i]).abs() > FILE_SYMMETRY_TOLERANCE {
                    return Err(err(
                        i + 2,
                        format!("asymmetric entry ({:?}, {:?})", ids[i], ids[j]),
                    ));
                }
            }
        }
        // Upper triangle is authoritative; the lower one is mirrored from it.
        Self::from_fn(ids, |i, j| rows[i][j])
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SymbolicError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SymbolicError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_tsv(&text, path)
    }

    /// Largest absolute entrywise difference; `None` if the ids differ.
    pub fn max_abs_diff(&self, other: &Self) -> Option<f64> {
        if self.ids != other.ids {
            return None;
        }
        Some(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }
}
