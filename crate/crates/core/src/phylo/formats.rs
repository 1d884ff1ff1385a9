use std::fmt::Write as _;

use super::{PhyloError, PhyloTree};
use crate::symbolic::DistanceMatrix;

const NEXUS_FORBIDDEN: &str = "()[]{}/\\,;:=*'\"`<>^";
const NEWICK_FORBIDDEN: &str = "()[]':;,";
const PHYLIP_WIDTH: usize = 10;

fn check_ids<'a>(
    ids: impl IntoIterator<Item = &'a String>,
    format: &'static str,
    ok: impl Fn(&str) -> bool,
) -> Result<(), PhyloError> {
    let bad: Vec<String> = ids.into_iter().filter(|id| !ok(id)).cloned().collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(PhyloError::IllegalIds { format, ids: bad })
    }
}

fn plain(id: &str, forbidden: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_graphic() && !forbidden.contains(c))
}

/// Distance block for split-network tools: a TAXA block and a DISTANCES
/// block with the full square matrix, labels on the left, 6 decimals.
pub fn export_nexus(d: &DistanceMatrix) -> Result<String, PhyloError> {
    check_ids(d.ids(), "Nexus", |id| plain(id, NEXUS_FORBIDDEN))?;
    let n = d.len();
    let mut s = String::from("#NEXUS\n");
    let _ = writeln!(
        s,
        "BEGIN TAXA; DIMENSIONS NTAX={n}; TAXLABELS {}; END;",
        d.ids().join(" ")
    );
    let _ = writeln!(
        s,
        "BEGIN DISTANCES; DIMENSIONS NTAX={n}; FORMAT TRIANGLE=BOTH LABELS=LEFT DIAGONAL;"
    );
    s.push_str("MATRIX\n");
    for (i, id) in d.ids().iter().enumerate() {
        s.push_str(id);
        for v in d.row(i) {
            let _ = write!(s, " {v:.6}");
        }
        s.push('\n');
    }
    s.push_str(";\nEND;\n");
    Ok(s)
}

fn nexus_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut in_comment = false;
    for c in text.chars() {
        match c {
            '[' => in_comment = true,
            ']' => in_comment = false,
            _ if in_comment => {}
            ';' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(";".into());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Reads the DISTANCES block written by [`export_nexus`] (full square
/// matrix with left labels).
pub fn parse_nexus(text: &str) -> Result<DistanceMatrix, PhyloError> {
    let err = |m: String| PhyloError::Parse {
        format: "Nexus",
        message: m,
    };
    let tokens = nexus_tokens(text);
    if !tokens
        .first()
        .is_some_and(|t| t.eq_ignore_ascii_case("#NEXUS"))
    {
        return Err(err("missing #NEXUS header".into()));
    }
    let upper: Vec<String> = tokens.iter().map(|t| t.to_ascii_uppercase()).collect();
    let find = |key: &str| upper.iter().position(|t| t == key);

    let labels_at = find("TAXLABELS").ok_or_else(|| err("no TAXLABELS".into()))?;
    let labels: Vec<String> = tokens[labels_at + 1..]
        .iter()
        .take_while(|t| *t != ";")
        .cloned()
        .collect();
    let n = labels.len();
    if let Some(dim) = upper.iter().find_map(|t| t.strip_prefix("NTAX=")) {
        let declared: usize = dim.parse().map_err(|_| err(format!("bad NTAX {dim:?}")))?;
        if declared != n {
            return Err(err(format!("NTAX={declared} but {n} labels")));
        }
    }
    let m_at = find("MATRIX").ok_or_else(|| err("no MATRIX".into()))?;
    let body: Vec<&String> = tokens[m_at + 1..]
        .iter()
        .take_while(|t| *t != ";")
        .collect();
    if body.len() != n * (n + 1) {
        return Err(err(format!(
            "expected {} matrix tokens for {n} taxa, found {}",
            n * (n + 1),
            body.len()
        )));
    }
    let mut values = vec![0.0; n * n];
    for (i, row) in body.chunks(n + 1).enumerate() {
        if *row[0] != labels[i] {
            return Err(err(format!(
                "row {} is labelled {:?}, expected {:?}",
                i + 1,
                row[0],
                labels[i]
            )));
        }
        for (j, tok) in row[1..].iter().enumerate() {
            values[i * n + j] = tok
                .parse()
                .map_err(|_| err(format!("bad number {tok:?} in row {}", i + 1)))?;
        }
    }
    symmetric(labels, &values, "Nexus")
}

fn symmetric(
    ids: Vec<String>,
    values: &[f64],
    format: &'static str,
) -> Result<DistanceMatrix, PhyloError> {
    let n = ids.len();
    for i in 0..n {
        for j in i + 1..n {
            if (values[i * n + j] - values[j * n + i]).abs() > 1e-6 {
                return Err(PhyloError::Parse {
                    format,
                    message: format!("matrix is not symmetric at ({}, {})", i + 1, j + 1),
                });
            }
        }
    }
    Ok(DistanceMatrix::from_fn(ids, |i, j| values[i * n + j])?)
}

/// Square PHYLIP distance matrix: the taxon count, then one row per taxon
/// with the id left-aligned in 10 columns.
pub fn export_phylip(d: &DistanceMatrix) -> Result<String, PhyloError> {
    check_ids(d.ids(), "PHYLIP", |id| {
        plain(id, "") && id.chars().count() <= PHYLIP_WIDTH
    })?;
    let mut s = format!("{}\n", d.len());
    for (i, id) in d.ids().iter().enumerate() {
        let _ = write!(s, "{id:<10}");
        for v in d.row(i) {
            let _ = write!(s, " {v:.6}");
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn parse_phylip(text: &str) -> Result<DistanceMatrix, PhyloError> {
    let err = |m: String| PhyloError::Parse {
        format: "PHYLIP",
        message: m,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let n: usize = lines
        .next()
        .ok_or_else(|| err("empty input".into()))?
        .trim()
        .parse()
        .map_err(|_| err("first line must be the taxon count".into()))?;
    let mut ids = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| err(format!("missing row {}", i + 1)))?;
        let split = line
            .char_indices()
            .nth(PHYLIP_WIDTH)
            .map_or(line.len(), |(k, _)| k);
        ids.push(line[..split].trim().to_string());
        let row: Vec<f64> = line[split..]
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| err(format!("bad number {t:?} in row {}", i + 1)))
            })
            .collect::<Result<_, _>>()?;
        if row.len() != n {
            return Err(err(format!(
                "row {} has {} values, expected {n}",
                i + 1,
                row.len()
            )));
        }
        values.extend(row);
    }
    symmetric(ids, &values, "PHYLIP")
}

/// Newick string with 6-decimal branch lengths, rooted at the internal node
/// next to the first leaf. Subtrees are ordered by their lowest leaf index.
pub fn export_newick(t: &PhyloTree) -> Result<String, PhyloError> {
    check_ids(t.leaves(), "Newick", |id| plain(id, NEWICK_FORBIDDEN))?;
    let leaves = t.leaves();
    if leaves.len() == 2 {
        let l = t.neighbours(t.leaf_node(0))[0].1;
        return Ok(format!("({}:{l:.6},{}:0.000000);", leaves[0], leaves[1]));
    }
    let mut leaf_of = vec![None; t.node_count()];
    for i in 0..leaves.len() {
        leaf_of[t.leaf_node(i)] = Some(i);
    }
    let root = t.neighbours(t.leaf_node(0))[0].0;
    let mut s = String::new();
    write_children(t, &leaf_of, root, None, &mut s);
    s.push(';');
    Ok(s)
}

fn min_leaf(t: &PhyloTree, leaf_of: &[Option<usize>], node: usize, parent: Option<usize>) -> usize {
    let own = leaf_of[node].unwrap_or(usize::MAX);
    t.neighbours(node)
        .iter()
        .filter(|(v, _)| Some(*v) != parent)
        .map(|&(v, _)| min_leaf(t, leaf_of, v, Some(node)))
        .fold(own, usize::min)
}

fn write_children(
    t: &PhyloTree,
    leaf_of: &[Option<usize>],
    node: usize,
    parent: Option<usize>,
    s: &mut String,
) {
    let mut kids: Vec<(usize, f64, usize)> = t
        .neighbours(node)
        .iter()
        .filter(|(v, _)| Some(*v) != parent)
        .map(|&(v, l)| (v, l, min_leaf(t, leaf_of, v, Some(node))))
        .collect();
    kids.sort_by_key(|k| k.2);
    s.push('(');
    for (k, (v, l, _)) in kids.into_iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        match leaf_of[v] {
            Some(i) if t.degree(v) == 1 => s.push_str(&t.leaves()[i]),
            _ => write_children(t, leaf_of, v, Some(node), s),
        }
        let _ = write!(s, ":{l:.6}");
    }
    s.push(')');
}

struct NewickParser<'a> {
    src: &'a [u8],
    pos: usize,
    tree: PhyloTree,
}

impl NewickParser<'_> {
    fn err(&self, m: &str) -> PhyloError {
        PhyloError::Parse {
            format: "Newick",
            message: format!("{m} at byte {}", self.pos),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn label(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && !b"(),:;".contains(&self.src[self.pos])
            && !self.src[self.pos].is_ascii_whitespace()
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn length(&mut self) -> Result<f64, PhyloError> {
        if self.peek() != Some(b':') {
            return Ok(0.0);
        }
        self.pos += 1;
        let tok = self.label();
        tok.parse()
            .map_err(|_| self.err(&format!("bad branch length {tok:?}")))
    }

    fn subtree(&mut self) -> Result<usize, PhyloError> {
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let node = self.tree.add_node();
            loop {
                let child = self.subtree()?;
                let l = self.length()?;
                self.tree.connect(node, child, l);
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.err("expected ',' or ')'")),
                }
            }
            self.label(); // internal labels are ignored
            Ok(node)
        } else {
            let name = self.label();
            if name.is_empty() {
                return Err(self.err("expected a taxon label"));
            }
            if self.tree.leaves.contains(&name) {
                return Err(self.err(&format!("duplicate taxon {name:?}")));
            }
            let node = self.tree.add_node();
            self.tree.leaves.push(name);
            self.tree.leaf_nodes.push(node);
            Ok(node)
        }
    }
}

/// Parses a single Newick tree. Missing branch lengths read as 0; leaves
/// are numbered in order of appearance.
pub fn parse_newick(text: &str) -> Result<PhyloTree, PhyloError> {
    let mut p = NewickParser {
        src: text.as_bytes(),
        pos: 0,
        tree: PhyloTree::with_nodes(0),
    };
    p.subtree()?;
    p.length()?;
    if p.peek() != Some(b';') {
        return Err(p.err("expected ';'"));
    }
    p.pos += 1;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(p.tree)
}
