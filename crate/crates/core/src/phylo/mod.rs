//! Neighbour-joining trees, least-squares fit and interchange formats for
//! phylogenetic tooling.

mod formats;

use serde::Serialize;
use thiserror::Error;

use crate::symbolic::{DistanceMatrix, SymbolicError};

pub use formats::{
    export_newick, export_nexus, export_phylip, parse_newick, parse_nexus, parse_phylip,
};

#[derive(Debug, Error)]
pub enum PhyloError {
    #[error("need at least 2 taxa, got {0}")]
    TooFewTaxa(usize),
    #[error("ids not representable in {format}: {}", ids.join(", "))]
    IllegalIds {
        format: &'static str,
        ids: Vec<String>,
    },
    #[error("{format} parse error: {message}")]
    Parse {
        format: &'static str,
        message: String,
    },
    #[error("fit index undefined: all reference distances are zero")]
    ZeroMatrix,
    #[error("matrices list different ids")]
    IdMismatch,
    #[error(transparent)]
    Matrix(#[from] SymbolicError),
}

/// An undirected tree with weighted edges. Leaves carry the taxon ids;
/// internal nodes are unnamed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhyloTree {
    leaves: Vec<String>,
    /// Node index of each leaf, parallel to `leaves`.
    leaf_nodes: Vec<usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
    /// Negative branch lengths set to zero while building.
    clamped: usize,
}

impl PhyloTree {
    fn with_nodes(count: usize) -> Self {
        Self {
            leaves: Vec::new(),
            leaf_nodes: Vec::new(),
            adjacency: vec![Vec::new(); count],
            clamped: 0,
        }
    }

    fn add_node(&mut self) -> usize {
        self.adjacency.push(Vec::new());
        self.adjacency.len() - 1
    }

    fn connect(&mut self, a: usize, b: usize, length: f64) {
        self.adjacency[a].push((b, length));
        self.adjacency[b].push((a, length));
    }

    pub fn leaves(&self) -> &[String] {
        &self.leaves
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn leaf_node(&self, leaf: usize) -> usize {
        self.leaf_nodes[leaf]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn neighbours(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    /// Each edge once, as `(a, b, length)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (a, adj) in self.adjacency.iter().enumerate() {
            for &(b, l) in adj {
                if a < b {
                    out.push((a, b, l));
                }
            }
        }
        out
    }

    pub fn clamped_branches(&self) -> usize {
        self.clamped
    }

    pub fn total_length(&self) -> f64 {
        self.edges().iter().map(|e| e.2).sum()
    }

    /// Path lengths from `node` to every node.
    fn distances_from(&self, node: usize) -> Vec<f64> {
        let mut dist = vec![f64::NAN; self.node_count()];
        dist[node] = 0.0;
        let mut stack = vec![node];
        while let Some(u) = stack.pop() {
            for &(v, l) in &self.adjacency[u] {
                if dist[v].is_nan() {
                    dist[v] = dist[u] + l;
                    stack.push(v);
                }
            }
        }
        dist
    }
}

/// Neighbour joining with the Q-criterion. Ties pick the first pair in
/// row-major order over the current active nodes.
pub fn neighbor_joining(d: &DistanceMatrix) -> Result<PhyloTree, PhyloError> {
    let n = d.len();
    if n < 2 {
        return Err(PhyloError::TooFewTaxa(n));
    }
    let mut tree = PhyloTree::with_nodes(n);
    tree.leaves = d.ids().to_vec();
    tree.leaf_nodes = (0..n).collect();

    let mut active: Vec<usize> = (0..n).collect();
    let mut dm: Vec<Vec<f64>> = (0..n).map(|i| d.row(i).to_vec()).collect();

    while active.len() > 2 {
        let r = active.len();
        let sums: Vec<f64> = dm.iter().map(|row| row.iter().sum()).collect();
        let (mut bi, mut bj, mut bq) = (0, 1, f64::INFINITY);
        for i in 0..r {
            for j in i + 1..r {
                let q = (r as f64 - 2.0) * dm[i][j] - sums[i] - sums[j];
                if q < bq {
                    (bi, bj, bq) = (i, j, q);
                }
            }
        }
        let dij = dm[bi][bj];
        let mut li = 0.5 * dij + (sums[bi] - sums[bj]) / (2.0 * (r as f64 - 2.0));
        let mut lj = dij - li;
        if li < 0.0 {
            tree.clamped += 1;
            (li, lj) = (0.0, dij.max(0.0));
        } else if lj < 0.0 {
            tree.clamped += 1;
            (li, lj) = (dij.max(0.0), 0.0);
        }
        let u = tree.add_node();
        tree.connect(u, active[bi], li);
        tree.connect(u, active[bj], lj);

        let new_row: Vec<f64> = (0..r)
            .filter(|&k| k != bi && k != bj)
            .map(|k| 0.5 * (dm[bi][k] + dm[bj][k] - dij))
            .collect();
        // Remove j then i (j > i), then append u.
        for idx in [bj, bi] {
            active.remove(idx);
            dm.remove(idx);
            for row in dm.iter_mut() {
                row.remove(idx);
            }
        }
        for (row, &v) in dm.iter_mut().zip(&new_row) {
            row.push(v);
        }
        let mut last = new_row;
        last.push(0.0);
        dm.push(last);
        active.push(u);
    }
    let mut last = dm[0][1];
    if last < 0.0 {
        tree.clamped += 1;
        last = 0.0;
    }
    tree.connect(active[0], active[1], last);
    if tree.clamped > 0 {
        log::warn!(
            "neighbour joining clamped {} negative branch lengths to 0",
            tree.clamped
        );
    }
    Ok(tree)
}

/// Leaf-to-leaf path lengths, in leaf order.
pub fn patristic_distances(t: &PhyloTree) -> Result<DistanceMatrix, PhyloError> {
    let rows: Vec<Vec<f64>> = (0..t.leaves.len())
        .map(|i| {
            let all = t.distances_from(t.leaf_nodes[i]);
            t.leaf_nodes.iter().map(|&n| all[n]).collect()
        })
        .collect();
    Ok(DistanceMatrix::from_fn(t.leaves.clone(), |i, j| {
        rows[i][j]
    })?)
}

/// `100·(1 − Σ(D−P)²/ΣD²)` over pairs `i < j`, floored at 0.
pub fn lsfit(d: &DistanceMatrix, p: &DistanceMatrix) -> Result<f64, PhyloError> {
    if d.ids() != p.ids() {
        return Err(PhyloError::IdMismatch);
    }
    let ss: f64 = d.upper().map(|v| v * v).sum();
    if ss == 0.0 {
        return Err(PhyloError::ZeroMatrix);
    }
    let sse: f64 = d.upper().zip(p.upper()).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((100.0 * (1.0 - sse / ss)).max(0.0))
}
