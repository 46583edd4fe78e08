//! Neighbor-joining trees with Newick output.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::AnalysisError;

pub const DEFAULT_MAX_TAXA: usize = 1000;
const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// An unrooted tree whose leaves are `0..leaf_count`, drawn rooted at the
/// internal node that taxon 0 hangs from.
#[derive(Debug, Clone, PartialEq)]
pub struct NjTree {
    pub leaf_count: usize,
    /// Adjacency lists of `(neighbor, branch length)`.
    pub edges: Vec<Vec<(usize, f64)>>,
    pub root: usize,
}

fn check_matrix(d: &[Vec<f64>]) -> Result<(), AnalysisError> {
    let n = d.len();
    if n < 2 {
        return Err(AnalysisError::TooFewRows { needed: 2, found: n });
    }
    if let Some(i) = d.iter().position(|r| r.len() != n) {
        return Err(AnalysisError::InvalidInput(format!(
            "row {i} has {} entries, expected {n}",
            d[i].len()
        )));
    }
    for i in 0..n {
        if d[i][i] != 0.0 {
            return Err(AnalysisError::InvalidInput(format!(
                "diagonal entry {i} is {}",
                d[i][i]
            )));
        }
        for j in 0..n {
            let v = d[i][j];
            if !v.is_finite() {
                return Err(AnalysisError::InvalidInput(format!("entry ({i}, {j}) is not finite")));
            }
            if v < 0.0 {
                return Err(AnalysisError::NegativeDistance { i, j });
            }
            if (v - d[j][i]).abs() > SYMMETRY_TOLERANCE * v.abs().max(1.0) {
                return Err(AnalysisError::AsymmetricMatrix { i, j });
            }
        }
    }
    Ok(())
}

/// Standard neighbor joining. Negative branch estimates are clamped to
/// zero with the remainder moved to the sibling, keeping their sum.
pub fn nj_tree(dist: &[Vec<f64>]) -> Result<NjTree, AnalysisError> {
    check_matrix(dist)?;
    let n = dist.len();
    let mut edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let link = |edges: &mut Vec<Vec<(usize, f64)>>, a: usize, b: usize, len: f64| {
        edges[a].push((b, len));
        edges[b].push((a, len));
    };

    if n == 2 {
        edges.push(Vec::new());
        let half = dist[0][1] / 2.0;
        link(&mut edges, 2, 0, half);
        link(&mut edges, 2, 1, half);
        return Ok(NjTree {
            leaf_count: 2,
            edges,
            root: 2,
        });
    }

    let mut d: Vec<f64> = dist.iter().flatten().copied().collect();
    // Slot k holds the node `node[k]` while `active[k]`.
    let mut node: Vec<usize> = (0..n).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut r = vec![0.0; n];

    while active.len() > 2 {
        let m = active.len() as f64;
        for &a in &active {
            r[a] = active.iter().map(|&b| d[a * n + b]).sum();
        }
        let mut best = (f64::INFINITY, 0, 0);
        for (x, &a) in active.iter().enumerate() {
            for &b in &active[x + 1..] {
                let q = (m - 2.0) * d[a * n + b] - r[a] - r[b];
                if q < best.0 {
                    best = (q, a, b);
                }
            }
        }
        let (_, a, b) = best;
        let dab = d[a * n + b];
        let mut la = dab / 2.0 + (r[a] - r[b]) / (2.0 * (m - 2.0));
        let mut lb = dab - la;
        if la < 0.0 {
            la = 0.0;
            lb = dab;
        } else if lb < 0.0 {
            lb = 0.0;
            la = dab;
        }
        let u = edges.len();
        edges.push(Vec::new());
        link(&mut edges, u, node[a], la);
        link(&mut edges, u, node[b], lb);
        for &k in &active {
            if k != a && k != b {
                let v = ((d[a * n + k] + d[b * n + k] - dab) / 2.0).max(0.0);
                d[a * n + k] = v;
                d[k * n + a] = v;
            }
        }
        node[a] = u;
        active.retain(|&k| k != b);
    }
    let (a, b) = (active[0], active[1]);
    link(&mut edges, node[a], node[b], d[a * n + b]);
    let root = edges[0][0].0;
    Ok(NjTree {
        leaf_count: n,
        edges,
        root,
    })
}

fn quote(name: &str) -> String {
    if name.chars().any(|c| "()[]':;,".contains(c) || c.is_whitespace()) {
        format!("'{}'", name.replace('\'', "''"))
    } else {
        name.to_string()
    }
}

impl NjTree {
    fn children(&self, v: usize, parent: Option<usize>) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self.edges[v]
            .iter()
            .copied()
            .filter(|&(w, _)| Some(w) != parent)
            .collect();
        out.sort_by_key(|&(w, _)| (w >= self.leaf_count, w));
        out
    }

    /// Newick text with leaf `i` named `names[i]`.
    pub fn newick(&self, names: &[String]) -> String {
        let mut out = String::new();
        // Iterative to survive deep caterpillar trees.
        enum Step {
            Open(usize, Option<usize>, Option<f64>),
            Close(Option<f64>),
            Comma,
        }
        let mut stack = vec![Step::Open(self.root, None, None)];
        while let Some(step) = stack.pop() {
            match step {
                Step::Comma => out.push(','),
                Step::Close(len) => {
                    out.push(')');
                    if let Some(l) = len {
                        let _ = write!(out, ":{l}");
                    }
                }
                Step::Open(v, parent, len) => {
                    if v < self.leaf_count {
                        out.push_str(&quote(&names[v]));
                        if let Some(l) = len {
                            let _ = write!(out, ":{l}");
                        }
                        continue;
                    }
                    out.push('(');
                    stack.push(Step::Close(len));
                    let kids = self.children(v, parent);
                    for (k, &(w, l)) in kids.iter().enumerate().rev() {
                        stack.push(Step::Open(w, Some(v), Some(l)));
                        if k > 0 {
                            stack.push(Step::Comma);
                        }
                    }
                }
            }
        }
        out.push(';');
        out
    }

    /// Path length between every pair of leaves.
    pub fn leaf_distances(&self) -> Vec<Vec<f64>> {
        (0..self.leaf_count)
            .map(|s| {
                let mut dist = vec![f64::NAN; self.edges.len()];
                dist[s] = 0.0;
                let mut stack = vec![s];
                while let Some(v) = stack.pop() {
                    for &(w, l) in &self.edges[v] {
                        if dist[w].is_nan() {
                            dist[w] = dist[v] + l;
                            stack.push(w);
                        }
                    }
                }
                dist.truncate(self.leaf_count);
                dist
            })
            .collect()
    }

    /// Non-trivial leaf bipartitions, each given as the side without leaf 0.
    pub fn splits(&self) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        // Leaves below each node, hanging the tree from leaf 0.
        let mut order = Vec::new();
        let mut parent = vec![usize::MAX; self.edges.len()];
        let mut stack = vec![0];
        parent[0] = 0;
        while let Some(v) = stack.pop() {
            order.push(v);
            for &(w, _) in &self.edges[v] {
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    stack.push(w);
                }
            }
        }
        let mut below: Vec<Vec<usize>> = vec![Vec::new(); self.edges.len()];
        for &v in order.iter().rev() {
            if v != 0 && v < self.leaf_count {
                below[v].push(v);
            }
            let mut side = std::mem::take(&mut below[v]);
            side.sort_unstable();
            let size = side.len();
            if size >= 2 && size <= self.leaf_count - 2 {
                out.insert(side.clone());
            }
            if v != 0 {
                below[parent[v]].extend(side.iter().copied());
            }
            below[v] = side;
        }
        out
    }
}

/// Indices kept when thinning `n` taxa to `limit`: taxon 0 always, the
/// rest drawn with the seed, all in ascending order.
pub fn subsample_indices(n: usize, limit: usize, seed: u64) -> Vec<usize> {
    if n <= limit {
        return (0..n).collect();
    }
    if limit == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample(&mut rng, n - 1, limit - 1).into_iter().map(|i| i + 1).collect();
    picked.push(0);
    picked.sort_unstable();
    picked
}
