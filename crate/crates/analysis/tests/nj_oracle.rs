use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_analysis::nj_tree;

/// A random unrooted binary tree: leaves `0..n` plus internal nodes, grown
/// by subdividing a random edge and hanging a new leaf from the midpoint.
struct RandomTree {
    n: usize,
    adj: Vec<Vec<(usize, f64)>>,
}

fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> RandomTree {
    // Build with provisional ids, then map leaves onto a shuffled 0..n.
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); 4];
    let mut leaves = vec![0, 1, 2];
    for leaf in 0..3 {
        let l = rng.random_range(0.1..2.0);
        adj[3].push((leaf, l));
        adj[leaf].push((3, l));
    }
    while leaves.len() < n {
        let mut edges = Vec::new();
        for (a, list) in adj.iter().enumerate() {
            for &(b, l) in list {
                if a < b {
                    edges.push((a, b, l));
                }
            }
        }
        let (a, b, l) = edges[rng.random_range(0..edges.len())];
        let cut = l * rng.random_range(0.2..0.8);
        let mid = adj.len();
        let leaf = mid + 1;
        adj.push(Vec::new());
        adj.push(Vec::new());
        adj[a].retain(|&(w, _)| w != b);
        adj[b].retain(|&(w, _)| w != a);
        let pendant = rng.random_range(0.1..2.0);
        for (x, y, len) in [(a, mid, cut), (mid, b, l - cut), (mid, leaf, pendant)] {
            adj[x].push((y, len));
            adj[y].push((x, len));
        }
        leaves.push(leaf);
    }
    leaves.shuffle(rng);
    // New id: leaves first in shuffled order, then the rest.
    let mut id = vec![usize::MAX; adj.len()];
    for (k, &leaf) in leaves.iter().enumerate() {
        id[leaf] = k;
    }
    let mut next = n;
    for slot in id.iter_mut().filter(|s| **s == usize::MAX) {
        *slot = next;
        next += 1;
    }
    let mut out = vec![Vec::new(); adj.len()];
    for (v, list) in adj.into_iter().enumerate() {
        out[id[v]] = list.into_iter().map(|(w, l)| (id[w], l)).collect();
    }
    RandomTree { n, adj: out }
}

fn walk(adj: &[Vec<(usize, f64)>], from: usize) -> Vec<f64> {
    fn go(adj: &[Vec<(usize, f64)>], v: usize, parent: usize, acc: f64, out: &mut [f64]) {
        out[v] = acc;
        for &(w, l) in &adj[v] {
            if w != parent {
                go(adj, w, v, acc + l, out);
            }
        }
    }
    let mut out = vec![0.0; adj.len()];
    go(adj, from, usize::MAX, 0.0, &mut out);
    out
}

fn additive_matrix(t: &RandomTree) -> Vec<Vec<f64>> {
    (0..t.n).map(|i| walk(&t.adj, i)[..t.n].to_vec()).collect()
}

/// Leaf sets below each edge, seen from leaf 0, keeping the non-trivial ones.
fn oracle_splits(adj: &[Vec<(usize, f64)>], n: usize) -> BTreeSet<Vec<usize>> {
    fn below(
        adj: &[Vec<(usize, f64)>],
        v: usize,
        parent: usize,
        n: usize,
        out: &mut BTreeSet<Vec<usize>>,
    ) -> Vec<usize> {
        let mut leaves = if v < n { vec![v] } else { Vec::new() };
        for &(w, _) in &adj[v] {
            if w != parent {
                leaves.extend(below(adj, w, v, n, out));
            }
        }
        leaves.sort_unstable();
        if leaves.len() >= 2 && leaves.len() <= n - 2 {
            out.insert(leaves.clone());
        }
        leaves
    }
    let mut out = BTreeSet::new();
    let (first, _) = adj[0][0];
    below(adj, first, 0, n, &mut out);
    out
}

#[test]
fn recovers_random_additive_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let n = rng.random_range(4..=12);
        let truth = random_tree(n, &mut rng);
        let d = additive_matrix(&truth);
        let got = nj_tree(&d).unwrap();
        assert_eq!(got.splits(), oracle_splits(&truth.adj, n), "case {case}, n={n}");
        let paths = got.leaf_distances();
        for i in 0..n {
            for j in 0..n {
                assert!((paths[i][j] - d[i][j]).abs() < 1e-9, "case {case} ({i},{j})");
            }
        }
    }
}

#[test]
fn newick_lists_every_leaf_once() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let truth = random_tree(9, &mut rng);
    let names: Vec<String> = (0..9).map(|i| format!("L{i}")).collect();
    let text = nj_tree(&additive_matrix(&truth)).unwrap().newick(&names);
    assert!(text.starts_with("(L0:") && text.ends_with(");"), "{text}");
    for name in &names {
        assert_eq!(text.matches(&format!("{name}:")).count(), 1, "{text}");
    }
    assert_eq!(text.matches('(').count(), text.matches(')').count());
}

#[test]
fn thousand_taxa_finish() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let points: Vec<[f64; 3]> = (0..1000).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
    let d: Vec<Vec<f64>> = points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt())
                .collect()
        })
        .collect();
    let t = nj_tree(&d).unwrap();
    assert_eq!(t.leaf_count, 1000);
    assert!(t.edges.iter().flatten().all(|&(_, l)| l >= 0.0));
}
