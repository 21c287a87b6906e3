//! Deterministic and seeded graph families.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::graph::Graph;
use crate::rng;

pub const DEFAULT_MAX_VERTICES: usize = 1_000_000;

/// A graph family with its size parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// `rows × cols` grid; `torus` wraps both directions.
    Grid { rows: usize, cols: usize, torus: bool },
    /// `k × k` grid with the diagonal `(i, j)–(i+1, j+1)` in every unit square.
    TriGrid { k: usize, torus: bool },
    Cycle { n: usize },
    Path { n: usize },
    /// Complete binary tree of height `h` (root 0, heap order).
    BinaryTree { h: usize },
    /// Complete binary tree of height `h` labelled from the leaves up: the
    /// `2^h` leaves come first, the root last.
    CanopyTree { h: usize },
    /// Triangle × path with `length` edges.
    Prism { length: usize },
    /// Start from a triangle and repeatedly split a uniform inner face by a new vertex.
    StackedTriangulation { insertions: usize, seed: u64 },
    /// 3-regular tree truncated at `depth` with a pendant path of random length at
    /// every tree vertex, `P(L = l) ∝ l^(-2-alpha)` for `1 <= l <= l_max`.
    DecoratedTree { depth: usize, alpha: f64, l_max: usize, seed: u64 },
    /// Complete binary tree of height `h` whose edges at height `k` (counted from
    /// the leaves) are multiplied `f(k) = 2 d[k] - d[k+1]` times, every copy
    /// subdivided once. `d[k]` plays the role of the degree profile at scale `2^k`.
    TransientTree { h: usize, d: Vec<f64> },
    Star { leaves: usize },
    Complete { n: usize },
}

/// A generated graph with optional human-readable vertex labels.
#[derive(Clone, Debug)]
pub struct Generated {
    pub graph: Graph,
    pub labels: Option<Vec<String>>,
}

pub fn generate(spec: &GeneratorSpec) -> Result<Graph> {
    generate_with_limit(spec, DEFAULT_MAX_VERTICES).map(|g| g.graph)
}

fn cap(requested: usize, max: usize) -> Result<()> {
    if requested > max {
        Err(Error::TooLarge { requested, max })
    } else {
        Ok(())
    }
}

fn checked_pow2(e: usize) -> Result<usize> {
    1usize.checked_shl(e as u32).filter(|_| e < usize::BITS as usize - 1).ok_or(Error::TooLarge {
        requested: usize::MAX,
        max: DEFAULT_MAX_VERTICES,
    })
}

pub fn generate_with_limit(spec: &GeneratorSpec, max_vertices: usize) -> Result<Generated> {
    use GeneratorSpec::*;
    let plain = |graph| Ok(Generated { graph, labels: None });
    match spec {
        Grid { rows, cols, torus } => {
            param(*rows >= 1 && *cols >= 1, || "grid sides must be positive".into())?;
            param(!torus || (*rows >= 3 && *cols >= 3), || "torus sides must be at least 3".into())?;
            cap(rows.saturating_mul(*cols), max_vertices)?;
            plain(lattice(*rows, *cols, *torus, false)?)
        }
        TriGrid { k, torus } => {
            param(*k >= 1, || "tri_grid side must be positive".into())?;
            param(!torus || *k >= 3, || "torus side must be at least 3".into())?;
            cap(k.saturating_mul(*k), max_vertices)?;
            plain(lattice(*k, *k, *torus, true)?)
        }
        Cycle { n } => {
            param(*n >= 3, || "cycle needs at least 3 vertices".into())?;
            cap(*n, max_vertices)?;
            plain(Graph::from_edges(*n, &(0..*n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())?)
        }
        Path { n } => {
            param(*n >= 1, || "path needs a vertex".into())?;
            cap(*n, max_vertices)?;
            plain(Graph::from_edges(*n, &(1..*n).map(|i| (i - 1, i)).collect::<Vec<_>>())?)
        }
        BinaryTree { h } => {
            let n = checked_pow2(h + 1)? - 1;
            cap(n, max_vertices)?;
            plain(Graph::from_edges(n, &(1..n).map(|i| ((i - 1) / 2, i)).collect::<Vec<_>>())?)
        }
        CanopyTree { h } => {
            let n = checked_pow2(h + 1)? - 1;
            cap(n, max_vertices)?;
            // heap index i at depth t maps to level-from-leaves h - t; list leaves first
            let relabel = |i: usize| {
                let depth = (usize::BITS - 1 - (i + 1).leading_zeros()) as usize;
                let level = h - depth;
                let offset = (i + 1) - (1 << depth);
                let before: usize = (0..level).map(|l| 1usize << (h - l)).sum();
                before + offset
            };
            let edges: Vec<_> = (1..n).map(|i| (relabel((i - 1) / 2), relabel(i))).collect();
            plain(Graph::from_edges(n, &edges)?)
        }
        Prism { length } => {
            let n = 3 * (length + 1);
            cap(n, max_vertices)?;
            let mut edges = Vec::new();
            for layer in 0..=*length {
                let b = 3 * layer;
                edges.extend([(b, b + 1), (b + 1, b + 2), (b, b + 2)]);
                if layer < *length {
                    edges.extend((0..3).map(|j| (b + j, b + 3 + j)));
                }
            }
            plain(Graph::from_edges(n, &edges)?)
        }
        StackedTriangulation { insertions, seed } => {
            cap(insertions.saturating_add(3), max_vertices)?;
            plain(stacked_triangulation(*insertions, *seed)?)
        }
        DecoratedTree { depth, alpha, l_max, seed } => decorated_tree(*depth, *alpha, *l_max, *seed, max_vertices),
        TransientTree { h, d } => transient_tree(*h, d, max_vertices),
        Star { leaves } => {
            param(*leaves >= 1, || "star needs a leaf".into())?;
            cap(leaves + 1, max_vertices)?;
            plain(Graph::from_edges(leaves + 1, &(1..=*leaves).map(|i| (0, i)).collect::<Vec<_>>())?)
        }
        Complete { n } => {
            param(*n >= 1, || "complete graph needs a vertex".into())?;
            cap(*n, max_vertices)?;
            let edges: Vec<_> = (0..*n).flat_map(|u| (u + 1..*n).map(move |v| (u, v))).collect();
            plain(Graph::from_edges(*n, &edges)?)
        }
    }
}

fn lattice(rows: usize, cols: usize, torus: bool, diagonals: bool) -> Result<Graph> {
    let id = |i: usize, j: usize| i * cols + j;
    let mut edges = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let down = if i + 1 < rows { Some(i + 1) } else if torus { Some(0) } else { None };
            let right = if j + 1 < cols { Some(j + 1) } else if torus { Some(0) } else { None };
            if let Some(r) = right {
                edges.push((id(i, j), id(i, r)));
            }
            if let Some(d) = down {
                edges.push((id(i, j), id(d, j)));
            }
            if diagonals {
                if let (Some(d), Some(r)) = (down, right) {
                    edges.push((id(i, j), id(d, r)));
                }
            }
        }
    }
    Graph::from_edges(rows * cols, &edges)
}

fn stacked_triangulation(insertions: usize, seed: u64) -> Result<Graph> {
    let mut rng = rng::stream(seed, "stacked_triangulation", 0);
    let mut faces: Vec<[usize; 3]> = vec![[0, 1, 2]];
    let mut edges = vec![(0, 1), (1, 2), (0, 2)];
    for step in 0..insertions {
        let v = 3 + step;
        let f = rng.random_range(0..faces.len());
        let [a, b, c] = faces[f];
        edges.extend([(a, v), (b, v), (c, v)]);
        faces[f] = [a, b, v];
        faces.push([b, c, v]);
        faces.push([a, c, v]);
    }
    Graph::from_edges(3 + insertions, &edges)
}

fn decorated_tree(depth: usize, alpha: f64, l_max: usize, seed: u64, max_vertices: usize) -> Result<Generated> {
    param(alpha > 0.0 && alpha.is_finite(), || format!("alpha must be positive, got {alpha}"))?;
    param(l_max >= 1, || "l_max must be positive".into())?;
    let tree_n = if depth == 0 { 1 } else { 1 + 3 * (checked_pow2(depth)? - 1) };
    cap(tree_n, max_vertices)?;
    let mut edges = Vec::with_capacity(tree_n);
    let mut labels = vec!["t0".to_string()];
    let mut frontier = vec![0usize];
    let mut next = 1usize;
    for level in 1..=depth {
        let mut nf = Vec::with_capacity(frontier.len() * 2);
        for &p in &frontier {
            let kids = if level == 1 { 3 } else { 2 };
            for _ in 0..kids {
                edges.push((p, next));
                labels.push(format!("t{level}"));
                nf.push(next);
                next += 1;
            }
        }
        frontier = nf;
    }
    let weights: Vec<f64> = (1..=l_max).map(|l| (l as f64).powf(-2.0 - alpha)).collect();
    let law = WeightedIndex::new(&weights).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = rng::stream(seed, "decorated_tree", 0);
    for v in 0..tree_n {
        let len = law.sample(&mut rng) + 1;
        cap(next + len, max_vertices)?;
        let mut prev = v;
        for s in 1..=len {
            edges.push((prev, next));
            labels.push(format!("p{v}.{s}"));
            prev = next;
            next += 1;
        }
    }
    Ok(Generated { graph: Graph::from_edges(next, &edges)?, labels: Some(labels) })
}

/// Multiplicities `f(k)` for heights `k = 1..=h` of the transient tree.
pub fn transient_multiplicities(h: usize, d: &[f64]) -> Result<Vec<usize>> {
    param(d.len() >= h + 2, || format!("need d[0..={}], got {} entries", h + 1, d.len()))?;
    for (k, &dk) in d.iter().enumerate() {
        let cap = 2f64.powf(k as f64 / 4.0);
        if !(dk.is_finite() && dk > 0.0 && dk <= cap + 1e-12) {
            return Err(Error::InvalidParameter(format!("d[{k}] = {dk} must lie in (0, 2^({k}/4)] = (0, {cap}]")));
        }
    }
    (1..=h)
        .map(|k| {
            let f = 2.0 * d[k] - d[k + 1];
            if f <= 0.0 {
                Err(Error::InvalidParameter(format!("2 d[{k}] - d[{}] = {f} is not positive", k + 1)))
            } else {
                Ok((f.floor() as usize).max(1))
            }
        })
        .collect()
}

fn transient_tree(h: usize, d: &[f64], max_vertices: usize) -> Result<Generated> {
    let f = transient_multiplicities(h, d)?;
    let tree_n = checked_pow2(h + 1)? - 1;
    // heap order, root at height h; node i at depth t has height h - t
    let mut total = tree_n;
    for i in 1..tree_n {
        let depth = (usize::BITS - 1 - (i + 1).leading_zeros()) as usize;
        let height = h - depth + 1;
        total = total.saturating_add(f[height - 1]);
    }
    cap(total, max_vertices)?;
    let mut edges = Vec::with_capacity(2 * total);
    let mut labels: Vec<String> = (0..tree_n).map(|i| format!("t{i}")).collect();
    let mut next = tree_n;
    for i in 1..tree_n {
        let parent = (i - 1) / 2;
        let depth = (usize::BITS - 1 - (i + 1).leading_zeros()) as usize;
        let height = h - depth + 1;
        for c in 0..f[height - 1] {
            edges.push((parent, next));
            edges.push((next, i));
            labels.push(format!("m{parent}-{i}.{c}"));
            next += 1;
        }
    }
    Ok(Generated { graph: Graph::from_edges(next, &edges)?, labels: Some(labels) })
}
