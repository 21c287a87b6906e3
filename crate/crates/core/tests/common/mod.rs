//! Oracles shared by the integration suites.
#![allow(dead_code)]

use std::collections::VecDeque;

use conformal_core::graph::Graph;
use rand::Rng;

/// Random connected graph: uniform random recursive tree plus `extra` random edges.
pub fn random_connected(n: usize, extra: usize, rng: &mut impl Rng) -> Graph {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (rng.random_range(0..i), i)).collect();
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.push((a.min(b), a.max(b)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Graph::from_edges(n, &edges).unwrap()
}

/// Whether `x` still reaches a vertex beyond `r_outer` once `removed` is deleted.
fn escapes(g: &Graph, x: usize, r_outer: usize, hops: &[usize], removed: &[bool]) -> bool {
    let mut seen = vec![false; g.n()];
    seen[x] = true;
    let mut q = VecDeque::from([x]);
    while let Some(v) = q.pop_front() {
        if hops[v] > r_outer {
            return true;
        }
        for &u in g.neighbors(v) {
            if !seen[u] && !removed[u] {
                seen[u] = true;
                q.push_back(u);
            }
        }
    }
    false
}

/// Smallest annulus subset separating `x` from the exterior, by exhaustive
/// search over subsets in increasing size. `None` when there is no exterior.
pub fn brute_force_kappa(g: &Graph, x: usize, r: usize, r_outer: usize) -> Option<usize> {
    let hops = g.bfs(x);
    if hops.iter().all(|&d| d <= r_outer) {
        return None;
    }
    let annulus: Vec<usize> = (0..g.n()).filter(|&v| hops[v] > r && hops[v] <= r_outer).collect();
    assert!(annulus.len() <= 20, "annulus too large for exhaustive search");
    let mut best = annulus.len();
    let mut removed = vec![false; g.n()];
    for mask in 0u32..(1 << annulus.len()) {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        for (i, &v) in annulus.iter().enumerate() {
            removed[v] = mask >> i & 1 == 1;
        }
        if !escapes(g, x, r_outer, &hops, &removed) {
            best = size;
        }
    }
    Some(best)
}

/// Law of a simple walk on Z after `t` steps, folded onto Z/nZ, by direct
/// step-by-step convolution.
pub fn folded_walk_law(n: usize, t: usize) -> Vec<f64> {
    let width = 2 * t + 1;
    let mut p = vec![0.0; width];
    p[t] = 1.0;
    for _ in 0..t {
        let mut q = vec![0.0; width];
        for i in 0..width {
            if p[i] != 0.0 {
                q[i - 1] += 0.5 * p[i];
                q[i + 1] += 0.5 * p[i];
            }
        }
        p = q;
    }
    let mut folded = vec![0.0; n];
    for (i, &v) in p.iter().enumerate() {
        let z = i as i64 - t as i64;
        folded[z.rem_euclid(n as i64) as usize] += v;
    }
    folded
}

/// Expected cycle distance under a law on Z/nZ.
pub fn mean_cycle_distance(law: &[f64]) -> f64 {
    let n = law.len();
    law.iter().enumerate().map(|(k, p)| p * k.min(n - k) as f64).sum()
}
