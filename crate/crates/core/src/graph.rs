//! Graphs, conformal weights, conformal distances and degree statistics.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{check_vertex, param, Error, Result};
use crate::exec;

/// Immutable undirected simple connected graph in compressed adjacency form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    adj: Vec<usize>,
    m: usize,
}

impl Graph {
    /// Build from an edge list. Loops, repeated edges and disconnected inputs are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        let mut deg = vec![0usize; n];
        for &(u, v) in edges {
            check_vertex(u, n)?;
            check_vertex(v, n)?;
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            deg[u] += 1;
            deg[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &deg {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut adj = vec![0usize; offsets[n]];
        for &(u, v) in edges {
            adj[fill[u]] = v;
            fill[u] += 1;
            adj[fill[v]] = u;
            fill[v] += 1;
        }
        for x in 0..n {
            let row = &mut adj[offsets[x]..offsets[x + 1]];
            row.sort_unstable();
            if let Some(w) = row.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidGraph(format!("repeated edge {{{x}, {}}}", w[0])));
            }
        }
        let g = Graph { offsets, adj, m: edges.len() };
        let comps = g.component_count();
        if comps != 1 {
            return Err(Error::Disconnected { components: comps });
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self, x: usize) -> usize {
        self.offsets[x + 1] - self.offsets[x]
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.adj[self.offsets[x]..self.offsets[x + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|x| self.degree(x)).max().unwrap_or(0)
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u).iter().copied().filter(move |&v| v > u).map(move |v| (u, v))
        })
    }

    fn component_count(&self) -> usize {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(x) = stack.pop() {
                for &y in self.neighbors(x) {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        count
    }

    /// Graph distances from `source`; every vertex is reachable.
    pub fn bfs(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        dist[source] = 0;
        let mut q = VecDeque::from([source]);
        while let Some(x) = q.pop_front() {
            for &y in self.neighbors(x) {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    q.push_back(y);
                }
            }
        }
        dist
    }

    /// Closed graph ball `B_G(x, r)` as `(vertex, distance)` pairs in BFS order.
    pub fn graph_ball(&self, x: usize, r: usize) -> Vec<(usize, usize)> {
        let mut seen = std::collections::HashMap::new();
        seen.insert(x, 0usize);
        let mut out = vec![(x, 0)];
        let mut head = 0;
        while head < out.len() {
            let (v, d) = out[head];
            head += 1;
            if d == r {
                continue;
            }
            for &y in self.neighbors(v) {
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(y) {
                    e.insert(d + 1);
                    out.push((y, d + 1));
                }
            }
        }
        out
    }

    /// Connected components of the subgraph induced by vertices with `keep[v]`.
    pub fn components(&self, keep: &[bool]) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for s in 0..n {
            if !keep[s] || seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut head = 0;
            while head < comp.len() {
                let x = comp[head];
                head += 1;
                for &y in self.neighbors(x) {
                    if keep[y] && !seen[y] {
                        seen[y] = true;
                        comp.push(y);
                    }
                }
            }
            comps.push(comp);
        }
        comps
    }
}

/// Nonnegative vertex weight defining edge lengths `(w(u) + w(v)) / 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalWeight {
    values: Vec<f64>,
    l2_norm: f64,
}

fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

impl ConformalWeight {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("weight at vertex {i} is {v}")));
        }
        let l2_norm = rms(&values);
        Ok(ConformalWeight { values, l2_norm })
    }

    pub fn uniform(n: usize, c: f64) -> Self {
        ConformalWeight::new(vec![c; n]).expect("uniform weight must be finite and nonnegative")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `sqrt((1/n) Σ w(x)²)`.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm
    }

    pub fn is_normalized(&self) -> bool {
        (self.l2_norm - 1.0).abs() <= 1e-9
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        ConformalWeight::new(self.values.iter().map(|v| v * c).collect())
    }

    /// Rescale to unit root-mean-square.
    pub fn normalized(&self) -> Result<Self> {
        if self.l2_norm == 0.0 {
            return Err(Error::ZeroFunction);
        }
        self.scaled(1.0 / self.l2_norm)
    }

    pub fn check_len(&self, g: &Graph) -> Result<()> {
        param(self.len() == g.n(), || format!("weight has {} entries, graph has {} vertices", self.len(), g.n()))
    }
}

impl std::ops::Index<usize> for ConformalWeight {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Reusable Dijkstra state for repeated bounded searches on one graph.
///
/// Vertices are settled in order of `(distance, index)`, so the output is
/// deterministic even when distances tie.
pub struct Dijkstra<'a> {
    g: &'a Graph,
    w: &'a [f64],
    dist: Vec<f64>,
    done: Vec<bool>,
    touched: Vec<usize>,
    heap: BinaryHeap<Reverse<Key>>,
    settled: Vec<(usize, f64)>,
}

impl<'a> Dijkstra<'a> {
    pub fn new(g: &'a Graph, w: &'a ConformalWeight) -> Self {
        Dijkstra {
            g,
            w: w.values(),
            dist: vec![f64::INFINITY; g.n()],
            done: vec![false; g.n()],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
            settled: Vec::new(),
        }
    }

    /// Settle every vertex within `limit` of the source set, returning
    /// `(vertex, distance)` in settle order.
    pub fn run(&mut self, sources: &[usize], limit: f64) -> &[(usize, f64)] {
        self.run_until(sources, limit, |_, _| true);
        &self.settled
    }

    /// Like [`Dijkstra::run`] but stops as soon as `visit` returns `false`
    /// for a settled vertex. Returns `false` when the search was stopped early.
    pub fn run_until<F>(&mut self, sources: &[usize], limit: f64, mut visit: F) -> bool
    where
        F: FnMut(usize, f64) -> bool,
    {
        for &v in &self.touched {
            self.dist[v] = f64::INFINITY;
            self.done[v] = false;
        }
        self.touched.clear();
        self.heap.clear();
        self.settled.clear();
        for &s in sources {
            if self.dist[s] > 0.0 {
                self.dist[s] = 0.0;
                self.touched.push(s);
                self.heap.push(Reverse(Key(0.0, s)));
            }
        }
        while let Some(Reverse(Key(d, x))) = self.heap.pop() {
            if self.done[x] || d > self.dist[x] {
                continue;
            }
            if d > limit {
                break;
            }
            self.done[x] = true;
            self.settled.push((x, d));
            if !visit(x, d) {
                return false;
            }
            let wx = self.w[x];
            for &y in self.g.neighbors(x) {
                if self.done[y] {
                    continue;
                }
                let nd = d + 0.5 * (wx + self.w[y]);
                if nd < self.dist[y] {
                    if self.dist[y] == f64::INFINITY {
                        self.touched.push(y);
                    }
                    self.dist[y] = nd;
                    self.heap.push(Reverse(Key(nd, y)));
                }
            }
        }
        true
    }

    /// Vertices settled by the last search, in settle order.
    pub fn settled(&self) -> &[(usize, f64)] {
        &self.settled
    }

    /// Distance from the source set to the nearest vertex failing `inside`,
    /// or infinity if there is none within `limit`.
    pub fn escape_distance<F>(&mut self, sources: &[usize], limit: f64, inside: F) -> f64
    where
        F: Fn(usize) -> bool,
    {
        let mut hit = f64::INFINITY;
        self.run_until(sources, limit, |v, d| {
            if inside(v) {
                true
            } else {
                hit = d;
                false
            }
        });
        hit
    }

    /// Distance of `v` after the last run; infinite when `v` was not settled.
    pub fn distance(&self, v: usize) -> f64 {
        if self.done[v] {
            self.dist[v]
        } else {
            f64::INFINITY
        }
    }
}

/// Length of edge `{u, v}` under `w`.
pub fn edge_length(w: &ConformalWeight, u: usize, v: usize) -> f64 {
    0.5 * (w[u] + w[v])
}

/// Exact conformal distances from `source` to every vertex.
pub fn conformal_distance(g: &Graph, w: &ConformalWeight, source: usize) -> Result<Vec<f64>> {
    check_vertex(source, g.n())?;
    w.check_len(g)?;
    let mut dj = Dijkstra::new(g, w);
    let mut out = vec![f64::INFINITY; g.n()];
    for &(v, d) in dj.run(&[source], f64::INFINITY) {
        out[v] = d;
    }
    Ok(out)
}

/// Closed ball `{y : dist_w(x, y) <= r}`, sorted by vertex index.
pub fn conformal_ball(g: &Graph, w: &ConformalWeight, x: usize, r: f64) -> Result<Vec<usize>> {
    check_vertex(x, g.n())?;
    w.check_len(g)?;
    param(r >= 0.0, || format!("radius must be nonnegative, got {r}"))?;
    let mut dj = Dijkstra::new(g, w);
    let mut ball: Vec<usize> = dj.run(&[x], r).iter().map(|p| p.0).collect();
    ball.sort_unstable();
    Ok(ball)
}

/// `Σ w(y)²` over the closed ball of radius `r` about `x`.
pub fn area_omega(g: &Graph, w: &ConformalWeight, x: usize, r: f64) -> Result<f64> {
    Ok(conformal_ball(g, w, x, r)?.iter().map(|&y| w[y] * w[y]).sum())
}

/// Ball cardinalities `|B_w(x, r)|` for every vertex.
pub fn ball_sizes(g: &Graph, w: &ConformalWeight, r: f64) -> Vec<usize> {
    exec::map_range_with(g.n(), || Dijkstra::new(g, w), |dj, x| dj.run(&[x], r).len())
}

/// Ball areas `area_w(x, r)` for every vertex.
pub fn ball_areas(g: &Graph, w: &ConformalWeight, r: f64) -> Vec<f64> {
    exec::map_range_with(
        g.n(),
        || Dijkstra::new(g, w),
        |dj, x| dj.run(&[x], r).iter().map(|&(y, _)| w[y] * w[y]).sum(),
    )
}

/// Diameter of a vertex set in the ambient conformal metric.
pub fn set_diameter(g: &Graph, w: &ConformalWeight, set: &[usize]) -> f64 {
    if set.len() <= 1 {
        return 0.0;
    }
    let mut member = vec![false; g.n()];
    for &v in set {
        member[v] = true;
    }
    let per = exec::map_range_with(
        set.len(),
        || Dijkstra::new(g, w),
        |dj, i| {
            let mut remaining = set.len();
            let mut far: f64 = 0.0;
            for &(v, d) in dj.run(&[set[i]], f64::INFINITY) {
                if member[v] {
                    far = far.max(d);
                    remaining -= 1;
                    if remaining == 0 {
                        break;
                    }
                }
            }
            far
        },
    );
    per.into_iter().fold(0.0, f64::max)
}

/// Sorted degree sequence with prefix sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeProfile {
    sorted_degrees: Vec<usize>,
    prefix_sums: Vec<usize>,
    degrees: Vec<usize>,
    two_m: usize,
}

const ROUNDING_SLACK: f64 = 1e-9;

impl DegreeProfile {
    pub fn new(g: &Graph) -> Self {
        let degrees: Vec<usize> = (0..g.n()).map(|x| g.degree(x)).collect();
        let mut sorted_degrees = degrees.clone();
        sorted_degrees.sort_unstable_by(|a, b| b.cmp(a));
        let mut prefix_sums = Vec::with_capacity(g.n() + 1);
        prefix_sums.push(0);
        for d in &sorted_degrees {
            prefix_sums.push(prefix_sums.last().unwrap() + d);
        }
        DegreeProfile { sorted_degrees, prefix_sums, degrees, two_m: 2 * g.m() }
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn sorted_degrees(&self) -> &[usize] {
        &self.sorted_degrees
    }

    /// Sum of the `k` largest degrees; `k` beyond `n` saturates.
    pub fn top_degree_sum(&self, k: usize) -> usize {
        self.prefix_sums[k.min(self.n())]
    }

    /// Average of the `⌈εn⌉` largest degrees (at least one vertex, at most all).
    pub fn mean_top_degree(&self, eps: f64) -> Result<f64> {
        param(eps > 0.0 && eps.is_finite(), || format!("epsilon must be positive, got {eps}"))?;
        let k = ((eps * self.n() as f64 - ROUNDING_SLACK).ceil() as usize).clamp(1, self.n());
        Ok(self.top_degree_sum(k) as f64 / k as f64)
    }

    /// Stationary measure `deg(x) / 2m`.
    pub fn pi(&self, x: usize) -> f64 {
        self.degrees[x] as f64 / self.two_m as f64
    }

    pub fn pi_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&x| self.degrees[x]).sum::<usize>() as f64 / self.two_m as f64
    }

    /// Largest stationary mass of a set of at most `⌊βn⌋` vertices.
    pub fn pi_star(&self, beta: f64) -> Result<f64> {
        param(beta >= 0.0 && beta.is_finite(), || format!("beta must be nonnegative, got {beta}"))?;
        let k = (beta * self.n() as f64 + ROUNDING_SLACK).floor() as usize;
        Ok(self.top_degree_sum(k) as f64 / self.two_m as f64)
    }

    pub fn two_m(&self) -> usize {
        self.two_m
    }
}

/// Pointwise `sqrt(Σ c_k w_k(x)²)`.
pub fn combine_weights(weights: &[ConformalWeight], coefficients: &[f64]) -> Result<ConformalWeight> {
    let first = weights.first().ok_or_else(|| Error::InvalidParameter("no weights to combine".into()))?;
    param(weights.len() == coefficients.len(), || "one coefficient per weight required".into())?;
    param(weights.iter().all(|w| w.len() == first.len()), || "weights have different lengths".into())?;
    param(coefficients.iter().all(|c| c.is_finite() && *c > 0.0), || "coefficients must be positive".into())?;
    let values = (0..first.len())
        .map(|x| weights.iter().zip(coefficients).map(|(w, c)| c * w[x] * w[x]).sum::<f64>().sqrt())
        .collect();
    ConformalWeight::new(values)
}

/// The coefficients `(6/π²)/k²` for `k = 1..=count`.
pub fn basel_coefficients(count: usize) -> Vec<f64> {
    let c = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
    (1..=count).map(|k| c / (k * k) as f64).collect()
}

fn exact_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_unstable_by(|a, b| a.total_cmp(b));
    terms.into_iter().sum()
}

/// Sum `F(x, y)` and `F(y, x)` over ordered pairs at graph distance at most
/// `radius`. Both sides are accumulated in sorted order, so they agree bitwise.
pub fn mass_transport_check<F>(g: &Graph, radius: usize, f: F) -> (f64, f64)
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    let rows = exec::map_range(g.n(), |x| {
        g.graph_ball(x, radius).into_iter().map(|(y, _)| (f(x, y), f(y, x))).collect::<Vec<_>>()
    });
    let (lhs, rhs): (Vec<f64>, Vec<f64>) = rows.into_iter().flatten().unzip();
    (exact_sum(lhs), exact_sum(rhs))
}

/// Finite ball-area inequality: returns `(mean area, max ball size · mean w²)`.
pub fn ball_area_check(g: &Graph, w: &ConformalWeight, r: f64) -> (f64, f64) {
    let n = g.n() as f64;
    let areas = ball_areas(g, w, r);
    let sizes = ball_sizes(g, w, r);
    let mean_area = areas.iter().sum::<f64>() / n;
    let mean_sq = w.values().iter().map(|v| v * v).sum::<f64>() / n;
    (mean_area, *sizes.iter().max().unwrap() as f64 * mean_sq)
}
