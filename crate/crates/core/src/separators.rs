//! Annulus vertex separators, barrier sets built from them, the conformal
//! weights those barriers induce, and the subdiffusivity pipeline.

use std::collections::VecDeque;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{check_vertex, param, Error, Result};
use crate::exec;
use crate::graph::{basel_coefficients, combine_weights, ConformalWeight, Dijkstra, Graph};
use crate::resistance::interior_vertices;
use crate::rng;
use crate::stats::ols_slope;
use crate::walks::{speed_profile, Metric, SpeedProfile, Start};

/// A vertex set inside the annulus `r < dist_G(x, ·) <= r_outer` separating
/// `x` from every vertex farther than `r_outer`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatorResult {
    pub x: usize,
    pub r: usize,
    pub r_outer: usize,
    pub cut: Vec<usize>,
    pub kappa: usize,
    /// `Σ_{y ∈ cut} 1 / |B_G(y, r)|`, on the cut that was found.
    pub q: f64,
}

const INF: u32 = u32::MAX;

/// Residual network for unit vertex capacities.
struct FlowNet {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<u32>,
}

impl FlowNet {
    fn new(nodes: usize) -> Self {
        FlowNet { head: vec![Vec::new(); nodes], to: Vec::new(), cap: Vec::new() }
    }

    fn add(&mut self, a: usize, b: usize, c: u32) {
        self.head[a].push(self.to.len());
        self.to.push(b);
        self.cap.push(c);
        self.head[b].push(self.to.len());
        self.to.push(a);
        self.cap.push(0);
    }

    /// Nodes reachable from `s` in the residual graph, and the predecessor edge of each.
    fn search(&self, s: usize) -> Vec<usize> {
        let mut pred = vec![usize::MAX; self.head.len()];
        pred[s] = usize::MAX - 1;
        let mut q = VecDeque::from([s]);
        while let Some(a) = q.pop_front() {
            for &e in &self.head[a] {
                let b = self.to[e];
                if self.cap[e] > 0 && pred[b] == usize::MAX {
                    pred[b] = e;
                    q.push_back(b);
                }
            }
        }
        pred
    }

    /// Shortest augmenting paths until none is left; returns the flow value.
    fn max_flow(&mut self, s: usize, t: usize) -> usize {
        let mut flow = 0;
        loop {
            let pred = self.search(s);
            if pred[t] == usize::MAX {
                return flow;
            }
            let mut v = t;
            while v != s {
                let e = pred[v];
                if self.cap[e] != INF {
                    self.cap[e] -= 1;
                }
                if self.cap[e ^ 1] != INF {
                    self.cap[e ^ 1] += 1;
                }
                v = self.to[e ^ 1];
            }
            flow += 1;
        }
    }
}

/// Sizes `|B_G(y, r)|` for every vertex.
pub fn graph_ball_sizes(g: &Graph, r: usize) -> Vec<usize> {
    exec::map_range(g.n(), |y| g.graph_ball(y, r).len())
}

/// Whether removing `cut` leaves no path from `x` to a vertex farther than `r_outer`.
pub fn separates(g: &Graph, x: usize, r_outer: usize, cut: &[usize]) -> bool {
    let mut removed = vec![false; g.n()];
    for &c in cut {
        removed[c] = true;
    }
    if removed[x] {
        return true;
    }
    let dist = g.bfs(x);
    let mut seen = vec![false; g.n()];
    seen[x] = true;
    let mut q = VecDeque::from([x]);
    while let Some(v) = q.pop_front() {
        if dist[v] > r_outer {
            return false;
        }
        for &y in g.neighbors(v) {
            if !removed[y] && !seen[y] {
                seen[y] = true;
                q.push_back(y);
            }
        }
    }
    true
}

fn min_cut_inner(g: &Graph, x: usize, r: usize, r_outer: usize) -> Result<Vec<usize>> {
    let ball = g.graph_ball(x, r_outer + 1);
    if ball.iter().all(|&(_, d)| d <= r_outer) {
        return Err(Error::NoExterior);
    }
    let mut local = std::collections::HashMap::new();
    let annulus: Vec<usize> = ball.iter().filter(|&&(_, d)| d > r && d <= r_outer).map(|&(v, _)| v).collect();
    for (i, &v) in annulus.iter().enumerate() {
        local.insert(v, i);
    }
    let dist: std::collections::HashMap<usize, usize> = ball.iter().copied().collect();
    let (s, t) = (0, 1);
    let mut net = FlowNet::new(2 + 2 * annulus.len());
    for (i, &a) in annulus.iter().enumerate() {
        let (a_in, a_out) = (2 + 2 * i, 3 + 2 * i);
        net.add(a_in, a_out, 1);
        let (mut from_source, mut to_sink) = (false, false);
        for &b in g.neighbors(a) {
            match dist.get(&b) {
                Some(&d) if d <= r => from_source = true,
                Some(&d) if d <= r_outer => net.add(a_out, 2 + 2 * local[&b], INF),
                _ => to_sink = true,
            }
        }
        if from_source {
            net.add(s, a_in, INF);
        }
        if to_sink {
            net.add(a_out, t, INF);
        }
    }
    net.max_flow(s, t);
    let reach = net.search(s);
    let mut cut: Vec<usize> = annulus
        .iter()
        .enumerate()
        .filter(|&(i, _)| reach[2 + 2 * i] != usize::MAX && reach[3 + 2 * i] == usize::MAX)
        .map(|(_, &v)| v)
        .collect();
    cut.sort_unstable();
    Ok(cut)
}

/// Minimum vertex separator inside the annulus, by unit-capacity max-flow on
/// the split annulus with `B_G(x, r)` contracted to the source and the
/// exterior contracted to the sink.
pub fn min_vertex_cut_annulus(g: &Graph, x: usize, r: usize, r_outer: usize) -> Result<SeparatorResult> {
    check_vertex(x, g.n())?;
    param(0 < r && r < r_outer, || format!("need 0 < r < r', got r = {r}, r' = {r_outer}"))?;
    let cut = min_cut_inner(g, x, r, r_outer)?;
    if !separates(g, x, r_outer, &cut) {
        return Err(Error::Invariant(format!("cut at {x} does not separate")));
    }
    let q = cut.iter().map(|&y| 1.0 / g.graph_ball(y, r).len() as f64).sum();
    Ok(SeparatorResult { x, r, r_outer, kappa: cut.len(), cut, q })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringSeparator {
    pub x: usize,
    pub tau: usize,
    pub separator: Vec<usize>,
    /// Centres of a greedy `τ`-net covering `B_G(x, 4τ)`.
    pub net: Vec<usize>,
    /// `(λ + 1)(2τ + 1)` with `λ` the net size.
    pub bound: usize,
    pub within_bound: bool,
}

/// A set in `B(x, 6τ) ∖ B(x, τ)` separating `B(x, τ)` from the rest of the
/// graph, checked against the covering-number size bound for planar graphs.
/// The set is the minimum annulus cut, so it is no larger than any set the
/// covering construction would give. Empty when `B(x, 6τ)` is everything.
pub fn bp_covering_separator(g: &Graph, x: usize, tau: usize) -> Result<CoveringSeparator> {
    check_vertex(x, g.n())?;
    param(tau >= 1, || "tau must be at least 1".into())?;
    let separator = match min_vertex_cut_annulus(g, x, tau, 6 * tau) {
        Ok(s) => s.cut,
        Err(Error::NoExterior) => Vec::new(),
        Err(e) => return Err(e),
    };
    let mut covered = vec![false; g.n()];
    let mut net = Vec::new();
    for (v, _) in g.graph_ball(x, 4 * tau) {
        if !covered[v] {
            net.push(v);
            for (y, _) in g.graph_ball(v, tau) {
                covered[y] = true;
            }
        }
    }
    let bound = (net.len() + 1) * (2 * tau + 1);
    Ok(CoveringSeparator { x, tau, within_bound: separator.len() <= bound, separator, net, bound })
}

/// One separator per vertex for fixed radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatorTable {
    pub r: usize,
    pub r_outer: usize,
    /// `cuts[x]`; empty when `B_G(x, r_outer)` has no exterior.
    pub cuts: Vec<Vec<usize>>,
    pub q: Vec<f64>,
    /// `|B_G(y, r)|` for every vertex.
    pub ball_sizes: Vec<usize>,
}

impl SeparatorTable {
    /// Minimum annulus cuts for every vertex, computed concurrently.
    pub fn min_cuts(g: &Graph, r: usize, r_outer: usize) -> Result<Self> {
        param(0 < r && r < r_outer, || format!("need 0 < r < r', got r = {r}, r' = {r_outer}"))?;
        let cuts = exec::map_range(g.n(), |x| match min_cut_inner(g, x, r, r_outer) {
            Ok(c) => Ok(c),
            Err(Error::NoExterior) => Ok(Vec::new()),
            Err(e) => Err(e),
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_cuts(g, r, r_outer, cuts))
    }

    pub fn from_cuts(g: &Graph, r: usize, r_outer: usize, cuts: Vec<Vec<usize>>) -> Self {
        let ball_sizes = graph_ball_sizes(g, r);
        let q = cuts.iter().map(|c| c.iter().map(|&y| 1.0 / ball_sizes[y] as f64).sum()).collect();
        SeparatorTable { r, r_outer, cuts, q, ball_sizes }
    }

    /// `(1/n) Σ_x q_G(x; r, r')` on the stored cuts.
    pub fn mean_q(&self) -> f64 {
        self.q.iter().sum::<f64>() / self.q.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierSet {
    pub r: usize,
    pub r_outer: usize,
    pub members: Vec<usize>,
    /// `dist_G`-diameter of each component of `G[V ∖ W]`; the value
    /// `2 r_outer + 1` stands for anything larger than `2 r_outer`.
    pub component_diameters: Vec<usize>,
    pub seed: u64,
}

impl BarrierSet {
    pub fn fraction(&self, n: usize) -> f64 {
        self.members.len() as f64 / n as f64
    }

    pub fn diameters_hold(&self) -> bool {
        self.component_diameters.iter().all(|&d| d <= 2 * self.r_outer)
    }
}

/// Bounded BFS in `G` from `v`: the largest distance to a member of `comp`
/// (labelled `label`), or `None` if some member is farther than `limit`.
fn eccentricity_within(g: &Graph, v: usize, comp_of: &[usize], label: usize, size: usize, limit: usize) -> Option<usize> {
    let ball = g.graph_ball(v, limit);
    let mut hit = 0;
    let mut far = 0;
    for (y, d) in ball {
        if comp_of[y] == label {
            hit += 1;
            far = far.max(d);
        }
    }
    (hit == size).then_some(far)
}

/// Component diameters of `G[V ∖ W]` measured in `dist_G`, saturated at `limit + 1`.
pub fn component_diameters(g: &Graph, members: &[usize], limit: usize) -> Vec<usize> {
    let mut keep = vec![true; g.n()];
    for &w in members {
        keep[w] = false;
    }
    let comps = g.components(&keep);
    let mut comp_of = vec![usize::MAX; g.n()];
    for (i, c) in comps.iter().enumerate() {
        for &v in c {
            comp_of[v] = i;
        }
    }
    exec::map_range(comps.len(), |i| {
        let c = &comps[i];
        let mut diam = 0;
        for &v in c {
            match eccentricity_within(g, v, &comp_of, i, c.len(), limit) {
                Some(e) => diam = diam.max(e),
                None => return limit + 1,
            }
        }
        diam
    })
}

/// Cut out the stored separators in the order of i.i.d. uniform labels `β`:
/// `Û_x = U_x ∖ ∪_{β_y < β_x} B_G(y, r)` and `W = ∪ Û_x`.
pub fn barrier(g: &Graph, table: &SeparatorTable, seed: u64) -> Result<BarrierSet> {
    param(table.cuts.len() == g.n(), || "separator table does not match the graph".into())?;
    let n = g.n();
    let mut rng = rng::stream(seed, "barrier", 0);
    let beta: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    // Smallest label within distance r of each vertex.
    let min_near: Vec<f64> = exec::map_range(n, |y| {
        g.graph_ball(y, table.r).iter().map(|&(z, _)| beta[z]).fold(f64::INFINITY, f64::min)
    });
    let mut member = vec![false; n];
    for x in 0..n {
        for &y in &table.cuts[x] {
            if min_near[y] >= beta[x] {
                member[y] = true;
            }
        }
    }
    let members: Vec<usize> = (0..n).filter(|&v| member[v]).collect();
    let component_diameters = component_diameters(g, &members, 2 * table.r_outer);
    let set = BarrierSet { r: table.r, r_outer: table.r_outer, members, component_diameters, seed };
    if !set.diameters_hold() {
        return Err(Error::Invariant(format!(
            "barrier at r = {}, r' = {} leaves a component of diameter above {}",
            table.r,
            table.r_outer,
            2 * table.r_outer
        )));
    }
    Ok(set)
}

#[derive(Clone, Debug)]
pub struct ScaleWeight {
    /// 1-based position of the barrier in the input list.
    pub index: usize,
    pub r: usize,
    pub r_outer: usize,
    /// `max(|W| / n, 1 / n)`.
    pub p: f64,
    /// `1_W / sqrt(p)`.
    pub weight: ConformalWeight,
}

#[derive(Clone, Debug)]
pub struct BarrierMetric {
    pub scales: Vec<ScaleWeight>,
    /// `sqrt((6/π²) Σ_j ω_j² / j²)` with `j` the barrier's position.
    pub weight: ConformalWeight,
}

/// Conformal weights `1_W / sqrt(p)` per barrier and their combination.
/// Empty barriers are skipped.
pub fn barrier_metric(g: &Graph, barriers: &[BarrierSet]) -> Result<BarrierMetric> {
    let n = g.n();
    let coeff = basel_coefficients(barriers.len());
    let mut scales = Vec::new();
    let mut used = Vec::new();
    for (i, b) in barriers.iter().enumerate() {
        if b.members.is_empty() {
            continue;
        }
        let p = (b.members.len() as f64 / n as f64).max(1.0 / n as f64);
        let mut values = vec![0.0; n];
        for &w in &b.members {
            check_vertex(w, n)?;
            values[w] = 1.0 / p.sqrt();
        }
        scales.push(ScaleWeight { index: i + 1, r: b.r, r_outer: b.r_outer, p, weight: ConformalWeight::new(values)? });
        used.push(coeff[i]);
    }
    if scales.is_empty() {
        return Err(Error::InvalidParameter("every barrier is empty".into()));
    }
    let ws: Vec<ConformalWeight> = scales.iter().map(|s| s.weight.clone()).collect();
    let weight = combine_weights(&ws, &used)?;
    Ok(BarrierMetric { scales, weight })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub r_outer: usize,
    pub pairs: usize,
    /// Smallest `dist_{ω_j}(x, y) · sqrt(p_j)` over the checked pairs.
    pub min_scaled_distance: f64,
    pub holds: bool,
}

/// For pairs outside `W` with `dist_G > 2 r'`, every connecting path has an
/// interior vertex in `W`, so `dist_{ω_j} >= 1 / sqrt(p_j)`. Checks this on
/// up to `pairs` random pairs.
pub fn crossing_check(g: &Graph, scale: &ScaleWeight, pairs: usize, seed: u64) -> CrossingReport {
    let n = g.n();
    let outside: Vec<usize> = (0..n).filter(|&v| scale.weight[v] == 0.0).collect();
    let mut rng = rng::stream(seed, "crossing", scale.index as u64);
    let mut dj = Dijkstra::new(g, &scale.weight);
    let mut min_scaled = f64::INFINITY;
    let mut done = 0;
    let mut attempts = 0;
    while done < pairs && attempts < 50 * pairs && !outside.is_empty() {
        attempts += 1;
        let x = outside[rng.random_range(0..outside.len())];
        let dist = g.bfs(x);
        let far: Vec<usize> = outside.iter().copied().filter(|&y| dist[y] > 2 * scale.r_outer).collect();
        if far.is_empty() {
            continue;
        }
        let y = far[rng.random_range(0..far.len())];
        let mut d = f64::INFINITY;
        dj.run_until(&[x], f64::INFINITY, |v, dv| {
            if v == y {
                d = dv;
            }
            v != y
        });
        min_scaled = min_scaled.min(d * scale.p.sqrt());
        done += 1;
    }
    CrossingReport { r_outer: scale.r_outer, pairs: done, min_scaled_distance: min_scaled, holds: min_scaled >= 1.0 - 1e-12 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubdiffParams {
    /// Inner barrier radii `r`; the outer radius is `ratio · r`.
    pub scales: Vec<usize>,
    pub ratio: usize,
    pub t_grid: Vec<usize>,
    pub trials: usize,
    /// Starts lie farther than this from any vertex of less than maximum
    /// degree, and a walk touching such a vertex is discarded.
    pub collar: usize,
    /// Roots used to fit the growth and separator exponents.
    pub fit_roots: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSummary {
    pub r: usize,
    pub r_outer: usize,
    pub barrier_size: usize,
    pub p: f64,
    pub mean_q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalRow {
    pub t: usize,
    pub mean_sq: f64,
    pub stderr_sq: f64,
    /// `E dist_ω(X_0, X_t)² / (t (ln t)²)`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubdiffReport {
    /// Fitted `d` in `|B_G(x, r)| ≈ r^d`.
    pub growth_exponent: f64,
    /// Fitted `k` in `κ(x; r, ratio·r) ≈ r^{k-1}`.
    pub separator_exponent: f64,
    /// `1 / (d - k + 1)`.
    pub predicted_exponent: f64,
    pub scales: Vec<ScaleSummary>,
    pub speed: SpeedProfile,
    pub speed_exponent: f64,
    pub conformal: Vec<ConformalRow>,
    pub conformal_discarded: usize,
}

fn collar_mask(g: &Graph, collar: usize) -> (Vec<usize>, Option<Vec<bool>>) {
    let inner = interior_vertices(g, collar);
    if inner.len() == g.n() {
        return (inner, None);
    }
    let dmax = g.max_degree();
    let mask = (0..g.n()).map(|v| g.degree(v) < dmax).collect();
    (inner, Some(mask))
}

/// Barriers at each scale, the combined barrier metric, and Monte Carlo speed
/// in `dist_G` and `dist_ω`.
pub fn subdiffusivity_experiment(g: &Graph, params: &SubdiffParams, seed: u64) -> Result<SubdiffReport> {
    param(!params.scales.is_empty() && params.ratio >= 2, || "need scales and ratio >= 2".into())?;
    param(params.t_grid.iter().all(|&t| t >= 2), || "walk times must be at least 2".into())?;
    let (inner, mask) = collar_mask(g, params.collar);
    param(!inner.is_empty(), || "collar leaves no starting vertex".into())?;

    let step = (inner.len() / params.fit_roots.max(1)).max(1);
    let roots: Vec<usize> = inner.iter().copied().step_by(step).take(params.fit_roots.max(1)).collect();
    let mut growth = Vec::new();
    let mut sep = Vec::new();
    let mut barriers = Vec::new();
    let mut scales = Vec::new();
    for (j, &r) in params.scales.iter().enumerate() {
        let r_outer = params.ratio * r;
        let vol: f64 = roots.iter().map(|&x| g.graph_ball(x, r).len() as f64).sum::<f64>() / roots.len() as f64;
        growth.push(((r as f64).ln(), vol.ln()));
        let kappas: Vec<f64> = exec::map_slice(&roots, |&x| min_cut_inner(g, x, r, r_outer).map(|c| c.len() as f64))
            .into_iter()
            .filter_map(|k| k.ok())
            .collect();
        if !kappas.is_empty() {
            let mk = kappas.iter().sum::<f64>() / kappas.len() as f64;
            sep.push(((r as f64).ln(), mk.max(1.0).ln()));
        }
        let table = SeparatorTable::min_cuts(g, r, r_outer)?;
        let b = barrier(g, &table, rng::derive(seed, &format!("scale-{j}")))?;
        scales.push(ScaleSummary {
            r,
            r_outer,
            barrier_size: b.members.len(),
            p: b.fraction(g.n()),
            mean_q: table.mean_q(),
        });
        barriers.push(b);
    }
    let d = if growth.len() >= 2 { ols_slope(&growth) } else { f64::NAN };
    let k = if sep.len() >= 2 { ols_slope(&sep) + 1.0 } else { f64::NAN };
    let metric = barrier_metric(g, &barriers)?;

    let forbidden = mask.as_deref();
    let speed = speed_profile(g, Metric::Graph, Start::Uniform, &params.t_grid, params.trials, forbidden, seed)?;
    let speed_exponent = speed.slope();
    let conf = speed_profile(
        g,
        Metric::Conformal(&metric.weight),
        Start::Uniform,
        &params.t_grid,
        params.trials,
        forbidden,
        rng::derive(seed, "conformal"),
    )?;
    let conformal = conf
        .rows
        .iter()
        .map(|row| {
            let lt = (row.t as f64).ln();
            ConformalRow { t: row.t, mean_sq: row.mean_sq, stderr_sq: row.stderr_sq, ratio: row.mean_sq / (row.t as f64 * lt * lt) }
        })
        .collect();
    Ok(SubdiffReport {
        growth_exponent: d,
        separator_exponent: k,
        predicted_exponent: 1.0 / (d - k + 1.0),
        scales,
        speed,
        speed_exponent,
        conformal,
        conformal_discarded: conf.discarded,
    })
}
