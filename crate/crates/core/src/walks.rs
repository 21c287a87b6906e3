//! Random-walk simulation, restricted walks, displacement profiles and
//! Markov-type ratios.

use std::collections::VecDeque;

use rand::Rng as _;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{check_vertex, param, Error, Result};
use crate::exec;
use crate::graph::{ConformalWeight, Dijkstra, Graph};
use crate::rng::{self, Rng};
use crate::spectral::{distribution, DENSE_LIMIT};
use crate::stats::{mean_se, ols_slope};

/// Law of the first position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    Vertex(usize),
    Uniform,
    /// Degree-proportional (`π`, or `π_S` for restricted walks).
    Stationary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkTrace {
    pub start: Start,
    pub steps: Vec<usize>,
    pub seed: u64,
}

/// Draws starting vertices from a candidate set.
struct StartSampler {
    start: Start,
    candidates: Vec<usize>,
    alias: Option<WeightedAliasIndex<f64>>,
}

impl StartSampler {
    fn new(g: &Graph, start: Start, candidates: Vec<usize>) -> Result<Self> {
        param(!candidates.is_empty(), || "no admissible starting vertex".into())?;
        let alias = match start {
            Start::Stationary => Some(
                WeightedAliasIndex::new(candidates.iter().map(|&x| g.degree(x) as f64).collect())
                    .map_err(|e| Error::InvalidParameter(format!("stationary law: {e}")))?,
            ),
            Start::Vertex(x) => {
                check_vertex(x, g.n())?;
                param(candidates.contains(&x), || format!("start vertex {x} is not admissible"))?;
                None
            }
            Start::Uniform => None,
        };
        Ok(StartSampler { start, candidates, alias })
    }

    fn sample(&self, rng: &mut Rng) -> usize {
        match (self.start, &self.alias) {
            (Start::Vertex(x), _) => x,
            (Start::Stationary, Some(a)) => self.candidates[a.sample(rng)],
            _ => self.candidates[rng.random_range(0..self.candidates.len())],
        }
    }
}

fn step(g: &Graph, x: usize, rng: &mut Rng) -> usize {
    let nb = g.neighbors(x);
    nb[rng.random_range(0..nb.len())]
}

/// Simple random walk with `t` steps; the trace has `t + 1` vertices.
pub fn simulate(g: &Graph, start: Start, t: usize, seed: u64) -> Result<WalkTrace> {
    let sampler = StartSampler::new(g, start, (0..g.n()).collect())?;
    let mut rng = rng::stream(seed, "walk", 0);
    let mut x = sampler.sample(&mut rng);
    let mut steps = Vec::with_capacity(t + 1);
    steps.push(x);
    for _ in 0..t {
        x = step(g, x, &mut rng);
        steps.push(x);
    }
    Ok(WalkTrace { start, steps, seed })
}

/// The walk restricted to `set`: a proposed move to a neighbour outside the
/// set is replaced by a holding step, so `x` holds with probability
/// `|N(x) ∖ S| / deg(x)`.
pub fn restricted_simulate(g: &Graph, set: &[usize], start: Start, t: usize, seed: u64) -> Result<WalkTrace> {
    let mut inside = vec![false; g.n()];
    for &x in set {
        check_vertex(x, g.n())?;
        inside[x] = true;
    }
    let sampler = StartSampler::new(g, start, set.to_vec())?;
    let mut rng = rng::stream(seed, "restricted-walk", 0);
    let mut x = sampler.sample(&mut rng);
    let mut steps = Vec::with_capacity(t + 1);
    steps.push(x);
    for _ in 0..t {
        let y = step(g, x, &mut rng);
        if inside[y] {
            x = y;
        }
        steps.push(x);
    }
    Ok(WalkTrace { start, steps, seed })
}

/// Metric in which displacements are measured.
#[derive(Clone, Copy, Debug)]
pub enum Metric<'a> {
    Graph,
    Conformal(&'a ConformalWeight),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedRow {
    pub t: usize,
    /// Mean of `dist(X_0, X_t)`.
    pub mean: f64,
    pub stderr: f64,
    /// Mean of `dist(X_0, X_t)²`.
    pub mean_sq: f64,
    pub stderr_sq: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedProfile {
    pub rows: Vec<SpeedRow>,
    /// Trials thrown away because the walk entered a forbidden vertex.
    pub discarded: usize,
}

impl SpeedProfile {
    /// Least-squares slope of `log mean` against `log t` over rows with `t >= 1`.
    pub fn slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> =
            self.rows.iter().filter(|r| r.t >= 1).map(|r| ((r.t as f64).ln(), r.mean.ln())).collect();
        ols_slope(&pts)
    }
}

struct Scratch<'a> {
    dist: Vec<usize>,
    touched: Vec<usize>,
    queue: VecDeque<usize>,
    dijkstra: Option<Dijkstra<'a>>,
}

impl Scratch<'_> {
    /// Distances from `x` to each target, searching only as far as needed.
    fn distances(&mut self, g: &Graph, x: usize, targets: &[usize]) -> Vec<f64> {
        if let Some(dj) = self.dijkstra.as_mut() {
            let mut want: Vec<usize> = targets.to_vec();
            want.sort_unstable();
            want.dedup();
            let mut left = want.len();
            let mut found = std::collections::HashMap::new();
            dj.run_until(&[x], f64::INFINITY, |v, d| {
                if want.binary_search(&v).is_ok() {
                    found.insert(v, d);
                    left -= 1;
                }
                left > 0
            });
            return targets.iter().map(|v| found[v]).collect();
        }
        for &v in &self.touched {
            self.dist[v] = usize::MAX;
        }
        self.touched.clear();
        self.queue.clear();
        self.dist[x] = 0;
        self.touched.push(x);
        self.queue.push_back(x);
        let mut left = targets.iter().filter(|&&v| v != x).count();
        while left > 0 {
            let Some(v) = self.queue.pop_front() else { break };
            for &y in g.neighbors(v) {
                if self.dist[y] == usize::MAX {
                    self.dist[y] = self.dist[v] + 1;
                    self.touched.push(y);
                    self.queue.push_back(y);
                    left -= targets.iter().filter(|&&t| t == y).count();
                }
            }
        }
        targets.iter().map(|&v| self.dist[v] as f64).collect()
    }
}

/// Monte Carlo table of `E dist(X_0, X_t)` over `t_grid`, one walk per trial
/// observed at every grid time. With `forbidden`, starts are drawn among the
/// other vertices and a walk that enters a forbidden vertex is discarded.
pub fn speed_profile(
    g: &Graph,
    metric: Metric<'_>,
    start: Start,
    t_grid: &[usize],
    trials: usize,
    forbidden: Option<&[bool]>,
    seed: u64,
) -> Result<SpeedProfile> {
    param(trials >= 1, || "need at least one trial".into())?;
    if let Metric::Conformal(w) = metric {
        w.check_len(g)?;
    }
    let blocked = |x: usize| forbidden.is_some_and(|f| f[x]);
    let sampler = StartSampler::new(g, start, (0..g.n()).filter(|&x| !blocked(x)).collect())?;
    let max_t = t_grid.iter().copied().max().unwrap_or(0);
    let samples = exec::map_range_with(
        trials,
        || Scratch {
            dist: vec![usize::MAX; g.n()],
            touched: Vec::new(),
            queue: VecDeque::new(),
            dijkstra: match metric {
                Metric::Graph => None,
                Metric::Conformal(w) => Some(Dijkstra::new(g, w)),
            },
        },
        |scratch, trial| {
            let mut rng = rng::stream(seed, "speed", trial as u64);
            let x0 = sampler.sample(&mut rng);
            let mut at = vec![x0; max_t + 1];
            let mut x = x0;
            for slot in at.iter_mut().skip(1) {
                x = step(g, x, &mut rng);
                if blocked(x) {
                    return None;
                }
                *slot = x;
            }
            let targets: Vec<usize> = t_grid.iter().map(|&t| at[t]).collect();
            Some(scratch.distances(g, x0, &targets))
        },
    );
    let kept: Vec<Vec<f64>> = samples.iter().flatten().cloned().collect();
    let discarded = trials - kept.len();
    let rows = t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let d: Vec<f64> = kept.iter().map(|s| s[i]).collect();
            let sq: Vec<f64> = d.iter().map(|v| v * v).collect();
            let (a, b) = (mean_se(&d), mean_se(&sq));
            SpeedRow { t, mean: a.mean, stderr: a.stderr, mean_sq: b.mean, stderr_sq: b.stderr, trials: a.count }
        })
        .collect();
    Ok(SpeedProfile { rows, discarded })
}

/// Law of `dist(X_0, X_t)` for the simple walk on the cycle `C_n`, indexed by
/// distance `0..=n/2`. Computed from the exact integer-line law folded mod `n`.
pub fn cycle_displacement_law(n: usize, t: usize) -> Vec<f64> {
    let mut line = vec![1.0f64];
    for _ in 0..t {
        let mut next = vec![0.0; line.len() + 2];
        for (i, &p) in line.iter().enumerate() {
            next[i] += 0.5 * p;
            next[i + 2] += 0.5 * p;
        }
        line = next;
    }
    let mut law = vec![0.0; n / 2 + 1];
    for (i, &p) in line.iter().enumerate() {
        let pos = (i as i64 - t as i64).rem_euclid(n as i64) as usize;
        law[pos.min(n - pos)] += p;
    }
    law
}

pub fn cycle_mean_displacement(n: usize, t: usize) -> f64 {
    cycle_displacement_law(n, t).iter().enumerate().map(|(d, p)| d as f64 * p).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkovMode {
    /// Exact when `n <= DENSE_LIMIT`, otherwise Monte Carlo with the given trials.
    Auto { trials: usize },
    Exact,
    MonteCarlo { trials: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovTypeRatio {
    pub t: usize,
    pub p: f64,
    /// `E d(f(Z_t), f(Z_0))^p` for the stationary walk.
    pub numerator: f64,
    /// `E d(f(Z_0), f(Z_1))^p`, always exact.
    pub denominator: f64,
    /// `numerator / (t · denominator)`.
    pub ratio: f64,
    pub exact: bool,
    /// Standard error of the ratio (0 when exact).
    pub stderr: f64,
}

/// Markov-type ratio of the stationary simple random walk under the
/// pulled-back distance `dist(x, y) = d(f(x), f(y))`.
pub fn markov_type_ratio<D>(g: &Graph, dist: D, p: f64, t: usize, mode: MarkovMode, seed: u64) -> Result<MarkovTypeRatio>
where
    D: Fn(usize, usize) -> f64 + Sync,
{
    param(p >= 1.0, || format!("p must be at least 1, got {p}"))?;
    param(t >= 1, || "t must be at least 1".into())?;
    let n = g.n();
    let two_m = 2.0 * g.m() as f64;
    let denominator =
        exec::sum_range(n, |x| g.neighbors(x).iter().map(|&y| dist(x, y).powf(p)).sum::<f64>()) / two_m;
    if denominator == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let exact = match mode {
        MarkovMode::Exact => {
            param(n <= DENSE_LIMIT, || format!("exact mode limited to {DENSE_LIMIT} vertices"))?;
            true
        }
        MarkovMode::Auto { .. } => n <= DENSE_LIMIT,
        MarkovMode::MonteCarlo { .. } => false,
    };
    if t == 1 {
        return Ok(MarkovTypeRatio { t, p, numerator: denominator, denominator, ratio: 1.0, exact: true, stderr: 0.0 });
    }
    let (numerator, se) = if exact {
        let num = exec::sum_range(n, |x| {
            let row = distribution(g, x, t);
            let s: f64 = row.iter().enumerate().filter(|(_, &q)| q > 0.0).map(|(y, &q)| q * dist(x, y).powf(p)).sum();
            g.degree(x) as f64 / two_m * s
        });
        (num, 0.0)
    } else {
        let trials = match mode {
            MarkovMode::Auto { trials } | MarkovMode::MonteCarlo { trials } => trials,
            MarkovMode::Exact => unreachable!(),
        };
        param(trials >= 2, || "Monte Carlo needs at least two trials".into())?;
        let sampler = StartSampler::new(g, Start::Stationary, (0..n).collect())?;
        let samples = exec::map_range(trials, |i| {
            let mut rng = rng::stream(seed, "markov-type", i as u64);
            let x0 = sampler.sample(&mut rng);
            let mut x = x0;
            for _ in 0..t {
                x = step(g, x, &mut rng);
            }
            dist(x0, x).powf(p)
        });
        let m = mean_se(&samples);
        (m.mean, m.stderr)
    };
    let scale = t as f64 * denominator;
    Ok(MarkovTypeRatio { t, p, numerator, denominator, ratio: numerator / scale, exact, stderr: se / scale })
}
