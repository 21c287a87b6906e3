//! Growth-minimizing conformal weights and lower-bound certificates on
//! complete binary trees.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::exec;
use crate::graph::{ball_sizes, ConformalWeight, Dijkstra, Graph};
use crate::rng;

/// `max_x |B_ω(x, R)| / R²` and a vertex attaining it (smallest index on ties).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthObjective {
    pub r: f64,
    pub value: f64,
    pub vertex: usize,
}

pub fn growth_objective(g: &Graph, w: &ConformalWeight, r: f64) -> GrowthObjective {
    let sizes = ball_sizes(g, w, r);
    let (vertex, &best) = sizes.iter().enumerate().fold((0, &0), |acc, (x, s)| if *s > *acc.1 { (x, s) } else { acc });
    GrowthObjective { r, value: best as f64 / (r * r), vertex }
}

/// Logistic width, in distance units, of the smoothed ball count.
const SMOOTHING: f64 = 0.25;
const RESTARTS: usize = 4;

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Soft ball count around `x` and its gradient in `ω`, accumulated into `grad` with factor `scale`.
fn soft_count(g: &Graph, dj: &mut Dijkstra<'_>, w: &[f64], x: usize, r: f64, scale: f64, grad: &mut [f64]) -> f64 {
    let settled: Vec<(usize, f64)> = dj.run(&[x], r + 10.0 * SMOOTHING).to_vec();
    let mut index = std::collections::HashMap::with_capacity(settled.len());
    for (i, &(v, _)) in settled.iter().enumerate() {
        index.insert(v, i);
    }
    let mut count = 0.0;
    let mut sub = vec![0.0; settled.len()];
    let mut parent = vec![usize::MAX; settled.len()];
    for (i, &(v, d)) in settled.iter().enumerate() {
        let s = logistic((r - d) / SMOOTHING);
        count += s;
        sub[i] = s * (1.0 - s) / SMOOTHING;
        if i > 0 {
            parent[i] = g
                .neighbors(v)
                .iter()
                .filter_map(|z| index.get(z).copied())
                .find(|&j| j < i && settled[j].1 + 0.5 * (w[settled[j].0] + w[v]) == d)
                .unwrap_or(0);
        }
    }
    for i in (1..settled.len()).rev() {
        let p = parent[i];
        let flow = sub[i];
        sub[p] += flow;
        // Raising either endpoint weight lengthens this edge for every target below it.
        grad[settled[i].0] -= 0.5 * scale * flow;
        grad[settled[p].0] -= 0.5 * scale * flow;
    }
    count
}

/// Soft-max over `x` of smoothed `|B_ω(x, R)| / R²` at temperature `1/R`, and its gradient.
fn surrogate(g: &Graph, w: &ConformalWeight, r: f64) -> (f64, Vec<f64>) {
    let n = g.n();
    let r2 = r * r;
    let counts = exec::map_range_with(n, || Dijkstra::new(g, w), |dj, x| {
        dj.run(&[x], r + 10.0 * SMOOTHING)
            .iter()
            .map(|&(_, d)| logistic((r - d) / SMOOTHING))
            .sum::<f64>()
    });
    let temp = 1.0 / r;
    let top = counts.iter().copied().fold(f64::NEG_INFINITY, f64::max) / r2;
    let weights: Vec<f64> = counts.iter().map(|c| ((c / r2 - top) / temp).exp()).collect();
    let total: f64 = weights.iter().sum();
    let value = top + temp * total.ln();
    let mut grad = vec![0.0; n];
    let mut dj = Dijkstra::new(g, w);
    for x in 0..n {
        let px = weights[x] / total;
        if px > 1e-9 {
            soft_count(g, &mut dj, w.values(), x, r, px / r2, &mut grad);
        }
    }
    (value, grad)
}

fn descend(g: &Graph, r: f64, iterations: usize, start: ConformalWeight) -> Result<(ConformalWeight, GrowthObjective)> {
    let n = g.n() as f64;
    let mut best = start;
    let mut best_obj = growth_objective(g, &best, r);
    for it in 1..=iterations {
        let (_, grad) = surrogate(g, &best, r);
        let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let eta = 0.1 / (it as f64).sqrt() * n.sqrt() / norm;
        let values: Vec<f64> = best.values().iter().zip(&grad).map(|(v, d)| (v - eta * d).max(0.0)).collect();
        let Ok(cand) = ConformalWeight::new(values).and_then(|w| w.normalized()) else { continue };
        let obj = growth_objective(g, &cand, r);
        if obj.value <= best_obj.value {
            best = cand;
            best_obj = obj;
        }
    }
    Ok((best, best_obj))
}

/// Projected subgradient descent on a smoothed soft-max of ball counts over
/// normalized weights. Steps that raise the exact objective are rejected, and
/// `ω ≡ 1` is the first restart, so the result never loses to it.
pub fn optimize_weight(g: &Graph, r: f64, iterations: usize, seed: u64) -> Result<(ConformalWeight, GrowthObjective)> {
    param(r >= 1.0, || format!("R must be at least 1, got {r}"))?;
    param(iterations >= 1, || "need at least one iteration".into())?;
    let n = g.n();
    let runs = exec::map_range(RESTARTS, |k| {
        let start = if k == 0 {
            ConformalWeight::uniform(n, 1.0)
        } else {
            let mut rng = rng::stream(seed, "optimize-start", k as u64);
            let jitter: Vec<f64> = (0..n).map(|_| 1.0 + 0.2 * rng.random_range(-1.0..1.0)).collect();
            ConformalWeight::new(jitter)?.normalized()?
        };
        descend(g, r, iterations, start)
    });
    let mut best: Option<(ConformalWeight, GrowthObjective)> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.1.value < b.1.value) {
            best = Some(run);
        }
    }
    let (w, obj) = best.expect("at least one restart");
    if !w.is_normalized() {
        return Err(Error::Invariant("optimizer output is not normalized".into()));
    }
    Ok((w, obj))
}

/// Largest supported height for the binary-tree certificate.
pub const CBT_MAX_HEIGHT: usize = 20;

/// Path families and weights for the binary tree `T_n`.
///
/// At level `k` every subtree of height `k` contributes the leaf pairs that
/// cross its root; for `k >= 2` only pairs whose in-side leaf positions have
/// even sum are kept, which halves every vertex count exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbtCertificate {
    pub n: usize,
    /// `α` for a vertex at height `h` (leaves have height 0).
    pub alpha_by_height: Vec<f64>,
    /// `Σ_v α(v)²`.
    pub alpha_l2_sq: f64,
    /// `n · 2^n`.
    pub alpha_bound: f64,
    /// Largest `Q` for which growth `<= Q R²` at all `R >= 1` is ruled out for
    /// normalized weights by the path-family chain.
    pub growth_lower_bound: f64,
    /// Same, from nonnegative weights on whole-subtree distance sums chosen to
    /// maximize the Cauchy–Schwarz ratio.
    pub dual_growth_lower_bound: f64,
}

fn partners(k: usize) -> usize {
    if k == 1 {
        1
    } else {
        1 << (k - 2)
    }
}

fn alpha_by_height(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|h| {
            let below: f64 = (h + 1..=n)
                .map(|k| 2f64.powf(-1.5 * k as f64) * (1u64 << h) as f64 * partners(k) as f64)
                .sum();
            let at_root = if h >= 1 { 2f64.powf(-1.5 * h as f64) * ((1u64 << (h - 1)) * partners(h) as u64) as f64 } else { 0.0 };
            below + at_root
        })
        .collect()
}

/// `Σ_{i=1}^{m} g(i)` with `g(i) = sqrt((i+1)/Q)` when `i + 1 > Q`, else 0:
/// the `i`-th nearest other vertex lies at distance at least `g(i)`.
fn rank_sum(m: usize, q: f64) -> f64 {
    (1..=m).map(|i| (i + 1) as f64).filter(|&c| c > q).map(|c| (c / q).sqrt()).sum()
}

fn tree_size(n: usize) -> f64 {
    ((1u64 << (n + 1)) - 1) as f64
}

fn height_norm(n: usize, per_height: &[f64]) -> f64 {
    per_height.iter().enumerate().map(|(h, a)| (1u64 << (n - h)) as f64 * a * a).sum::<f64>().sqrt()
}

/// Sup of the `Q` values accepted by `certified`, by bisection in `log Q`.
fn bisect<F: Fn(f64) -> bool>(certified: F) -> f64 {
    let (mut lo, mut hi) = (1e-6f64, 1e6f64);
    if !certified(lo) {
        return 0.0;
    }
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if certified(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

impl CbtCertificate {
    /// `α` in heap order (root first), matching the binary-tree generator.
    pub fn alpha_vector(&self) -> Vec<f64> {
        let size = tree_size(self.n) as usize;
        (0..size)
            .map(|v| {
                let depth = (usize::BITS - 1 - (v + 1).leading_zeros()) as usize;
                self.alpha_by_height[self.n - depth]
            })
            .collect()
    }

    /// `Σ_k 2^{-3k/2} Σ_{γ ∈ P_k} len_ω(γ)` is at least this for any `ω` with
    /// `|B_ω(x, R)| <= Q R²` for all `R >= 1`.
    pub fn path_sum_lower_bound(&self, q: f64) -> f64 {
        (1..=self.n)
            .map(|k| {
                let left = (1u64 << (k - 1)) as f64;
                (1u64 << (self.n - k)) as f64 * 2f64.powf(-1.5 * k as f64) * left * rank_sum(partners(k), q)
            })
            .sum()
    }

    /// Lower bound on `‖ω‖_{ℓ²}` under growth `<= Q R²`.
    pub fn norm_lower_bound(&self, q: f64) -> f64 {
        self.path_sum_lower_bound(q) / self.alpha_l2_sq.sqrt()
    }
}

/// Whole-subtree distance-sum constraints: for `x` at height `h0` and its
/// ancestor at height `k`, `Σ_{y in subtree, y != x} d(x, y)` is at least the
/// rank sum. Returns per-constraint `α` contributions by height and right-hand sides.
fn subtree_constraints(n: usize, q: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut cols = Vec::new();
    let mut rhs = Vec::new();
    for h0 in 0..=n {
        for k in h0..=n {
            let t = (1usize << (k + 1)) - 2;
            if t == 0 {
                continue;
            }
            let mut col = vec![0.0; n + 1];
            for (h, c) in col.iter_mut().enumerate().take(k + 1) {
                let on_path = usize::from(h >= h0);
                // Off-path vertices: every target below them routes through them.
                let mut s = ((1u64 << (k - h)) as f64 - on_path as f64) * ((1u64 << (h + 1)) as f64 - 1.5);
                if h == h0 {
                    s += 0.5 * t as f64;
                } else if h > h0 {
                    s += (1u64 << h) as f64 - 0.5;
                }
                // Summed over the 2^{n-h0} choices of x, spread over the 2^{n-h} vertices at height h.
                *c = s * (1u64 << (n - h0)) as f64 / (1u64 << (n - h)) as f64;
            }
            cols.push(col);
            rhs.push((1u64 << (n - h0)) as f64 * rank_sum(t, q));
        }
    }
    (cols, rhs)
}

/// Best Cauchy–Schwarz ratio `λ·b / ‖Σ λ_i α_i‖` over `λ >= 0`, by coordinate
/// descent on `½ λᵀMλ - bᵀλ`.
fn dual_ratio(n: usize, q: f64) -> f64 {
    let (cols, b) = subtree_constraints(n, q);
    let m = cols.len();
    let weight: Vec<f64> = (0..=n).map(|h| (1u64 << (n - h)) as f64).collect();
    let gram: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| (0..=n).map(|h| weight[h] * cols[i][h] * cols[j][h]).sum()).collect())
        .collect();
    let mut lam = vec![0.0; m];
    for _ in 0..400 {
        for i in 0..m {
            let gi: f64 = gram[i].iter().zip(&lam).map(|(a, l)| a * l).sum::<f64>() - b[i];
            lam[i] = (lam[i] - gi / gram[i][i]).max(0.0);
        }
    }
    let alpha: Vec<f64> = (0..=n).map(|h| (0..m).map(|i| lam[i] * cols[i][h]).sum()).collect();
    let num: f64 = lam.iter().zip(&b).map(|(l, bi)| l * bi).sum();
    let den = height_norm(n, &alpha);
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn cbt_certificate(n: usize) -> Result<CbtCertificate> {
    param(n >= 2, || "height must be at least 2".into())?;
    if n > CBT_MAX_HEIGHT {
        return Err(Error::TooLarge { requested: n, max: CBT_MAX_HEIGHT });
    }
    let alpha = alpha_by_height(n);
    let alpha_l2_sq = height_norm(n, &alpha).powi(2);
    let alpha_bound = n as f64 * (1u64 << n) as f64;
    if alpha_l2_sq > alpha_bound {
        return Err(Error::Invariant(format!("Σα² = {alpha_l2_sq} exceeds n 2^n = {alpha_bound}")));
    }
    let mut cert = CbtCertificate {
        n,
        alpha_by_height: alpha,
        alpha_l2_sq,
        alpha_bound,
        growth_lower_bound: 0.0,
        dual_growth_lower_bound: 0.0,
    };
    let target = tree_size(n).sqrt() * (1.0 + 1e-9);
    cert.growth_lower_bound = bisect(|q| cert.norm_lower_bound(q) > target);
    cert.dual_growth_lower_bound = bisect(|q| dual_ratio(n, q) > target);
    Ok(cert)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbtAudit {
    pub n: usize,
    pub q: f64,
    /// Largest `|B_ω(x, R)| / R²` over the dyadic grid.
    pub grid_max_ratio: f64,
    pub grid_passes: bool,
    /// When the grid passes, growth is at most `4Q R²` for every `R >= 1`
    /// and the chain forces `‖ω‖_{ℓ²}` at least this.
    pub implied_norm_lower_bound: Option<f64>,
    pub norm: f64,
    /// `false` only if the implication is contradicted.
    pub sound: bool,
}

/// Check growth on `R ∈ {1, 2, 4, …}` up to twice the `ω`-diameter, then test
/// the norm bound the certificate implies against the actual norm.
pub fn cbt_audit(n: usize, w: &ConformalWeight, q: f64) -> Result<CbtAudit> {
    let cert = cbt_certificate(n)?;
    let size = tree_size(n) as usize;
    param(w.len() == size, || format!("weight has {} entries, T_{n} has {size} vertices", w.len()))?;
    param(w.is_normalized(), || "weight must be normalized".into())?;
    param(q > 0.0, || "Q must be positive".into())?;
    let g = crate::generators::generate(&crate::generators::GeneratorSpec::BinaryTree { h: n })?;
    let diam = crate::graph::set_diameter(&g, w, &(0..size).collect::<Vec<_>>());
    let mut grid_max_ratio: f64 = 0.0;
    let mut r = 1.0;
    loop {
        let obj = growth_objective(&g, w, r);
        grid_max_ratio = grid_max_ratio.max(obj.value);
        if r >= 2.0 * diam {
            break;
        }
        r *= 2.0;
    }
    let grid_passes = grid_max_ratio <= q;
    let norm = w.l2_norm();
    let implied = grid_passes.then(|| cert.norm_lower_bound(4.0 * q));
    let sound = implied.is_none_or(|b| norm >= b * (1.0 - 1e-12));
    Ok(CbtAudit { n, q, grid_max_ratio, grid_passes, implied_norm_lower_bound: implied, norm, sound })
}
