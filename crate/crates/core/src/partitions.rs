//! Padded random partitions of `(V, dist_w)`.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::exec;
use crate::graph::{set_diameter, ConformalWeight, Dijkstra, Graph};
use crate::rng;

const DIAMETER_SLACK: f64 = 1e-9;

/// A decomposition of the vertex set into blocks of bounded diameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    block_of: Vec<usize>,
    blocks: Vec<Vec<usize>>,
    tau: f64,
}

impl Partition {
    /// Build from a block label per vertex. Blocks are renumbered by first
    /// appearance so equal partitions compare equal.
    pub fn from_labels(labels: &[usize], tau: f64) -> Self {
        let mut remap = std::collections::HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = Vec::with_capacity(labels.len());
        for (x, l) in labels.iter().enumerate() {
            let id = *remap.entry(*l).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[id].push(x);
            block_of.push(id);
        }
        Partition { block_of, blocks, tau }
    }

    pub fn singletons(n: usize) -> Self {
        Partition::from_labels(&(0..n).collect::<Vec<_>>(), 0.0)
    }

    pub fn whole(n: usize, tau: f64) -> Self {
        Partition::from_labels(&vec![0; n], tau)
    }

    pub fn block_of(&self, x: usize) -> usize {
        self.block_of[x]
    }

    pub fn labels(&self) -> &[usize] {
        &self.block_of
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Diameter bound promised by the sampler.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Assert exact coverage and the per-block diameter bound.
    pub fn verify(&self, g: &Graph, w: &ConformalWeight) -> Result<()> {
        let n = g.n();
        if self.block_of.len() != n {
            return Err(Error::Invariant(format!("partition labels {} vertices, graph has {n}", self.block_of.len())));
        }
        let mut seen = vec![false; n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &x in block {
                if seen[x] || self.block_of[x] != b {
                    return Err(Error::Invariant(format!("vertex {x} covered inconsistently")));
                }
                seen[x] = true;
            }
        }
        if let Some(x) = seen.iter().position(|s| !s) {
            return Err(Error::Invariant(format!("vertex {x} not covered")));
        }
        let diams = exec::map_slice(&self.blocks, |b| set_diameter(g, w, b));
        if let Some((b, d)) = diams.iter().enumerate().find(|(_, d)| **d > self.tau + DIAMETER_SLACK) {
            return Err(Error::Invariant(format!("block {b} has diameter {d} > tau = {}", self.tau)));
        }
        Ok(())
    }
}

/// A reproducible source of random partitions; `trial` selects the sample.
pub trait PartitionSampler: Sync {
    fn sample(&self, trial: u64) -> Partition;
    /// Diameter bound of every sample.
    fn tau(&self) -> f64;
}

/// Exponential clustering with radius cap `r`: blocks have diameter at most `2r`.
pub struct ExpClustering<'a> {
    g: &'a Graph,
    w: &'a ConformalWeight,
    r: f64,
    seed: u64,
    means: Vec<f64>,
}

impl<'a> ExpClustering<'a> {
    pub fn new(g: &'a Graph, w: &'a ConformalWeight, r: f64, seed: u64) -> Result<Self> {
        w.check_len(g)?;
        param(r > 0.0 && r.is_finite(), || format!("R must be positive, got {r}"))?;
        let sizes = crate::graph::ball_sizes(g, w, 2.0 * r);
        let means = sizes.iter().map(|&s| r / (3.0 * (s as f64).ln().max(1.0))).collect();
        Ok(ExpClustering { g, w, r, seed, means })
    }

    /// Mean of the exponential radius at each vertex.
    pub fn radius_means(&self) -> &[f64] {
        &self.means
    }
}

impl PartitionSampler for ExpClustering<'_> {
    fn sample(&self, trial: u64) -> Partition {
        let n = self.g.n();
        let mut rng = rng::stream(self.seed, "exp_clustering", trial);
        let order_keys: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let radii: Vec<f64> = self
            .means
            .iter()
            .map(|&mu| Exp::new(1.0 / mu).expect("positive rate").sample(&mut rng).min(self.r))
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| order_keys[a].total_cmp(&order_keys[b]).then(a.cmp(&b)));
        let mut label = vec![usize::MAX; n];
        let mut left = n;
        let mut dj = Dijkstra::new(self.g, self.w);
        for &y in &order {
            if left == 0 {
                break;
            }
            for &(x, _) in dj.run(&[y], radii[y]) {
                if label[x] == usize::MAX {
                    label[x] = y;
                    left -= 1;
                }
            }
        }
        Partition::from_labels(&label, 2.0 * self.r)
    }

    fn tau(&self) -> f64 {
        2.0 * self.r
    }
}

/// One exponential-clustering sample with radius cap `r`.
pub fn exp_clustering(g: &Graph, w: &ConformalWeight, r: f64, seed: u64) -> Result<Partition> {
    param(r >= 1.0, || format!("R must be at least 1, got {r}"))?;
    Ok(ExpClustering::new(g, w, r, seed)?.sample(0))
}

fn diameter_at_most(dj: &mut Dijkstra, set: &[usize], member: &[bool], limit: f64) -> bool {
    set.iter().all(|&x| {
        let mut reached = 0;
        dj.run_until(&[x], limit, |v, _| {
            if member[v] {
                reached += 1;
            }
            reached < set.len()
        });
        reached == set.len()
    })
}

/// Merge blocks joined by an edge whenever the union still has diameter at
/// most `tau`, scanning edges in order. Merging only enlarges blocks, so
/// padding can only improve.
fn coalesce(g: &Graph, dj: &mut Dijkstra, label: &mut [usize], tau: f64) {
    let n = g.n();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (x, &l) in label.iter().enumerate() {
        members[l].push(x);
    }
    let mut member = vec![false; n];
    for (u, v) in g.edges() {
        let (a, b) = (label[u], label[v]);
        if a == b {
            continue;
        }
        let mut union = members[a].clone();
        union.extend_from_slice(&members[b]);
        for &x in &union {
            member[x] = true;
        }
        let ok = diameter_at_most(dj, &union, &member, tau + DIAMETER_SLACK);
        for &x in &union {
            member[x] = false;
        }
        if ok {
            let (keep, gone) = if a < b { (a, b) } else { (b, a) };
            for &x in &members[gone] {
                label[x] = keep;
            }
            let moved = std::mem::take(&mut members[gone]);
            members[keep].extend(moved);
        }
    }
}

/// Random-order, random-radius ball carving: radius uniform in `[tau/4, tau/2]`,
/// followed by merging adjacent blocks while the diameter bound allows.
pub struct Ckr<'a> {
    g: &'a Graph,
    w: &'a ConformalWeight,
    tau: f64,
    seed: u64,
}

impl<'a> Ckr<'a> {
    pub fn new(g: &'a Graph, w: &'a ConformalWeight, tau: f64, seed: u64) -> Result<Self> {
        w.check_len(g)?;
        param(tau > 0.0 && tau.is_finite(), || format!("tau must be positive, got {tau}"))?;
        Ok(Ckr { g, w, tau, seed })
    }
}

impl PartitionSampler for Ckr<'_> {
    fn sample(&self, trial: u64) -> Partition {
        let n = self.g.n();
        let mut rng = rng::stream(self.seed, "ckr", trial);
        let radius = self.tau * (0.25 + 0.25 * rng.random::<f64>());
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut label = vec![usize::MAX; n];
        let mut left = n;
        let mut dj = Dijkstra::new(self.g, self.w);
        for &c in &order {
            if left == 0 {
                break;
            }
            for &(x, _) in dj.run(&[c], radius) {
                if label[x] == usize::MAX {
                    label[x] = c;
                    left -= 1;
                }
            }
        }
        coalesce(self.g, &mut dj, &mut label, self.tau);
        Partition::from_labels(&label, self.tau)
    }

    fn tau(&self) -> f64 {
        self.tau
    }
}

pub fn ckr_partition(g: &Graph, w: &ConformalWeight, tau: f64, seed: u64) -> Result<Partition> {
    Ok(Ckr::new(g, w, tau, seed)?.sample(0))
}

/// A sampler that always returns the same partition.
pub struct FixedSampler(pub Partition);

impl PartitionSampler for FixedSampler {
    fn sample(&self, _trial: u64) -> Partition {
        self.0.clone()
    }

    fn tau(&self) -> f64 {
        self.0.tau
    }
}

/// The boosting transform: from a base sampler with
/// `Pr[B(x, tau/alpha) ⊆ P(x)] >= 1/2` it produces partitions with
/// `Pr[B(x, delta tau/alpha) ⊆ P'(x)] >= 1 - 4 delta`.
///
/// Round `k` draws an independent base partition and `eps_k ~ U[0, 1]`, and
/// carves the `eps_k tau / alpha`-interiors of its blocks out of the vertices
/// not yet covered. Vertices left after the last round become singletons.
pub struct PadBoost<'a, S: PartitionSampler> {
    g: &'a Graph,
    w: &'a ConformalWeight,
    base: &'a S,
    alpha: f64,
    seed: u64,
    max_rounds: usize,
}

/// Round cap `⌈log2 n⌉ + 20`.
pub fn pad_boost_rounds(n: usize) -> usize {
    (n.max(1) as f64).log2().ceil() as usize + 20
}

impl<'a, S: PartitionSampler> PadBoost<'a, S> {
    pub fn new(g: &'a Graph, w: &'a ConformalWeight, base: &'a S, alpha: f64, seed: u64) -> Result<Self> {
        w.check_len(g)?;
        param(alpha > 0.0 && alpha.is_finite(), || format!("alpha must be positive, got {alpha}"))?;
        Ok(PadBoost { g, w, base, alpha, seed, max_rounds: pad_boost_rounds(g.n()) })
    }

    /// Sample and report how many vertices were left to the singleton fallback.
    pub fn sample_with_leftover(&self, trial: u64) -> (Partition, usize) {
        let n = self.g.n();
        let tau = self.base.tau();
        let mut rng = rng::stream(self.seed, "pad_boost", trial);
        let mut label = vec![usize::MAX; n];
        let mut left = n;
        let mut next_label = 0usize;
        let mut dj = Dijkstra::new(self.g, self.w);
        for round in 0..self.max_rounds {
            if left == 0 {
                break;
            }
            let eps: f64 = rng.random();
            let base = self.base.sample(rng::derive(trial, "pad_boost_round").wrapping_add(round as u64));
            let lambda = eps * tau / self.alpha;
            let mut round_label = vec![usize::MAX; base.len()];
            for x in 0..n {
                if label[x] != usize::MAX {
                    continue;
                }
                let b = base.block_of(x);
                let escape = dj.escape_distance(&[x], lambda, |v| base.block_of(v) == b);
                if escape.is_infinite() {
                    if round_label[b] == usize::MAX {
                        round_label[b] = next_label;
                        next_label += 1;
                    }
                    label[x] = round_label[b];
                    left -= 1;
                }
            }
        }
        let leftover = left;
        for l in label.iter_mut().filter(|l| **l == usize::MAX) {
            *l = next_label;
            next_label += 1;
        }
        (Partition::from_labels(&label, tau), leftover)
    }
}

impl<S: PartitionSampler> PartitionSampler for PadBoost<'_, S> {
    fn sample(&self, trial: u64) -> Partition {
        self.sample_with_leftover(trial).0
    }

    fn tau(&self) -> f64 {
        self.base.tau()
    }
}

/// Monte Carlo estimate of `Pr[B(x, delta tau/alpha) ⊆ P(x)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaddingProfile {
    pub delta_grid: Vec<f64>,
    /// Mean over trials and uniformly chosen `x`.
    pub empirical_pad: Vec<f64>,
    /// Standard error of `empirical_pad` from the spread of per-trial means.
    pub stderr: Vec<f64>,
    /// Smallest per-vertex padding frequency.
    pub min_vertex_pad: Vec<f64>,
    pub trials: usize,
    pub alpha: f64,
    pub tau: f64,
}

/// Distance from `x` to the nearest vertex outside its block, per vertex.
pub fn padding_radii(g: &Graph, w: &ConformalWeight, p: &Partition, limit: f64) -> Vec<f64> {
    exec::map_range_with(
        g.n(),
        || Dijkstra::new(g, w),
        |dj, x| {
            let b = p.block_of(x);
            dj.escape_distance(&[x], limit, |v| p.block_of(v) == b)
        },
    )
}

pub fn padding_profile<S: PartitionSampler>(
    g: &Graph,
    w: &ConformalWeight,
    sampler: &S,
    alpha: f64,
    delta_grid: &[f64],
    trials: usize,
) -> Result<PaddingProfile> {
    w.check_len(g)?;
    param(trials >= 1, || "trials must be at least 1".into())?;
    param(alpha > 0.0, || "alpha must be positive".into())?;
    param(delta_grid.iter().all(|d| *d >= 0.0 && d.is_finite()), || "deltas must be nonnegative".into())?;
    let n = g.n();
    let tau = sampler.tau();
    let radii: Vec<f64> = delta_grid.iter().map(|d| d * tau / alpha).collect();
    let limit = radii.iter().copied().fold(0.0, f64::max);
    let per_trial: Vec<Vec<f64>> = exec::map_range(trials, |t| {
        let p = sampler.sample(t as u64);
        let mut dj = Dijkstra::new(g, w);
        (0..n)
            .map(|x| {
                let b = p.block_of(x);
                dj.escape_distance(&[x], limit, |v| p.block_of(v) == b)
            })
            .collect()
    });
    let k = delta_grid.len();
    let mut mean = vec![0.0; k];
    let mut sq = vec![0.0; k];
    let mut vertex_hits = vec![vec![0usize; n]; k];
    for esc in &per_trial {
        for (j, &r) in radii.iter().enumerate() {
            let mut hits = 0usize;
            for (x, &e) in esc.iter().enumerate() {
                if r < e {
                    hits += 1;
                    vertex_hits[j][x] += 1;
                }
            }
            let frac = hits as f64 / n as f64;
            mean[j] += frac;
            sq[j] += frac * frac;
        }
    }
    let tf = trials as f64;
    let stderr = (0..k)
        .map(|j| {
            let m = mean[j] / tf;
            if trials < 2 {
                0.0
            } else {
                ((sq[j] / tf - m * m).max(0.0) * tf / (tf - 1.0) / tf).sqrt()
            }
        })
        .collect();
    Ok(PaddingProfile {
        delta_grid: delta_grid.to_vec(),
        empirical_pad: mean.iter().map(|m| m / tf).collect(),
        stderr,
        min_vertex_pad: vertex_hits
            .iter()
            .map(|h| *h.iter().min().unwrap() as f64 / tf)
            .collect(),
        trials,
        alpha,
        tau,
    })
}

/// Property 3 of the exponential clustering: lower bound on
/// `Pr[B(x, r) ⊆ P(x)]` at a vertex whose balls have the given sizes.
pub fn exp_clustering_padding_bound(ball_r: usize, ball_3r: usize, r_cap: f64, r: f64) -> f64 {
    1.0 - 1.0 / (ball_r as f64).powi(2) - (12.0 * r / r_cap) * (ball_3r as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GeneratorSpec};

    fn ones(g: &Graph) -> ConformalWeight {
        ConformalWeight::uniform(g.n(), 1.0)
    }

    #[test]
    fn exp_clustering_diameter_on_path() {
        let g = generate(&GeneratorSpec::Path { n: 20 }).unwrap();
        let w = ones(&g);
        let s = ExpClustering::new(&g, &w, 2.0, 5).unwrap();
        for t in 0..50 {
            let p = s.sample(t);
            assert_eq!(p.tau(), 4.0);
            p.verify(&g, &w).unwrap();
        }
    }

    #[test]
    fn single_vertex_is_one_block() {
        let g = generate(&GeneratorSpec::Path { n: 1 }).unwrap();
        let p = exp_clustering(&g, &ones(&g), 1.0, 0).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn ckr_examples() {
        let g = generate(&GeneratorSpec::Complete { n: 6 }).unwrap();
        let w = ones(&g);
        let p = ckr_partition(&g, &w, 2.0, 1).unwrap();
        assert_eq!(p.len(), 1);
        // two triangles joined by a long edge
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap();
        let mut v = vec![0.1; 6];
        v[2] = 2.5;
        v[3] = 2.5;
        let w = ConformalWeight::new(v).unwrap();
        for t in 0..20 {
            let p = Ckr::new(&g, &w, 2.0, 3).unwrap().sample(t);
            p.verify(&g, &w).unwrap();
            assert_eq!(p.len(), 2);
        }
    }

    #[test]
    fn pad_boost_whole_block() {
        let g = generate(&GeneratorSpec::Path { n: 30 }).unwrap();
        let w = ones(&g);
        let base = FixedSampler(Partition::whole(30, 29.0));
        let boost = PadBoost::new(&g, &w, &base, 4.0, 2).unwrap();
        let p = boost.sample(0);
        p.verify(&g, &w).unwrap();
        assert!(p.blocks()[0].len() > 1);
    }

    #[test]
    fn profile_trivial_samplers() {
        let g = generate(&GeneratorSpec::Grid { rows: 5, cols: 5, torus: false }).unwrap();
        let w = ones(&g);
        let singles = FixedSampler(Partition::singletons(25));
        let prof = padding_profile(&g, &w, &singles, 1.0, &[0.0, 0.5], 3).unwrap();
        assert_eq!(prof.empirical_pad[0], 1.0);
        let whole = FixedSampler(Partition::whole(25, 8.0));
        let prof = padding_profile(&g, &w, &whole, 1.0, &[0.0, 0.5, 1.0], 3).unwrap();
        assert!(prof.empirical_pad.iter().all(|&p| p == 1.0));
    }

    #[test]
    fn labels_are_canonical() {
        let a = Partition::from_labels(&[5, 5, 2, 9, 2], 1.0);
        let b = Partition::from_labels(&[0, 0, 1, 2, 1], 1.0);
        assert_eq!(a, b);
    }
}
