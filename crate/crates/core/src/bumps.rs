//! Disjointly supported test functions built from a conformal weight and a
//! padded partition: the eigenvalue variant (small Rayleigh quotients on
//! many sets) and the delocalized variant (bumps whose plateaus carry almost
//! all of the stationary mass).

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::exec;
use crate::graph::{ball_sizes, set_diameter, ConformalWeight, DegreeProfile, Dijkstra, Graph};
use crate::partitions::{padding_radii, Partition, PartitionSampler};
use crate::rng;
use crate::spectral::SpectralData;

/// Partition resamples before giving up.
pub const MAX_PARTITION_ATTEMPTS: usize = 64;

/// `(1/|E|) Σ_{edges} |f(x) - f(y)|² / ‖f‖²_π`.
pub fn rayleigh_quotient(g: &Graph, f: &[f64]) -> Result<f64> {
    param(f.len() == g.n(), || format!("function has {} entries for {} vertices", f.len(), g.n()))?;
    let norm: f64 = (0..g.n()).map(|x| g.degree(x) as f64 * f[x] * f[x]).sum::<f64>() / (2.0 * g.m() as f64);
    if norm == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let energy: f64 = g.edges().map(|(u, v)| (f[u] - f[v]).powi(2)).sum();
    Ok(energy / g.m() as f64 / norm)
}

fn sparse_rayleigh(g: &Graph, support: &[usize], values: &[f64]) -> Result<f64> {
    let mut f = vec![0.0; g.n()];
    for (&x, &v) in support.iter().zip(values) {
        f[x] = v;
    }
    rayleigh_quotient(g, &f)
}

/// Sparse entries of a bump and its core, as handed to [`BumpFamily::new`].
pub type BumpInput = (Vec<(usize, f64)>, Vec<usize>);

/// One test function, stored on its support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    /// Sorted support.
    pub support: Vec<usize>,
    pub values: Vec<f64>,
    /// The plateau (delocalized variant) or the seed set (eigenvalue variant).
    pub core: Vec<usize>,
    pub rayleigh: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpParams {
    pub r: f64,
    pub alpha: f64,
    pub k: usize,
    pub eta: f64,
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpFamily {
    n: usize,
    bumps: Vec<Bump>,
    params: BumpParams,
}

impl BumpFamily {
    /// Validate disjointness and index ranges, sort supports, compute Rayleigh quotients.
    pub fn new(g: &Graph, functions: Vec<BumpInput>, params: BumpParams) -> Result<Self> {
        let n = g.n();
        let mut owner = vec![usize::MAX; n];
        let mut bumps = Vec::with_capacity(functions.len());
        for (i, (mut entries, mut core)) in functions.into_iter().enumerate() {
            entries.sort_by_key(|e| e.0);
            for &(x, v) in &entries {
                crate::error::check_vertex(x, n)?;
                if v <= 0.0 || !v.is_finite() {
                    return Err(Error::InvalidParameter(format!("bump {i} stores value {v} at {x}")));
                }
                if owner[x] != usize::MAX {
                    return Err(Error::Invariant(format!("bumps {} and {i} share vertex {x}", owner[x])));
                }
                owner[x] = i;
            }
            core.sort_unstable();
            if let Some(&x) = core.iter().find(|&&x| x >= n || owner[x] != i) {
                return Err(Error::Invariant(format!("core vertex {x} of bump {i} lies outside its support")));
            }
            let support: Vec<usize> = entries.iter().map(|e| e.0).collect();
            let values: Vec<f64> = entries.iter().map(|e| e.1).collect();
            let rayleigh = sparse_rayleigh(g, &support, &values)?;
            bumps.push(Bump { support, values, core, rayleigh });
        }
        Ok(BumpFamily { n, bumps, params })
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn len(&self) -> usize {
        self.bumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bumps.is_empty()
    }

    pub fn params(&self) -> &BumpParams {
        &self.params
    }

    /// Bump `i` as a dense vector.
    pub fn dense(&self, i: usize) -> Vec<f64> {
        let mut f = vec![0.0; self.n];
        let b = &self.bumps[i];
        for (&x, &v) in b.support.iter().zip(&b.values) {
            f[x] = v;
        }
        f
    }

    pub fn max_support(&self) -> usize {
        self.bumps.iter().map(|b| b.support.len()).max().unwrap_or(0)
    }

    pub fn max_rayleigh(&self) -> f64 {
        self.bumps.iter().map(|b| b.rayleigh).fold(0.0, f64::max)
    }

    /// Recompute every Rayleigh quotient and compare with the cached value.
    pub fn verify(&self, g: &Graph) -> Result<()> {
        for (i, b) in self.bumps.iter().enumerate() {
            let r = sparse_rayleigh(g, &b.support, &b.values)?;
            if (r - b.rayleigh).abs() > 1e-12 * r.abs().max(1.0) {
                return Err(Error::Invariant(format!("bump {i}: cached Rayleigh {} vs {r}", b.rayleigh)));
            }
        }
        Ok(())
    }
}

/// `λ_{r-1} <= 2 max_i R(ψ_i)` against a computed spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalCheck {
    pub r: usize,
    pub eigenvalue: f64,
    pub theta: f64,
    pub holds: bool,
}

pub fn variational_check(family: &BumpFamily, spectrum: &SpectralData) -> Result<VariationalCheck> {
    let r = family.len();
    param(r >= 1, || "empty family".into())?;
    let ev = spectrum.eigenvalues();
    let eigenvalue = *ev
        .get(r - 1)
        .ok_or_else(|| Error::InvalidParameter(format!("spectrum has {} eigenvalues, need {r}", ev.len())))?;
    let theta = family.max_rayleigh();
    Ok(VariationalCheck { r, eigenvalue, theta, holds: eigenvalue <= 2.0 * theta + 1e-8 })
}

fn max_ball(g: &Graph, w: &ConformalWeight, r: f64) -> usize {
    ball_sizes(g, w, r).into_iter().max().unwrap_or(0)
}

/// Vertices within distance `< limit` of `sources`, with their distances.
fn strict_neighbourhood(dj: &mut Dijkstra, sources: &[usize], limit: f64) -> Vec<(usize, f64)> {
    dj.run(sources, limit).iter().copied().filter(|&(_, d)| d < limit).collect()
}

fn closed_neighbourhood(dj: &mut Dijkstra, sources: &[usize], limit: f64) -> Vec<usize> {
    let mut v: Vec<usize> = dj.run(sources, limit).iter().map(|p| p.0).collect();
    v.sort_unstable();
    v
}

fn trial_index(seed: u64, label: &str, attempt: usize) -> u64 {
    rng::derive(seed, label).wrapping_add(attempt as u64)
}

/// Shaved interiors `{x ∈ S : B(x, radius) ⊆ S}` of every block.
fn shaved_blocks(g: &Graph, w: &ConformalWeight, p: &Partition, radius: f64) -> Vec<Vec<usize>> {
    let esc = padding_radii(g, w, p, radius);
    p.blocks().iter().map(|b| b.iter().copied().filter(|&x| radius < esc[x]).collect()).collect()
}

/// A separated set of the eigenvalue construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SepSet {
    pub set: Vec<usize>,
    /// `B_ω(T, R/6α)`.
    pub dilation: Vec<usize>,
    pub area_eta: f64,
    pub max_degree: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SepSets {
    pub sets: Vec<SepSet>,
    /// Number of merged sets before keeping the lighter half.
    pub merged: usize,
    pub eta: f64,
    /// `area^η_ω(V)`.
    pub area_eta_total: f64,
    /// `16 d̄(1/K)`.
    pub degree_cap: f64,
    pub min_separation: f64,
    pub shaved_fraction: f64,
    pub attempts: usize,
}

/// `area^η_ω(S) = 16 d̄(1/K) Σ_{S} ω² + η² |E(S, V_L)|` with `V_L = {ω >= η}`.
fn area_eta(g: &Graph, w: &ConformalWeight, set: &[usize], member: &[bool], eta: f64, cap: f64) -> f64 {
    let area: f64 = set.iter().map(|&x| w[x] * w[x]).sum();
    let heavy = |v: usize| w[v] >= eta;
    let mut edges = 0usize;
    for &x in set {
        for &y in g.neighbors(x) {
            // Edges inside S are seen twice; count them from the smaller end.
            let counts = if member[y] { x < y && (heavy(x) || heavy(y)) } else { heavy(y) };
            if counts {
                edges += 1;
            }
        }
    }
    cap * area + eta * eta * edges as f64
}

/// Separated sets of size between `K/2` and `K` with light dilations and no
/// high-degree vertex nearby.
pub fn sepsets_easy<S: PartitionSampler>(
    g: &Graph,
    w: &ConformalWeight,
    r: f64,
    k: usize,
    alpha: f64,
    sampler: &S,
    seed: u64,
) -> Result<SepSets> {
    w.check_len(g)?;
    let n = g.n();
    param(r > 0.0 && alpha >= 1.0, || format!("need R > 0 and α >= 1, got R = {r}, α = {alpha}"))?;
    param(sampler.tau() <= r / 2.0 + 1e-12, || format!("sampler diameter {} exceeds R/2", sampler.tau()))?;
    let ball = max_ball(g, w, r);
    if ball > k || 2 * k > n {
        return Err(Error::Assumption(format!("need max |B(x, R)| = {ball} <= K = {k} <= n/2 = {}", n / 2)));
    }
    let prof = DegreeProfile::new(g);
    let eta = r / (12.0 * alpha);
    let cap = 16.0 * prof.mean_top_degree(1.0 / k as f64)?;
    let shave = r / (4.0 * alpha);
    let dilate = r / (6.0 * alpha);

    let mut best: Option<(usize, Vec<Vec<usize>>)> = None;
    let mut attempts = 0;
    for attempt in 0..MAX_PARTITION_ATTEMPTS {
        attempts = attempt + 1;
        let p = sampler.sample(trial_index(seed, "sepsets_easy", attempt));
        let cores = shaved_blocks(g, w, &p, shave);
        let count: usize = cores.iter().map(|c| c.len()).sum();
        if best.as_ref().map(|b| count > b.0).unwrap_or(true) {
            best = Some((count, cores));
        }
        if 2 * count >= n {
            break;
        }
    }
    let (count, cores) = best.expect("at least one attempt");
    if 2 * count < n {
        return Err(Error::Statistical {
            attempts,
            detail: format!("best shaved fraction {:.4} < 1/2", count as f64 / n as f64),
        });
    }

    let half = k.div_ceil(2);
    let mut merged: Vec<Vec<usize>> = Vec::new();
    let mut acc: Vec<usize> = Vec::new();
    for c in cores.into_iter().filter(|c| !c.is_empty()) {
        if c.len() >= half {
            merged.push(c);
            continue;
        }
        acc.extend(c);
        if acc.len() >= half {
            merged.push(std::mem::take(&mut acc));
        }
    }
    let total_merged = merged.len();

    let mut member = vec![false; n];
    let all: Vec<usize> = (0..n).collect();
    let area_eta_total = {
        member.iter_mut().for_each(|m| *m = true);
        let a = area_eta(g, w, &all, &member, eta, cap);
        member.iter_mut().for_each(|m| *m = false);
        a
    };
    let mut dj = Dijkstra::new(g, w);
    let mut annotated: Vec<SepSet> = merged
        .into_iter()
        .map(|mut set| {
            set.sort_unstable();
            let dilation = closed_neighbourhood(&mut dj, &set, dilate);
            for &x in &dilation {
                member[x] = true;
            }
            let a = area_eta(g, w, &dilation, &member, eta, cap);
            for &x in &dilation {
                member[x] = false;
            }
            let max_degree = dilation.iter().map(|&x| g.degree(x)).max().unwrap_or(0);
            SepSet { set, dilation, area_eta: a, max_degree }
        })
        .collect();
    annotated.sort_by(|a, b| a.area_eta.total_cmp(&b.area_eta));
    annotated.truncate(total_merged.div_ceil(2));
    annotated.retain(|s| s.max_degree as f64 <= cap);

    let min_separation = min_pairwise_distance(g, w, annotated.iter().map(|s| s.set.as_slice()).collect());
    let out = SepSets {
        sets: annotated,
        merged: total_merged,
        eta,
        area_eta_total,
        degree_cap: cap,
        min_separation,
        shaved_fraction: count as f64 / n as f64,
        attempts,
    };
    check_sepsets(&out, n, k, r, alpha)?;
    Ok(out)
}

fn min_pairwise_distance(g: &Graph, w: &ConformalWeight, sets: Vec<&[usize]>) -> f64 {
    let mut owner = vec![usize::MAX; g.n()];
    for (i, s) in sets.iter().enumerate() {
        for &x in *s {
            owner[x] = i;
        }
    }
    let per = exec::map_range_with(
        sets.len(),
        || Dijkstra::new(g, w),
        |dj, i| {
            let mut hit = f64::INFINITY;
            dj.run_until(sets[i], f64::INFINITY, |v, d| {
                if owner[v] != usize::MAX && owner[v] != i {
                    hit = d;
                    false
                } else {
                    true
                }
            });
            hit
        },
    );
    per.into_iter().fold(f64::INFINITY, f64::min)
}

fn check_sepsets(s: &SepSets, n: usize, k: usize, r: f64, alpha: f64) -> Result<()> {
    let need = n.div_ceil(16 * k);
    if s.sets.len() < need {
        return Err(Error::Statistical {
            attempts: s.attempts,
            detail: format!("{} separated sets, need at least {need}", s.sets.len()),
        });
    }
    for (i, t) in s.sets.iter().enumerate() {
        if 2 * t.set.len() < k || t.set.len() > k {
            return Err(Error::Invariant(format!("set {i} has size {} outside [K/2, K]", t.set.len())));
        }
        if t.area_eta > 3.0 / s.merged as f64 * s.area_eta_total * (1.0 + 1e-12) {
            return Err(Error::Invariant(format!("set {i} has area {} above 3/r of the total", t.area_eta)));
        }
    }
    if s.min_separation < r / (2.0 * alpha) - 1e-9 {
        return Err(Error::Invariant(format!("sets only {} apart, need R/2α", s.min_separation)));
    }
    Ok(())
}

/// Report for the eigenvalue-variant family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EasyBumpReport {
    pub max_rayleigh: f64,
    /// `α² (d̄(1/K) + d̄(α²/R²)) / R²`.
    pub scale: f64,
    /// `max_rayleigh / scale`, the implied constant.
    pub constant: f64,
    pub sepsets: SepSets,
}

/// `ψ_i(x) = max(0, η - dist_ω(x, T_i))` over the separated sets, `η = R/12α`.
pub fn bump_family_easy<S: PartitionSampler>(
    g: &Graph,
    w: &ConformalWeight,
    r: f64,
    k: usize,
    alpha: f64,
    sampler: &S,
    seed: u64,
) -> Result<(BumpFamily, EasyBumpReport)> {
    let sep = sepsets_easy(g, w, r, k, alpha, sampler, seed)?;
    let eta = sep.eta;
    let mut dj = Dijkstra::new(g, w);
    let functions = sep
        .sets
        .iter()
        .map(|t| {
            let entries = strict_neighbourhood(&mut dj, &t.set, eta).into_iter().map(|(x, d)| (x, eta - d)).collect();
            (entries, t.set.clone())
        })
        .collect();
    let family = BumpFamily::new(g, functions, BumpParams { r, alpha, k, eta, delta: None })?;
    let prof = DegreeProfile::new(g);
    let scale = alpha * alpha
        * (prof.mean_top_degree(1.0 / k as f64)? + prof.mean_top_degree((alpha * alpha / (r * r)).min(1.0))?)
        / (r * r);
    let max_rayleigh = family.max_rayleigh();
    Ok((family, EasyBumpReport { max_rayleigh, scale, constant: max_rayleigh / scale, sepsets: sep }))
}

/// Report for the delocalized family; every displayed conclusion is evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelocalizedReport {
    pub attempts: usize,
    /// `Σ_{blocks} π(Ŝ)` of the retained partition.
    pub shaved_mass: f64,
    /// `Σ_i π(ψ_i^{-1}(1))`.
    pub plateau_mass: f64,
    /// `1 - δ - π*(δ)`.
    pub mass_bound: f64,
    pub mass_holds: bool,
    pub max_support_diameter: f64,
    pub max_support_size: usize,
    /// `Σ_i sqrt(R(ψ_i)) π(supp ψ_i)`.
    pub weighted_root_rayleigh: f64,
    /// `(1/sqrt|E|)(sqrt(2Δ(|V_L|)) + sqrt(2 d̄(δ/K)) ‖ω‖_{ℓ²}/η)`.
    pub root_rayleigh_bound: f64,
    pub root_rayleigh_holds: bool,
    /// The closed-form bound with constant `6α/(δR)`, reported for comparison only.
    pub closed_form_bound: f64,
    pub degree_cap: f64,
    pub eta: f64,
}

/// Bumps `ψ_i = (1/η) max(0, η - dist_ω(·, Ŝ_i))` on shaved blocks, `η = δR/18α`.
#[allow(clippy::too_many_arguments)]
pub fn bump_family_delocalized<S: PartitionSampler>(
    g: &Graph,
    w: &ConformalWeight,
    r: f64,
    k: usize,
    alpha: f64,
    delta: f64,
    sampler: &S,
    seed: u64,
) -> Result<(BumpFamily, DelocalizedReport)> {
    w.check_len(g)?;
    param(r > 0.0 && alpha >= 1.0, || format!("need R > 0 and α >= 1, got R = {r}, α = {alpha}"))?;
    param(delta > 0.0 && delta <= 1.0, || format!("δ = {delta} outside (0, 1]"))?;
    param(sampler.tau() <= r / 2.0 + 1e-12, || format!("sampler diameter {} exceeds R/2", sampler.tau()))?;
    let ball = max_ball(g, w, r);
    if ball > k {
        return Err(Error::Assumption(format!("max |B(x, R)| = {ball} exceeds K = {k}")));
    }
    let prof = DegreeProfile::new(g);
    let eta = delta * r / (18.0 * alpha);
    let shave = delta * r / (6.0 * alpha);
    let cap = prof.mean_top_degree(delta / k as f64)?;

    // Score: (shaved mass reaches 1 - δ, retained plateau mass).
    let mut best: Option<(bool, f64, f64, Vec<Vec<usize>>)> = None;
    let mut attempts = 0;
    for attempt in 0..MAX_PARTITION_ATTEMPTS {
        attempts = attempt + 1;
        let p = sampler.sample(trial_index(seed, "bumps_delocalized", attempt));
        let cores = shaved_blocks(g, w, &p, shave);
        let shaved: f64 = cores.iter().map(|c| prof.pi_of(c)).sum();
        let kept: Vec<Vec<usize>> = p
            .blocks()
            .iter()
            .zip(cores)
            .filter(|(b, c)| {
                !c.is_empty()
                    && 2.0 * prof.pi_of(c) >= prof.pi_of(b)
                    && b.iter().all(|&x| g.degree(x) as f64 <= cap)
            })
            .map(|(_, c)| c)
            .collect();
        let retained: f64 = kept.iter().map(|c| prof.pi_of(c)).sum();
        let ok = shaved >= 1.0 - delta;
        let better = match &best {
            None => true,
            Some((bok, bret, _, _)) => (ok, retained) > (*bok, *bret),
        };
        if better {
            best = Some((ok, retained, shaved, kept));
        }
        if ok && retained >= 1.0 - delta {
            break;
        }
    }
    let (ok, _, shaved_mass, kept) = best.expect("at least one attempt");
    if !ok {
        return Err(Error::Statistical {
            attempts,
            detail: format!("best shaved mass {shaved_mass:.4} < 1 - δ = {:.4}", 1.0 - delta),
        });
    }

    let mut dj = Dijkstra::new(g, w);
    let functions: Vec<BumpInput> = kept
        .iter()
        .map(|core| {
            let entries: Vec<(usize, f64)> =
                strict_neighbourhood(&mut dj, core, eta).into_iter().map(|(x, d)| (x, (eta - d) / eta)).collect();
            let plateau = entries.iter().filter(|e| e.1 == 1.0).map(|e| e.0).collect();
            (entries, plateau)
        })
        .collect();
    let family = BumpFamily::new(g, functions, BumpParams { r, alpha, k, eta, delta: Some(delta) })?;

    let plateau_mass: f64 = family.bumps().iter().map(|b| prof.pi_of(&b.core)).sum();
    let mass_bound = 1.0 - delta - prof.pi_star(delta)?;
    let max_support_diameter = exec::map_slice(family.bumps(), |b| set_diameter(g, w, &b.support))
        .into_iter()
        .fold(0.0, f64::max);
    let weighted_root_rayleigh: f64 = family.bumps().iter().map(|b| b.rayleigh.sqrt() * prof.pi_of(&b.support)).sum();
    let heavy = w.values().iter().filter(|&&v| v >= eta).count();
    let l2 = w.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    let m = g.m() as f64;
    let root_rayleigh_bound =
        ((2.0 * prof.top_degree_sum(heavy) as f64).sqrt() + (2.0 * cap).sqrt() * l2 / eta) / m.sqrt();
    let rms = w.l2_norm();
    let closed_form_bound = 6.0 * alpha / (delta * r)
        * rms
        * ((prof.mean_top_degree((alpha * rms / (delta * r)).powi(2).min(1.0))?).sqrt() + cap.sqrt())
        / prof.mean_top_degree(1.0)?.sqrt();
    let report = DelocalizedReport {
        attempts,
        shaved_mass,
        plateau_mass,
        mass_bound,
        mass_holds: plateau_mass + 1e-12 >= mass_bound,
        max_support_diameter,
        max_support_size: family.max_support(),
        weighted_root_rayleigh,
        root_rayleigh_bound,
        root_rayleigh_holds: weighted_root_rayleigh <= root_rayleigh_bound * (1.0 + 1e-12),
        closed_form_bound,
        degree_cap: cap,
        eta,
    };
    if report.max_support_diameter > r / 2.0 + 1e-9 || report.max_support_size > k {
        return Err(Error::Invariant(format!(
            "support diameter {} or size {} out of bounds",
            report.max_support_diameter, report.max_support_size
        )));
    }
    Ok((family, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GeneratorSpec};
    use crate::partitions::{Ckr, FixedSampler};

    #[test]
    fn rayleigh_examples() {
        let k2 = generate(&GeneratorSpec::Complete { n: 2 }).unwrap();
        assert!((rayleigh_quotient(&k2, &[1.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
        let k3 = generate(&GeneratorSpec::Complete { n: 3 }).unwrap();
        assert!((rayleigh_quotient(&k3, &[1.0, 0.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(rayleigh_quotient(&k3, &[0.3; 3]).unwrap(), 0.0);
        assert!(matches!(rayleigh_quotient(&k3, &[0.0; 3]), Err(Error::ZeroFunction)));
    }

    #[test]
    fn overlapping_bumps_rejected() {
        let g = generate(&GeneratorSpec::Path { n: 4 }).unwrap();
        let params = BumpParams { r: 1.0, alpha: 1.0, k: 1, eta: 1.0, delta: None };
        let f = vec![(vec![(0, 1.0), (1, 0.5)], vec![0]), (vec![(1, 1.0)], vec![1])];
        assert!(BumpFamily::new(&g, f, params).is_err());
    }

    #[test]
    fn easy_family_on_path() {
        let g = generate(&GeneratorSpec::Path { n: 64 }).unwrap();
        let w = ConformalWeight::uniform(64, 1.0);
        let sampler = Ckr::new(&g, &w, 4.0, 3).unwrap();
        let (family, rep) = bump_family_easy(&g, &w, 8.0, 17, 4.0, &sampler, 1).unwrap();
        assert!(!family.is_empty());
        assert!(rep.sepsets.min_separation >= 8.0 / 8.0);
        family.verify(&g).unwrap();
    }

    #[test]
    fn delocalized_with_whole_block() {
        let g = generate(&GeneratorSpec::Cycle { n: 12 }).unwrap();
        let w = ConformalWeight::uniform(12, 1.0);
        let p = Partition::from_labels(&(0..12).map(|x| x / 4).collect::<Vec<_>>(), 3.0);
        let (family, rep) = bump_family_delocalized(&g, &w, 6.0, 13, 1.0, 1.0, &FixedSampler(p), 0).unwrap();
        for b in family.bumps() {
            assert!(b.values.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(b.core.iter().all(|x| b.support.contains(x)));
        }
        assert!(rep.root_rayleigh_holds);
    }
}
