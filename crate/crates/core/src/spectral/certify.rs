//! Level-set sweeps for `Q = P^T`, the smoothed Rayleigh bound and the
//! return-probability certificate built from a bump family.

use serde::{Deserialize, Serialize};

use crate::bumps::{rayleigh_quotient, BumpFamily};
use crate::error::{param, Error, Result};
use crate::exec;
use crate::graph::{DegreeProfile, Graph};

use super::heat::apply_power;
use super::{HeatKernel, SpectralData};

fn pi_weights(g: &Graph) -> Vec<f64> {
    let two_m = 2.0 * g.m() as f64;
    (0..g.n()).map(|x| g.degree(x) as f64 / two_m).collect()
}

fn pi_inner(pi: &[f64], f: &[f64], h: &[f64]) -> f64 {
    pi.iter().zip(f).zip(h).map(|((p, a), b)| p * a * b).sum()
}

fn indicator(n: usize, set: &[usize]) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &x in set {
        v[x] = 1.0;
    }
    v
}

/// The best level set `{ψ² >= h}` for `Q = P^T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheegerSweep {
    pub t: usize,
    pub set: Vec<usize>,
    /// `ψ` value defining the level (the set is `{ψ >= level}`).
    pub level: f64,
    /// `⟨1_S, (I - Q) 1_S⟩_π / π(S)`.
    pub lhs: f64,
    /// `sqrt(2 ⟨ψ, (I - Q) ψ⟩_π / ‖ψ‖²_π)`.
    pub rhs: f64,
    /// `⟨1_S, Q 1_S⟩_π`.
    pub q_mass: f64,
    pub pi_mass: f64,
    pub holds: bool,
}

/// Sweep the level sets of `ψ²` against `Q = P^T`.
///
/// `q(S) = ⟨1_S, P^T 1_S⟩_π` is computed exactly for every distinct level
/// by one mat-vec chain per level.
pub fn cheeger_sweep(g: &Graph, t: usize, psi: &[f64]) -> Result<CheegerSweep> {
    let n = g.n();
    param(psi.len() == n, || format!("function has {} entries for {n} vertices", psi.len()))?;
    param(psi.iter().all(|v| (0.0..=1.0).contains(v)), || "ψ must take values in [0, 1]".into())?;
    if psi.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroFunction);
    }
    let pi = pi_weights(g);
    let norm = pi_inner(&pi, psi, psi);
    let smoothed = apply_power(g, psi, t);
    let energy = (norm - pi_inner(&pi, psi, &smoothed)).max(0.0);
    let rhs = (2.0 * energy / norm).sqrt();

    let mut order: Vec<usize> = (0..n).filter(|&x| psi[x] > 0.0).collect();
    order.sort_by(|&a, &b| psi[b].total_cmp(&psi[a]).then(a.cmp(&b)));
    let mut cuts = Vec::new();
    for i in 0..order.len() {
        if i + 1 == order.len() || psi[order[i + 1]] != psi[order[i]] {
            cuts.push(i + 1);
        }
    }
    let evaluated = exec::map_slice(&cuts, |&len| {
        let set = &order[..len];
        let f = apply_power(g, &indicator(n, set), t);
        let q: f64 = set.iter().map(|&x| pi[x] * f[x]).sum();
        let mass: f64 = set.iter().map(|&x| pi[x]).sum();
        (len, q, mass, (mass - q) / mass)
    });
    let best = evaluated
        .iter()
        .min_by(|a, b| a.3.total_cmp(&b.3).then(a.0.cmp(&b.0)))
        .copied()
        .expect("ψ has nonempty support");
    let mut set = order[..best.0].to_vec();
    let level = psi[order[best.0 - 1]];
    set.sort_unstable();
    Ok(CheegerSweep { t, set, level, lhs: best.3, rhs, q_mass: best.1, pi_mass: best.2, holds: best.3 <= rhs + 1e-12 })
}

/// Smoothed Rayleigh bound and the Jensen power inequality for `A = P²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedRayleigh {
    pub t: usize,
    pub rayleigh: f64,
    /// `⟨ψ, (I - P^T) ψ⟩_π / ‖ψ‖²_π`.
    pub lhs: f64,
    /// `2 R(ψ) (T + 1)`.
    pub bound: f64,
    /// `⟨ψ̂, P^{2T} ψ̂⟩_π`.
    pub power_lhs: f64,
    /// `⟨ψ̂, P² ψ̂⟩_π^T`.
    pub power_rhs: f64,
}

impl SmoothedRayleigh {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.bound + tol && self.power_lhs + tol >= self.power_rhs
    }
}

pub fn smoothed_rayleigh_check(g: &Graph, psi: &[f64], t: usize) -> Result<SmoothedRayleigh> {
    param(t >= 1, || "T must be at least 1".into())?;
    let rayleigh = rayleigh_quotient(g, psi)?;
    let pi = pi_weights(g);
    let norm = pi_inner(&pi, psi, psi);
    let lhs = 1.0 - pi_inner(&pi, psi, &apply_power(g, psi, t)) / norm;
    let p2 = pi_inner(&pi, psi, &apply_power(g, psi, 2)) / norm;
    let p2t = pi_inner(&pi, psi, &apply_power(g, psi, 2 * t)) / norm;
    Ok(SmoothedRayleigh {
        t,
        rayleigh,
        lhs,
        bound: 2.0 * rayleigh * (t as f64 + 1.0),
        power_lhs: p2t,
        power_rhs: p2.max(0.0).powi(t as i32),
    })
}

/// Per-bump record of the return-probability certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetCertificate {
    pub bump: usize,
    pub rayleigh: f64,
    pub set_size: usize,
    pub pi_mass: f64,
    /// `⟨1_S, P^T 1_S⟩_π / π(S)`.
    pub retention: f64,
    /// `(1 - 2 sqrt(R (T + 1)))_+`.
    pub retention_bound: f64,
    pub retention_holds: bool,
    /// Vertices of `S` with `π <= γ`.
    pub light_size: usize,
    /// `π({x ∈ S : p_T(x, H) >= 1/2})`.
    pub half_mass: f64,
    /// `(1 - 2δ) π(S) - 2 π(S \ H)` with `1 - δ` the measured retention.
    pub half_mass_bound: f64,
    pub core_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpReturnCertificate {
    pub t: usize,
    pub epsilon: f64,
    pub beta: f64,
    pub max_support: usize,
    /// `ε β / (4 M)`.
    pub threshold: f64,
    pub gamma: f64,
    pub sets: Vec<SetCertificate>,
    /// Certified vertices, sorted.
    pub certified: Vec<usize>,
    pub certified_mass: f64,
    /// π-mass of all vertices whose exact `p_{2T}(x, x)` clears the threshold.
    pub exact_mass: f64,
    /// `-2 π*(ε) - β + Σ (1 - 4 sqrt(R_i (T + 1)))_+ π(core_i)`.
    pub guaranteed_mass: f64,
    pub vacuous: bool,
    /// Certified vertices whose exact return probability is below the threshold.
    pub threshold_violations: usize,
    /// Vertices whose per-vertex lower bound exceeds the exact value.
    pub lower_bound_violations: usize,
    pub kernel_from_spectrum: bool,
}

impl BumpReturnCertificate {
    /// Every deterministic claim of the certificate held.
    pub fn is_sound(&self) -> bool {
        self.threshold_violations == 0
            && self.lower_bound_violations == 0
            && self.sets.iter().all(|s| s.retention_holds && s.half_mass + 1e-12 >= s.half_mass_bound)
            && self.certified_mass + 1e-12 >= self.guaranteed_mass
            && self.exact_mass + 1e-12 >= self.certified_mass
    }
}

/// Certify `p_{2T}(x, x) >= ε β / 4M` on the π-heavy part of the level sets
/// chosen by [`cheeger_sweep`], and cross-check every claim against the
/// exact heat kernel.
///
/// Each vertex `x` of a chosen set `S` gets the lower bound
/// `π(x) p_T(x, H)² / (γ |S|)` where `H` are the vertices of `S` with
/// `π <= γ = 1/(εn)`; this follows from Cauchy-Schwarz and reversibility.
pub fn bump_return_certificate(
    g: &Graph,
    family: &BumpFamily,
    t: usize,
    epsilon: f64,
    beta: f64,
    spectral: Option<&SpectralData>,
) -> Result<BumpReturnCertificate> {
    param(t >= 1, || "T must be at least 1".into())?;
    param(epsilon > 0.0 && epsilon <= 1.0, || format!("ε = {epsilon} outside (0, 1]"))?;
    param((0.0..=1.0).contains(&beta), || format!("β = {beta} outside [0, 1]"))?;
    let n = g.n();
    let prof = DegreeProfile::new(g);
    let pi = pi_weights(g);
    let max_support = family.max_support().max(1);
    let threshold = epsilon * beta / (4.0 * max_support as f64);
    let gamma = 1.0 / (epsilon * n as f64);
    let kernel = HeatKernel::new(g, spectral);
    let exact = kernel.diagonal(2 * t);

    let per_bump = exec::map_range(family.len(), |i| -> Result<(SetCertificate, Vec<(usize, f64)>)> {
        let psi = family.dense(i);
        let rayleigh = family.bumps()[i].rayleigh;
        let sweep = cheeger_sweep(g, t, &psi)?;
        let set = &sweep.set;
        let light: Vec<usize> = set.iter().copied().filter(|&y| pi[y] <= gamma).collect();
        let hit = apply_power(g, &indicator(n, &light), t);
        let size = set.len() as f64;
        let lower: Vec<(usize, f64)> = set.iter().map(|&x| (x, pi[x] / (gamma * size) * hit[x] * hit[x])).collect();
        let retention = sweep.q_mass / sweep.pi_mass;
        let retention_bound = (1.0 - 2.0 * (rayleigh * (t as f64 + 1.0)).sqrt()).max(0.0);
        let heavy_mass: f64 = set.iter().filter(|&&y| pi[y] > gamma).map(|&y| pi[y]).sum();
        let half_mass: f64 = set.iter().filter(|&&x| hit[x] >= 0.5).map(|&x| pi[x]).sum();
        let delta = 1.0 - retention;
        let core_mass = prof.pi_of(&family.bumps()[i].core);
        Ok((
            SetCertificate {
                bump: i,
                rayleigh,
                set_size: set.len(),
                pi_mass: sweep.pi_mass,
                retention,
                retention_bound,
                retention_holds: retention + 1e-12 >= retention_bound,
                light_size: light.len(),
                half_mass,
                half_mass_bound: (1.0 - 2.0 * delta) * sweep.pi_mass - 2.0 * heavy_mass,
                core_mass,
            },
            lower,
        ))
    });

    let mut sets = Vec::with_capacity(per_bump.len());
    let mut certified = Vec::new();
    let mut lower_bound_violations = 0;
    for r in per_bump {
        let (cert, lower) = r?;
        for (x, l) in lower {
            if l > exact[x] + 1e-12 {
                lower_bound_violations += 1;
            }
            if l >= threshold {
                certified.push(x);
            }
        }
        sets.push(cert);
    }
    certified.sort_unstable();
    certified.dedup();
    let certified_mass: f64 = certified.iter().map(|&x| pi[x]).sum();
    let threshold_violations = certified.iter().filter(|&&x| exact[x] < threshold).count();
    let exact_mass: f64 = (0..n).filter(|&x| exact[x] >= threshold).map(|x| pi[x]).sum();
    let boost: f64 = sets
        .iter()
        .map(|s| (1.0 - 4.0 * (s.rayleigh * (t as f64 + 1.0)).sqrt()).max(0.0) * s.core_mass)
        .sum();
    let guaranteed_mass = -2.0 * prof.pi_star(epsilon)? - beta + boost;
    Ok(BumpReturnCertificate {
        t,
        epsilon,
        beta,
        max_support,
        threshold,
        gamma,
        sets,
        certified,
        certified_mass,
        exact_mass,
        guaranteed_mass,
        vacuous: guaranteed_mass <= 0.0,
        threshold_violations,
        lower_bound_violations,
        kernel_from_spectrum: kernel.uses_spectrum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GeneratorSpec};

    #[test]
    fn k2_sweep() {
        let g = generate(&GeneratorSpec::Complete { n: 2 }).unwrap();
        let s = cheeger_sweep(&g, 1, &[1.0, 0.0]).unwrap();
        assert_eq!(s.set, vec![0]);
        assert!((s.lhs - 1.0).abs() < 1e-15);
        // ⟨ψ, (I - P) ψ⟩_π = 1/2 and ‖ψ‖²_π = 1/2.
        assert!((s.rhs - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_sweep() {
        let g = generate(&GeneratorSpec::Cycle { n: 6 }).unwrap();
        let s = cheeger_sweep(&g, 3, &[1.0; 6]).unwrap();
        assert_eq!(s.set.len(), 6);
        assert!(s.lhs.abs() < 1e-14 && s.rhs.abs() < 1e-7);
    }

    #[test]
    fn indicator_sweep_returns_set() {
        let g = generate(&GeneratorSpec::Grid { rows: 5, cols: 5, torus: false }).unwrap();
        let mut psi = vec![0.0; 25];
        for x in [0, 1, 5, 6, 7] {
            psi[x] = 1.0;
        }
        let s = cheeger_sweep(&g, 2, &psi).unwrap();
        assert_eq!(s.set, vec![0, 1, 5, 6, 7]);
        assert!(s.holds);
    }

    #[test]
    fn eigenfunction_smoothing() {
        let g = generate(&GeneratorSpec::Cycle { n: 8 }).unwrap();
        let data = super::super::spectrum(&g, true).unwrap();
        let lambda = data.eigenvalues()[2];
        let phi = data.eigenfunction(2).unwrap();
        let r = smoothed_rayleigh_check(&g, &phi, 3).unwrap();
        assert!((r.lhs - (1.0 - (1.0 - lambda).powi(3))).abs() < 1e-12);
        assert!(r.holds(1e-12));
    }
}
