//! Normalized Laplacian spectra, heat kernels and the return-probability
//! certificate chain.

mod certify;
mod embedding;
mod heat;
mod partial;

pub use certify::{
    bump_return_certificate, cheeger_sweep, smoothed_rayleigh_check, BumpReturnCertificate, CheegerSweep,
    SetCertificate, SmoothedRayleigh,
};
pub use embedding::{
    heat_embedding, heat_kernel_weight, HeatEmbedding, HeatKernelWeight, IsotropicCheck, SpreadingReport,
};
pub use heat::{apply_power, average, distribution, push_mass, return_curve, return_probability, HeatKernel};

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{check_vertex, param, Error, Result};
use crate::graph::{DegreeProfile, Graph};

/// Largest vertex count handled by the dense eigensolver.
pub const DENSE_LIMIT: usize = 3000;
/// Number of eigenvalues computed in partial mode.
pub const PARTIAL_COUNT: usize = 256;
/// Residual tolerance on eigenvectors.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMode {
    FullDense,
    PartialIterative,
}

/// Eigenvalues `λ_0 <= λ_1 <= ...` of `L = I - D^{-1/2} A D^{-1/2}` and,
/// optionally, unit eigenvectors `u_k` of `D^{-1/2} A D^{-1/2}`.
#[derive(Clone, Debug)]
pub struct SpectralData {
    eigenvalues: Vec<f64>,
    vectors: Option<Mat<f64>>,
    degrees: Vec<f64>,
    two_m: f64,
    mode: SpectrumMode,
    max_residual: Option<f64>,
}

impl SpectralData {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mode(&self) -> SpectrumMode {
        self.mode
    }

    pub fn is_full(&self) -> bool {
        self.mode == SpectrumMode::FullDense
    }

    pub fn has_vectors(&self) -> bool {
        self.vectors.is_some()
    }

    /// Largest `||S u_k - (1 - λ_k) u_k||` over computed pairs.
    pub fn max_residual(&self) -> Option<f64> {
        self.max_residual
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// `L²(π)`-normalized eigenfunction `φ_k` of the transition operator.
    pub fn eigenfunction(&self, k: usize) -> Option<Vec<f64>> {
        let u = self.vectors.as_ref()?;
        if k >= u.ncols() {
            return None;
        }
        Some((0..self.n()).map(|x| u[(x, k)] * (self.two_m / self.degrees[x]).sqrt()).collect())
    }

    fn multipliers(&self, t: usize) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| (1.0 - l).powi(t as i32)).collect()
    }

    /// `p_t(x, ·)` from the eigendecomposition. Requires full mode with vectors.
    pub(crate) fn kernel_row(&self, x: usize, t: usize) -> Vec<f64> {
        let u = self.vectors.as_ref().expect("eigenvectors required");
        let mu = self.multipliers(t);
        let n = self.n();
        let coef: Vec<f64> = (0..u.ncols()).map(|k| mu[k] * u[(x, k)]).collect();
        let dx = self.degrees[x];
        (0..n)
            .map(|y| {
                let s: f64 = (0..u.ncols()).map(|k| coef[k] * u[(y, k)]).sum();
                s * (self.degrees[y] / dx).sqrt()
            })
            .collect()
    }

    pub(crate) fn kernel_diag(&self, x: usize, t: usize) -> f64 {
        let u = self.vectors.as_ref().expect("eigenvectors required");
        self.multipliers(t).iter().enumerate().map(|(k, m)| m * u[(x, k)] * u[(x, k)]).sum()
    }

    /// `tr(P^t) / n = (1/n) Σ (1 - λ_k)^t`. Requires full mode.
    pub fn diag_trace(&self, t: usize) -> Result<f64> {
        if !self.is_full() {
            return Err(Error::InvalidParameter("trace needs the full spectrum".into()));
        }
        Ok(self.multipliers(t).iter().sum::<f64>() / self.n() as f64)
    }

    /// Check `λ_0 ≈ 0`, `λ_k ∈ [0, 2]` and, in full mode, `Σ λ_k = n`.
    pub fn check_invariants(&self) -> Result<()> {
        let l = &self.eigenvalues;
        if l.first().map(|v| v.abs() > 1e-9).unwrap_or(true) {
            return Err(Error::Invariant(format!("λ_0 = {:?} is not 0", l.first())));
        }
        if let Some(v) = l.iter().find(|v| **v < -1e-9 || **v > 2.0 + 1e-9) {
            return Err(Error::Invariant(format!("eigenvalue {v} outside [0, 2]")));
        }
        if self.is_full() {
            let s: f64 = l.iter().sum();
            if (s - self.n() as f64).abs() > 1e-6 {
                return Err(Error::Invariant(format!("trace {s} differs from n = {}", self.n())));
            }
        }
        if let Some(r) = self.max_residual {
            if r > RESIDUAL_TOL {
                return Err(Error::Invariant(format!("eigenvector residual {r:.3e}")));
            }
        }
        Ok(())
    }
}

fn degrees(g: &Graph) -> Vec<f64> {
    (0..g.n()).map(|x| g.degree(x) as f64).collect()
}

fn normalized_laplacian_dense(g: &Graph) -> Mat<f64> {
    let d = degrees(g);
    let mut m = Mat::<f64>::zeros(g.n(), g.n());
    for x in 0..g.n() {
        m[(x, x)] = 1.0;
        for &y in g.neighbors(x) {
            m[(x, y)] = -1.0 / (d[x] * d[y]).sqrt();
        }
    }
    m
}

fn residual_norms(g: &Graph, lambdas: &[f64], u: &Mat<f64>) -> f64 {
    let d = degrees(g);
    crate::exec::map_range(u.ncols(), |k| {
        let mu = 1.0 - lambdas[k];
        (0..g.n())
            .map(|x| {
                let s: f64 = g.neighbors(x).iter().map(|&y| u[(y, k)] / d[y].sqrt()).sum::<f64>() / d[x].sqrt();
                (s - mu * u[(x, k)]).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    })
    .into_iter()
    .fold(0.0, f64::max)
}

/// Full spectrum by dense symmetric eigensolve.
pub fn spectrum_dense(g: &Graph, want_vectors: bool) -> Result<SpectralData> {
    let l = normalized_laplacian_dense(g);
    let (eigenvalues, vectors, max_residual) = if want_vectors {
        let evd = l
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Invariant(format!("dense eigensolve failed: {e:?}")))?;
        let s = evd.S().column_vector();
        let n = g.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
        let u = evd.U();
        let vectors = Mat::from_fn(n, n, |i, j| u[(i, order[j])]);
        let vals: Vec<f64> = order.iter().map(|&i| s[i]).collect();
        let res = residual_norms(g, &vals, &vectors);
        (vals, Some(vectors), Some(res))
    } else {
        let mut vals = l
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Invariant(format!("dense eigensolve failed: {e:?}")))?;
        vals.sort_by(f64::total_cmp);
        (vals, None, None)
    };
    Ok(SpectralData {
        eigenvalues,
        vectors,
        degrees: degrees(g),
        two_m: 2.0 * g.m() as f64,
        mode: SpectrumMode::FullDense,
        max_residual,
    })
}

/// The `count` smallest eigenvalues by Chebyshev-filtered subspace iteration.
pub fn spectrum_partial(g: &Graph, count: usize, want_vectors: bool) -> Result<SpectralData> {
    param(count >= 1, || "need at least one eigenvalue".into())?;
    let count = count.min(g.n());
    let top = partial::top_eigenpairs(g, count, RESIDUAL_TOL, 200, 0x5eed)?;
    let eigenvalues: Vec<f64> = top.values.iter().map(|m| 1.0 - m).collect();
    Ok(SpectralData {
        eigenvalues,
        vectors: want_vectors.then_some(top.vectors),
        degrees: degrees(g),
        two_m: 2.0 * g.m() as f64,
        mode: SpectrumMode::PartialIterative,
        max_residual: Some(top.max_residual),
    })
}

/// Dense for `n <= DENSE_LIMIT`, otherwise the `PARTIAL_COUNT` smallest eigenvalues.
pub fn spectrum(g: &Graph, want_vectors: bool) -> Result<SpectralData> {
    if g.n() <= DENSE_LIMIT {
        spectrum_dense(g, want_vectors)
    } else {
        spectrum_partial(g, PARTIAL_COUNT, want_vectors)
    }
}

/// The trace identity and its lower bound for even `t >= 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealedCheck {
    pub t: usize,
    pub trace_over_n: f64,
    pub count_small: usize,
    /// `#{λ_k <= 1/t} / (4n)`.
    pub bound: f64,
    /// `#{λ_k <= 1/t} (1 - 1/t)^t / n`.
    pub strengthened: f64,
}

pub fn annealed_check(data: &SpectralData, t: usize) -> Result<AnnealedCheck> {
    param(t >= 2 && t.is_multiple_of(2), || format!("the trace bound is checked for even t >= 2, got {t}"))?;
    let trace_over_n = data.diag_trace(t)?;
    let n = data.n() as f64;
    let count_small = data.eigenvalues.iter().filter(|&&l| l <= 1.0 / t as f64).count();
    Ok(AnnealedCheck {
        t,
        trace_over_n,
        count_small,
        bound: count_small as f64 / (4.0 * n),
        strengthened: count_small as f64 * (1.0 - 1.0 / t as f64).powi(t as i32) / n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenDegreeRow {
    pub k: usize,
    pub lambda: f64,
    pub top_degree_over_n: f64,
    pub ratio: f64,
}

/// Per-`k` ratio `λ_k n / Δ_G(k)` (0 at `k = 0`) and its maximum.
pub fn eigenvalue_degree_report(g: &Graph, data: &SpectralData) -> (Vec<EigenDegreeRow>, f64) {
    let prof = DegreeProfile::new(g);
    let n = g.n() as f64;
    let rows: Vec<EigenDegreeRow> = data
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let top = prof.top_degree_sum(k) as f64;
            let ratio = if k == 0 { 0.0 } else { lambda.max(0.0) * n / top };
            EigenDegreeRow { k, lambda, top_degree_over_n: top / n, ratio }
        })
        .collect();
    let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    (rows, max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub t0: usize,
    pub t1: usize,
    pub p0: f64,
    pub p1: f64,
    /// Secant slope of `-2 log p_{2t}` against `log t`.
    pub slope: f64,
}

/// Finite-scale spectral dimension: secant slopes of `-2 log p_{2T}(x, x)` vs `log T`.
pub fn spectral_dimension_estimate(g: &Graph, x: usize, t_grid: &[usize]) -> Result<Vec<SlopeRow>> {
    check_vertex(x, g.n())?;
    param(t_grid.len() >= 2, || "need at least two times".into())?;
    param(t_grid.windows(2).all(|w| w[0] >= 1 && w[1] > w[0]), || "times must be increasing and positive".into())?;
    let doubled: Vec<usize> = t_grid.iter().map(|t| 2 * t).collect();
    let p = return_curve(g, x, &doubled);
    if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| **v < 1e-300) {
        return Err(Error::Invariant(format!("p_{{2T}} underflow at T = {}: {v:e}", t_grid[i])));
    }
    Ok(t_grid
        .windows(2)
        .zip(p.windows(2))
        .map(|(t, q)| SlopeRow {
            t0: t[0],
            t1: t[1],
            p0: q[0],
            p1: q[1],
            slope: -2.0 * (q[1].ln() - q[0].ln()) / ((t[1] as f64).ln() - (t[0] as f64).ln()),
        })
        .collect())
}

/// Least-squares slope of `-2 log p_{2T}` against `log T` over the whole grid.
pub fn fitted_dimension(rows: &[SlopeRow]) -> f64 {
    let mut pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.t0 as f64).ln(), -2.0 * r.p0.ln())).collect();
    if let Some(r) = rows.last() {
        pts.push(((r.t1 as f64).ln(), -2.0 * r.p1.ln()));
    }
    crate::stats::ols_slope(&pts)
}
