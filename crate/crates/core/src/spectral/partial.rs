//! Top of the spectrum of the normalized adjacency `S = D^{-1/2} A D^{-1/2}`
//! by Chebyshev-filtered subspace iteration.
//!
//! Each sweep applies a Chebyshev polynomial that is bounded on
//! `[-1, cut]` and grows fast above `cut`, where `cut` is the smallest Ritz
//! value of the block, then re-orthonormalizes and does a Rayleigh-Ritz step.

use faer::{Mat, Side};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::exec;
use crate::graph::Graph;
use crate::rng;

const FILTER_DEGREE: usize = 24;

pub(crate) struct TopEigen {
    /// Eigenvalues of `S`, nonincreasing.
    pub values: Vec<f64>,
    /// Unit eigenvectors, one per column.
    pub vectors: Mat<f64>,
    pub max_residual: f64,
}

fn scale(g: &Graph) -> Vec<f64> {
    (0..g.n()).map(|x| 1.0 / (g.degree(x) as f64).sqrt()).collect()
}

fn apply_s(g: &Graph, isd: &[f64], x: &Mat<f64>) -> Mat<f64> {
    let n = g.n();
    let cols = exec::map_range(x.ncols(), |j| {
        let col = x.col(j);
        (0..n)
            .map(|v| isd[v] * g.neighbors(v).iter().map(|&y| isd[y] * col[y]).sum::<f64>())
            .collect::<Vec<f64>>()
    });
    Mat::from_fn(n, x.ncols(), |i, j| cols[j][i])
}

fn orthonormalize(x: &Mat<f64>) -> Mat<f64> {
    x.qr().compute_thin_Q()
}

/// Rayleigh-Ritz on an orthonormal block; returns Ritz values (nonincreasing)
/// and the rotated block.
fn rayleigh_ritz(g: &Graph, isd: &[f64], x: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let sx = apply_s(g, isd, x);
    let h = x.transpose() * &sx;
    let p = h.nrows();
    let hs = Mat::from_fn(p, p, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
    let evd = hs
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Invariant(format!("Ritz eigensolve failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let u = evd.U();
    let v = Mat::from_fn(p, p, |i, j| u[(i, order[j])]);
    Ok((order.iter().map(|&i| s[i]).collect(), x * &v))
}

fn chebyshev_filter(g: &Graph, isd: &[f64], x: &Mat<f64>, lower: f64, upper: f64) -> Mat<f64> {
    let e = (upper - lower) / 2.0;
    let c = (upper + lower) / 2.0;
    let mut prev = x.clone();
    let sx = apply_s(g, isd, x);
    let mut cur = Mat::from_fn(x.nrows(), x.ncols(), |i, j| (sx[(i, j)] - c * x[(i, j)]) / e);
    for _ in 2..=FILTER_DEGREE {
        let sc = apply_s(g, isd, &cur);
        let next = Mat::from_fn(x.nrows(), x.ncols(), |i, j| {
            2.0 * (sc[(i, j)] - c * cur[(i, j)]) / e - prev[(i, j)]
        });
        prev = cur;
        cur = next;
    }
    cur
}

fn residuals(g: &Graph, isd: &[f64], x: &Mat<f64>, theta: &[f64], k: usize) -> Vec<f64> {
    let sx = apply_s(g, isd, x);
    (0..k)
        .map(|j| {
            (0..x.nrows())
                .map(|i| (sx[(i, j)] - theta[j] * x[(i, j)]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// The `k` largest eigenpairs of `S`, with residuals `||S u - mu u|| <= tol`.
pub(crate) fn top_eigenpairs(g: &Graph, k: usize, tol: f64, max_iter: usize, seed: u64) -> Result<TopEigen> {
    let n = g.n();
    let p = (k + (k / 4).max(16)).min(n);
    let isd = scale(g);
    let mut rng = rng::stream(seed, "partial_spectrum", 0);
    let init = Mat::from_fn(n, p, |_, _| rng.random::<f64>() - 0.5);
    let (mut theta, mut x) = rayleigh_ritz(g, &isd, &orthonormalize(&init))?;
    let mut worst = f64::INFINITY;
    for it in 0..=max_iter {
        let res = residuals(g, &isd, &x, &theta, k);
        worst = res.iter().copied().fold(0.0, f64::max);
        if worst <= tol {
            let vectors = Mat::from_fn(n, k, |i, j| x[(i, j)]);
            return Ok(TopEigen { values: theta[..k].to_vec(), vectors, max_residual: worst });
        }
        if it == max_iter {
            break;
        }
        let cut = theta[p - 1].max(-1.0 + 1e-6);
        let filtered = chebyshev_filter(g, &isd, &x, -1.0, cut);
        (theta, x) = rayleigh_ritz(g, &isd, &orthonormalize(&filtered))?;
    }
    Err(Error::NonConvergence { residual: worst, iterations: max_iter })
}
