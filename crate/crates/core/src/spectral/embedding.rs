//! The heat-kernel embedding `x ↦ P^T 1_x / sqrt(deg x)` into the
//! degree-weighted `ℓ²(G)`, its cone sets, and the conformal weight it induces.

use serde::{Deserialize, Serialize};

use crate::error::{check_vertex, param, Result};
use crate::exec;
use crate::graph::{ConformalWeight, Graph};

use super::heat::{apply_power, distribution};
use super::DENSE_LIMIT;

/// Explicit embedding vectors, one per vertex.
#[derive(Clone, Debug)]
pub struct HeatEmbedding {
    t: usize,
    degrees: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadingReport {
    pub x: usize,
    pub t: usize,
    pub cone_size: usize,
    pub p2t: f64,
    /// `4 / p_{2T}(x, x)`.
    pub bound: f64,
    pub p4t: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropicCheck {
    pub rho: usize,
    pub t: usize,
    /// `Σ_x ⟨P^T 1_x, P^T 1_ρ⟩² / deg(x)` from the embedding vectors.
    pub lhs: f64,
    /// `‖P^{2T} 1_ρ‖²` by mat-vec.
    pub rhs: f64,
}

/// Build the embedding at time `t` (dense; `n <= DENSE_LIMIT`).
pub fn heat_embedding(g: &Graph, t: usize) -> Result<HeatEmbedding> {
    param(t >= 1, || "T must be at least 1".into())?;
    param(g.n() <= DENSE_LIMIT, || format!("explicit embedding limited to {DENSE_LIMIT} vertices"))?;
    let n = g.n();
    let degrees: Vec<f64> = (0..n).map(|x| g.degree(x) as f64).collect();
    let vectors = exec::map_range(n, |x| {
        let mut e = vec![0.0; n];
        e[x] = 1.0;
        let s = degrees[x].sqrt();
        apply_power(g, &e, t).into_iter().map(|v| v / s).collect()
    });
    Ok(HeatEmbedding { t, degrees, vectors })
}

impl HeatEmbedding {
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn vector(&self, x: usize) -> &[f64] {
        &self.vectors[x]
    }

    /// Degree-weighted inner product of two embedding vectors.
    pub fn inner(&self, x: usize, y: usize) -> f64 {
        let (a, b) = (&self.vectors[x], &self.vectors[y]);
        self.degrees.iter().zip(a).zip(b).map(|((d, u), v)| d * u * v).sum()
    }

    /// Equals `p_{2T}(x, x)`.
    pub fn norm_sq(&self, x: usize) -> f64 {
        self.inner(x, x)
    }

    /// `{y : ‖Φ(x) - Φ(y)‖ <= ‖Φ(y)‖}`, i.e. `‖Φ(x)‖² <= 2⟨Φ(x), Φ(y)⟩`.
    pub fn cone(&self, x: usize) -> Result<Vec<usize>> {
        check_vertex(x, self.vectors.len())?;
        let nx = self.norm_sq(x);
        Ok((0..self.vectors.len()).filter(|&y| y == x || nx <= 2.0 * self.inner(x, y)).collect())
    }

    /// Cone size against `4 / p_{2T}(x, x)`, plus monotonicity `p_{2T} >= p_{4T}`,
    /// with return probabilities taken from mat-vec.
    pub fn spreading(&self, g: &Graph, x: usize) -> Result<SpreadingReport> {
        let cone_size = self.cone(x)?.len();
        let curve = super::return_curve(g, x, &[2 * self.t, 4 * self.t]);
        let (p2t, p4t) = (curve[0], curve[1]);
        let bound = 4.0 / p2t;
        Ok(SpreadingReport { x, t: self.t, cone_size, p2t, bound, p4t, holds: cone_size as f64 <= bound && p2t >= p4t })
    }

    pub fn isotropic(&self, g: &Graph, rho: usize) -> Result<IsotropicCheck> {
        check_vertex(rho, self.vectors.len())?;
        let d_rho = self.degrees[rho];
        let lhs = (0..self.vectors.len())
            .map(|x| {
                let ip = (self.degrees[x] * d_rho).sqrt() * self.inner(x, rho);
                ip * ip / self.degrees[x]
            })
            .sum();
        let mut e = vec![0.0; g.n()];
        e[rho] = 1.0;
        let f = apply_power(g, &e, 2 * self.t);
        let rhs = self.degrees.iter().zip(&f).map(|(d, v)| d * v * v).sum();
        Ok(IsotropicCheck { rho, t: self.t, lhs, rhs })
    }
}

#[derive(Clone, Debug)]
pub struct HeatKernelWeight {
    pub weight: ConformalWeight,
    /// `Σ_x ω(x)²`.
    pub vertex_sum: f64,
    /// `2 Σ_{edges} ‖Φ(x) - Φ(y)‖²`.
    pub edge_sum: f64,
}

/// `ω(x) = sqrt(Σ_{y ~ x} ‖Φ_T(x) - Φ_T(y)‖²)`.
///
/// Gram entries `⟨Φ_T(x), Φ_T(y)⟩ = sqrt(d_x / d_y) p_{2T}(x, y)` are read from
/// mat-vec rows, so this works beyond the dense limit.
pub fn heat_kernel_weight(g: &Graph, t: usize) -> Result<HeatKernelWeight> {
    param(t >= 1, || "T must be at least 1".into())?;
    let n = g.n();
    let rows = exec::map_range(n, |x| {
        let row = distribution(g, x, 2 * t);
        let dx = g.degree(x) as f64;
        let nb: Vec<f64> = g.neighbors(x).iter().map(|&y| (dx / g.degree(y) as f64).sqrt() * row[y]).collect();
        (row[x], nb)
    });
    let diag: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut sq = vec![0.0; n];
    let mut edge_sum = 0.0;
    for x in 0..n {
        for (i, &y) in g.neighbors(x).iter().enumerate() {
            if x < y {
                let d2 = (diag[x] + diag[y] - 2.0 * rows[x].1[i]).max(0.0);
                sq[x] += d2;
                sq[y] += d2;
                edge_sum += 2.0 * d2;
            }
        }
    }
    let vertex_sum = sq.iter().sum();
    let weight = ConformalWeight::new(sq.iter().map(|v| v.sqrt()).collect())?;
    Ok(HeatKernelWeight { weight, vertex_sum, edge_sum })
}
