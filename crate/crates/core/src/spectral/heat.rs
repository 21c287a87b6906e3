//! Exact heat kernels by sparse mat-vec or from an eigendecomposition.

use crate::error::{check_vertex, Result};
use crate::exec;
use crate::graph::Graph;

use super::SpectralData;

/// One step of mass transport: `out(y) = Σ_{z ~ y} mu(z) / deg(z)`.
pub fn push_mass(g: &Graph, mu: &[f64], out: &mut [f64]) {
    for y in 0..g.n() {
        out[y] = g.neighbors(y).iter().map(|&z| mu[z] / g.degree(z) as f64).sum();
    }
}

/// One application of the transition operator to a function: `(Pf)(x) = mean of f over neighbours`.
pub fn average(g: &Graph, f: &[f64], out: &mut [f64]) {
    for x in 0..g.n() {
        let s: f64 = g.neighbors(x).iter().map(|&y| f[y]).sum();
        out[x] = s / g.degree(x) as f64;
    }
}

/// `P^t f`.
pub fn apply_power(g: &Graph, f: &[f64], t: usize) -> Vec<f64> {
    let mut cur = f.to_vec();
    let mut next = vec![0.0; g.n()];
    for _ in 0..t {
        average(g, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Law of the walk after `t` steps from `x`, i.e. the row `p_t(x, ·)`.
pub fn distribution(g: &Graph, x: usize, t: usize) -> Vec<f64> {
    let mut cur = vec![0.0; g.n()];
    cur[x] = 1.0;
    let mut next = vec![0.0; g.n()];
    for _ in 0..t {
        push_mass(g, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Return probabilities `p_{t}(x, x)` for every `t` in `times` (any order), from one source.
pub fn return_curve(g: &Graph, x: usize, times: &[usize]) -> Vec<f64> {
    let max_t = times.iter().copied().max().unwrap_or(0);
    let mut at = vec![0.0; max_t + 1];
    let mut cur = vec![0.0; g.n()];
    cur[x] = 1.0;
    at[0] = 1.0;
    let mut next = vec![0.0; g.n()];
    for t in 1..=max_t {
        push_mass(g, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        at[t] = cur[x];
    }
    times.iter().map(|&t| at[t]).collect()
}

/// Access to `p_t(x, y)`, backed by a full eigendecomposition when one is
/// supplied and by repeated sparse mat-vec otherwise.
pub struct HeatKernel<'a> {
    g: &'a Graph,
    spectral: Option<&'a SpectralData>,
}

impl<'a> HeatKernel<'a> {
    pub fn new(g: &'a Graph, spectral: Option<&'a SpectralData>) -> Self {
        let spectral = spectral.filter(|s| s.is_full() && s.has_vectors());
        HeatKernel { g, spectral }
    }

    pub fn uses_spectrum(&self) -> bool {
        self.spectral.is_some()
    }

    pub fn row(&self, x: usize, t: usize) -> Result<Vec<f64>> {
        check_vertex(x, self.g.n())?;
        Ok(match self.spectral {
            Some(s) => s.kernel_row(x, t),
            None => distribution(self.g, x, t),
        })
    }

    pub fn diag(&self, x: usize, t: usize) -> Result<f64> {
        check_vertex(x, self.g.n())?;
        Ok(match self.spectral {
            Some(s) => s.kernel_diag(x, t),
            None => distribution(self.g, x, t)[x],
        })
    }

    /// `p_t(x, x)` for every vertex.
    pub fn diagonal(&self, t: usize) -> Vec<f64> {
        match self.spectral {
            Some(s) => exec::map_range(self.g.n(), |x| s.kernel_diag(x, t)),
            None => exec::map_range(self.g.n(), |x| distribution(self.g, x, t)[x]),
        }
    }
}

/// `p_t(x, x)`, exact.
pub fn return_probability(g: &Graph, x: usize, t: usize) -> Result<f64> {
    check_vertex(x, g.n())?;
    Ok(distribution(g, x, t)[x])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GeneratorSpec};

    #[test]
    fn small_return_probabilities() {
        let k2 = generate(&GeneratorSpec::Complete { n: 2 }).unwrap();
        assert_eq!(return_probability(&k2, 0, 2).unwrap(), 1.0);
        let k3 = generate(&GeneratorSpec::Complete { n: 3 }).unwrap();
        assert!((return_probability(&k3, 1, 2).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rows_are_stochastic() {
        let g = generate(&GeneratorSpec::StackedTriangulation { insertions: 30, seed: 2 }).unwrap();
        for x in [0, 5, 20] {
            let r = distribution(&g, x, 7);
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
