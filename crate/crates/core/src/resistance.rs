//! Effective resistance by the Dirichlet principle, regulated weights, and
//! the ball-comparison and annulus test-function certificates.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{check_vertex, param, Error, Result};
use crate::exec;
use crate::graph::{conformal_distance, ConformalWeight, Dijkstra, Graph};

/// Interior size up to which the Dirichlet system is factorized directly.
pub const DIRECT_LIMIT: usize = 100_000;
const CG_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Boundary,
    Cholesky,
    ConjugateGradient,
}

/// Minimizer of the Dirichlet energy with `f = 0` on the sources and `f = 1` on the targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResistanceQuery {
    pub value: f64,
    pub energy: f64,
    pub potential: Vec<f64>,
    pub solver: Solver,
}

/// `Σ_{edges} (f(u) - f(v))²`.
pub fn dirichlet_energy(g: &Graph, f: &[f64]) -> f64 {
    g.edges().map(|(u, v)| (f[u] - f[v]).powi(2)).sum()
}

pub fn effective_resistance(g: &Graph, sources: &[usize], targets: &[usize]) -> Result<ResistanceQuery> {
    let n = g.n();
    param(!sources.is_empty() && !targets.is_empty(), || "source and target sets must be nonempty".into())?;
    // 0 = interior, 1 = source, 2 = target
    let mut side = vec![0u8; n];
    for &s in sources {
        check_vertex(s, n)?;
        side[s] = 1;
    }
    for &t in targets {
        check_vertex(t, n)?;
        if side[t] == 1 {
            return Err(Error::InvalidParameter(format!("vertex {t} is both a source and a target")));
        }
        side[t] = 2;
    }
    let interior: Vec<usize> = (0..n).filter(|&x| side[x] == 0).collect();
    let mut index = vec![usize::MAX; n];
    for (i, &x) in interior.iter().enumerate() {
        index[x] = i;
    }
    let rhs: Vec<f64> =
        interior.iter().map(|&x| g.neighbors(x).iter().filter(|&&y| side[y] == 2).count() as f64).collect();
    let (inner, solver) = if interior.is_empty() {
        (Vec::new(), Solver::Boundary)
    } else if interior.len() <= DIRECT_LIMIT {
        (solve_direct(g, &interior, &index, &rhs)?, Solver::Cholesky)
    } else {
        (solve_cg(g, &interior, &index, &rhs)?, Solver::ConjugateGradient)
    };
    let mut potential: Vec<f64> = side.iter().map(|&s| if s == 2 { 1.0 } else { 0.0 }).collect();
    for (i, &x) in interior.iter().enumerate() {
        potential[x] = inner[i];
    }
    let energy = dirichlet_energy(g, &potential);
    Ok(ResistanceQuery { value: 1.0 / energy, energy, potential, solver })
}

fn solve_direct(g: &Graph, interior: &[usize], index: &[usize], rhs: &[f64]) -> Result<Vec<f64>> {
    let k = interior.len();
    let mut trips = Vec::new();
    for (i, &x) in interior.iter().enumerate() {
        trips.push(Triplet::new(i, i, g.degree(x) as f64));
        for &y in g.neighbors(x) {
            let j = index[y];
            if j != usize::MAX && j < i {
                trips.push(Triplet::new(i, j, -1.0));
            }
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(k, k, &trips)
        .map_err(|e| Error::Invariant(format!("sparse assembly failed: {e:?}")))?;
    let llt = a.sp_cholesky(Side::Lower).map_err(|e| Error::Invariant(format!("Cholesky failed: {e:?}")))?;
    let b = Mat::from_fn(k, 1, |i, _| rhs[i]);
    let x = llt.solve(&b);
    Ok((0..k).map(|i| x[(i, 0)]).collect())
}

fn solve_cg(g: &Graph, interior: &[usize], index: &[usize], rhs: &[f64]) -> Result<Vec<f64>> {
    let k = interior.len();
    let diag: Vec<f64> = interior.iter().map(|&x| g.degree(x) as f64).collect();
    let apply = |v: &[f64]| -> Vec<f64> {
        exec::map_range(k, |i| {
            let x = interior[i];
            let off: f64 = g.neighbors(x).iter().filter(|&&y| index[y] != usize::MAX).map(|&y| v[index[y]]).sum();
            diag[i] * v[i] - off
        })
    };
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let mut x = vec![0.0; k];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let bnorm = dot(rhs, rhs).sqrt();
    let max_iter = 20 * k + 1000;
    for it in 0..max_iter {
        let res = dot(&r, &r).sqrt();
        if res <= CG_TOL * bnorm {
            return Ok(x);
        }
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..k {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..k {
            p[i] = z[i] + beta * p[i];
        }
        if it + 1 == max_iter {
            return Err(Error::NonConvergence { residual: res / bnorm, iterations: max_iter });
        }
    }
    Ok(x)
}

/// `ω ≥ 1/2` and `ω(u) <= C ω(v)` across every edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegulationCheck {
    pub min_weight: f64,
    pub max_edge_ratio: f64,
    pub c: f64,
    pub holds: bool,
}

pub fn regulation_check(g: &Graph, w: &ConformalWeight, c: f64) -> RegulationCheck {
    let min_weight = w.values().iter().copied().fold(f64::INFINITY, f64::min);
    let max_edge_ratio = g
        .edges()
        .map(|(u, v)| {
            let (a, b) = (w[u], w[v]);
            a.max(b) / a.min(b)
        })
        .fold(1.0, f64::max);
    RegulationCheck { min_weight, max_edge_ratio, c, holds: min_weight >= 0.5 && max_edge_ratio <= c }
}

fn require_regulated(g: &Graph, w: &ConformalWeight, c: f64) -> Result<()> {
    w.check_len(g)?;
    let chk = regulation_check(g, w, c);
    if chk.holds {
        Ok(())
    } else {
        Err(Error::NotRegulated {
            c,
            detail: format!("min weight {}, max edge ratio {}", chk.min_weight, chk.max_edge_ratio),
        })
    }
}

#[derive(Clone, Debug)]
pub struct Regulated {
    pub weight: ConformalWeight,
    /// `ω₀(x)² = Σ_y ω(y)² (2d)^{-dist_G(x, y)}`.
    pub pre_weight_sq: Vec<f64>,
    /// `(1/n) Σ ω₀²`, at most twice `(1/n) Σ ω²`.
    pub mean_pre_sq: f64,
    pub mean_sq: f64,
}

/// `ω̂ = sqrt(1/4 + (3/8) ω₀²)`, which is `sqrt(2d)`-regulated with `ω̂ >= ω/2`.
///
/// The sum defining `ω₀` is cut off once the remaining BFS layers provably
/// contribute less than `1e-15` of the accumulated value.
pub fn regulate(g: &Graph, w: &ConformalWeight, d: usize) -> Result<Regulated> {
    w.check_len(g)?;
    param(w.is_normalized(), || format!("weight must be normalized, has norm {}", w.l2_norm()))?;
    param(d >= g.max_degree(), || format!("d = {d} below the maximum degree {}", g.max_degree()))?;
    let n = g.n();
    let base = 2.0 * d as f64;
    let max_sq = w.values().iter().map(|v| v * v).fold(0.0, f64::max);
    let pre_weight_sq = exec::map_range(n, |x| {
        let mut seen = std::collections::HashSet::from([x]);
        let mut layer = vec![x];
        let mut acc = 0.0;
        let mut decay = 1.0;
        while !layer.is_empty() {
            acc += decay * layer.iter().map(|&y| w[y] * w[y]).sum::<f64>();
            let mut next = Vec::new();
            for &v in &layer {
                for &y in g.neighbors(v) {
                    if seen.insert(y) {
                        next.push(y);
                    }
                }
            }
            decay /= base;
            // Every later layer j has at most |next| d^{j-k} vertices.
            if max_sq * next.len() as f64 * decay * 2.0 < 1e-15 * acc {
                break;
            }
            layer = next;
        }
        acc
    });
    let values = pre_weight_sq.iter().map(|s| (0.25 + 0.375 * s).sqrt()).collect();
    let weight = ConformalWeight::new(values)?;
    let mean_pre_sq = pre_weight_sq.iter().sum::<f64>() / n as f64;
    let mean_sq = w.values().iter().map(|v| v * v).sum::<f64>() / n as f64;
    Ok(Regulated { weight, pre_weight_sq, mean_pre_sq, mean_sq })
}

fn graph_radius(log_arg: f64, c: f64) -> Option<usize> {
    if log_arg < 1.0 {
        return None;
    }
    Some((log_arg.ln() / c.ln() + 1e-12).floor() as usize)
}

/// Inner and outer ball inclusions between graph and conformal balls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallComparison {
    pub x: usize,
    pub r: f64,
    /// `log(r / 2ω(x)) / log C`, possibly negative.
    pub inner_radius: f64,
    pub inner_holds: bool,
    pub outer_holds: bool,
}

pub fn ball_comparison_check(g: &Graph, w: &ConformalWeight, c: f64, x: usize, r: f64) -> Result<BallComparison> {
    check_vertex(x, g.n())?;
    param(c >= 2.0, || format!("C must be at least 2, got {c}"))?;
    param(r >= 0.0, || "radius must be nonnegative".into())?;
    require_regulated(g, w, c)?;
    let mut dj = Dijkstra::new(g, w);
    let ball: Vec<(usize, f64)> = dj.run(&[x], r).to_vec();
    let mut in_ball = std::collections::HashSet::new();
    in_ball.extend(ball.iter().map(|p| p.0));
    let inner_radius = (r / (2.0 * w[x])).ln() / c.ln();
    let inner_holds = match graph_radius(r / (2.0 * w[x]), c) {
        Some(k) => g.graph_ball(x, k).iter().all(|(v, _)| in_ball.contains(v)),
        None => true,
    };
    let outer = (2.0 * r + 1e-12).floor() as usize;
    let gb: std::collections::HashSet<usize> = g.graph_ball(x, outer).into_iter().map(|p| p.0).collect();
    let outer_holds = ball.iter().all(|(v, _)| gb.contains(v));
    Ok(BallComparison { x, r, inner_radius, inner_holds, outer_holds })
}

/// The annulus test function and the resistance bound it certifies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionReport {
    pub x: usize,
    pub r: f64,
    pub c: f64,
    pub f: Vec<f64>,
    pub energy: f64,
    /// `4 d_max (1 + C)² area_ω(x, R) / R²`.
    pub energy_bound: f64,
    pub area: f64,
    /// `R² / (4 (1 + C)² d_max area_ω(x, R))`.
    pub lower_bound: f64,
    /// Graph radius of the inner ball, `⌊log(R/4ω(x)) / log C⌋`.
    pub inner_graph_radius: usize,
    /// Exact resistance between the inner graph ball and the complement of `B_G(x, 2R)`.
    pub exact: f64,
    /// Exact resistance between `B_ω(x, R/2)` and the complement of `B_ω(x, R)`.
    pub exact_conformal: f64,
    pub lipschitz_holds: bool,
    pub holds: bool,
}

pub fn annulus_test_function(g: &Graph, w: &ConformalWeight, c: f64, x: usize, r: f64) -> Result<TestFunctionReport> {
    check_vertex(x, g.n())?;
    param(c >= 2.0 && r > 0.0, || format!("need C >= 2 and R > 0, got C = {c}, R = {r}"))?;
    require_regulated(g, w, c)?;
    let n = g.n();
    let inner_graph_radius = graph_radius(r / (4.0 * w[x]), c)
        .ok_or_else(|| Error::Degenerate(format!("R = {r} below 4ω(x) = {}", 4.0 * w[x])))?;
    let outer = (2.0 * r + 1e-12).floor() as usize;
    let dg = g.bfs(x);
    let far: Vec<usize> = (0..n).filter(|&v| dg[v] > outer).collect();
    if far.is_empty() {
        return Err(Error::Degenerate(format!("B_G(x, {outer}) covers the graph")));
    }
    let inner: Vec<usize> = (0..n).filter(|&v| dg[v] <= inner_graph_radius).collect();

    let dw = conformal_distance(g, w, x)?;
    let half = r / 2.0;
    let f: Vec<f64> = dw.iter().map(|&d| (2.0 / r) * half.min((d - half).max(0.0))).collect();
    let energy = dirichlet_energy(g, &f);
    let area: f64 = (0..n).filter(|&v| dw[v] <= r).map(|v| w[v] * w[v]).sum();
    let dmax = g.max_degree() as f64;
    let energy_bound = 4.0 * dmax * (1.0 + c).powi(2) * area / (r * r);
    let lower_bound = r * r / (4.0 * (1.0 + c).powi(2) * dmax * area);
    let lipschitz_holds = g.edges().all(|(u, v)| (f[u] - f[v]).abs() <= (2.0 / r) * 0.5 * (w[u] + w[v]) * (1.0 + 1e-12));

    let exact = effective_resistance(g, &inner, &far)?.value;
    let src: Vec<usize> = (0..n).filter(|&v| dw[v] <= half).collect();
    let dst: Vec<usize> = (0..n).filter(|&v| dw[v] > r).collect();
    let exact_conformal = effective_resistance(g, &src, &dst)?.value;
    let tol = 1e-8;
    let holds = energy <= energy_bound * (1.0 + 1e-12)
        && 1.0 / energy <= exact_conformal * (1.0 + tol)
        && lower_bound <= exact * (1.0 + tol)
        && lipschitz_holds;
    Ok(TestFunctionReport {
        x,
        r,
        c,
        f,
        energy,
        energy_bound,
        area,
        lower_bound,
        inner_graph_radius,
        exact,
        exact_conformal,
        lipschitz_holds,
        holds,
    })
}

/// Vertices farther than `width` (graph distance) from every vertex of less
/// than maximum degree; on grids this removes a boundary collar.
pub fn interior_vertices(g: &Graph, width: usize) -> Vec<usize> {
    let dmax = g.max_degree();
    let mut dist = vec![usize::MAX; g.n()];
    let mut q = std::collections::VecDeque::new();
    for x in 0..g.n() {
        if g.degree(x) < dmax {
            dist[x] = 0;
            q.push_back(x);
        }
    }
    while let Some(x) = q.pop_front() {
        for &y in g.neighbors(x) {
            if dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                q.push_back(y);
            }
        }
    }
    (0..g.n()).filter(|&x| dist[x] > width).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleCertificate {
    pub r: f64,
    pub roots: Vec<usize>,
    pub bounds: Vec<f64>,
    pub exact: Vec<f64>,
    /// Fraction of roots whose certified bound reaches the threshold.
    pub certified_fraction: f64,
    pub min_bound: f64,
}

/// Per-scale resistance certificates for a family of regulated weights.
pub fn recurrence_profile<F>(
    g: &Graph,
    weight_at: F,
    c: f64,
    scales: &[f64],
    roots: &[usize],
    threshold: f64,
) -> Result<Vec<ScaleCertificate>>
where
    F: Fn(f64) -> Result<ConformalWeight>,
{
    param(!roots.is_empty(), || "need at least one root".into())?;
    scales
        .iter()
        .map(|&r| {
            let w = weight_at(r)?;
            require_regulated(g, &w, c)?;
            let reports = exec::map_slice(roots, |&x| annulus_test_function(g, &w, c, x, r));
            let mut bounds = Vec::with_capacity(roots.len());
            let mut exact = Vec::with_capacity(roots.len());
            for rep in reports {
                let rep = rep?;
                if !rep.holds {
                    return Err(Error::Invariant(format!("test-function certificate failed at root {}, R = {r}", rep.x)));
                }
                bounds.push(rep.lower_bound);
                exact.push(rep.exact);
            }
            let hits = bounds.iter().filter(|&&b| b >= threshold).count();
            Ok(ScaleCertificate {
                r,
                roots: roots.to_vec(),
                certified_fraction: hits as f64 / roots.len() as f64,
                min_bound: bounds.iter().copied().fold(f64::INFINITY, f64::min),
                bounds,
                exact,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GeneratorSpec};

    #[test]
    fn series_and_parallel() {
        let p = generate(&GeneratorSpec::Path { n: 3 }).unwrap();
        assert!((effective_resistance(&p, &[0], &[2]).unwrap().value - 2.0).abs() < 1e-12);
        let k2 = generate(&GeneratorSpec::Complete { n: 2 }).unwrap();
        assert_eq!(effective_resistance(&k2, &[0], &[1]).unwrap().value, 1.0);
        let c4 = generate(&GeneratorSpec::Cycle { n: 4 }).unwrap();
        assert!((effective_resistance(&c4, &[0], &[2]).unwrap().value - 1.0).abs() < 1e-12);
        assert!(effective_resistance(&c4, &[0], &[0]).is_err());
    }

    #[test]
    fn cg_matches_cholesky() {
        let g = generate(&GeneratorSpec::Grid { rows: 12, cols: 12, torus: false }).unwrap();
        let interior: Vec<usize> = (1..143).collect();
        let mut index = vec![usize::MAX; 144];
        for (i, &x) in interior.iter().enumerate() {
            index[x] = i;
        }
        let rhs: Vec<f64> = interior.iter().map(|&x| if g.has_edge(x, 143) { 1.0 } else { 0.0 }).collect();
        let a = solve_direct(&g, &interior, &index, &rhs).unwrap();
        let b = solve_cg(&g, &interior, &index, &rhs).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-8));
    }

    #[test]
    fn regulate_k4() {
        let g = generate(&GeneratorSpec::Complete { n: 4 }).unwrap();
        let r = regulate(&g, &ConformalWeight::uniform(4, 1.0), 3).unwrap();
        for v in r.weight.values() {
            assert!((v - 0.8125f64.sqrt()).abs() < 1e-15);
        }
        assert!(regulation_check(&g, &r.weight, 6f64.sqrt()).holds);
    }

    #[test]
    fn comparison_with_unit_weight() {
        let g = generate(&GeneratorSpec::Grid { rows: 40, cols: 40, torus: false }).unwrap();
        let w = ConformalWeight::uniform(g.n(), 1.0);
        let c = ball_comparison_check(&g, &w, 2.0, 820, 8.0).unwrap();
        assert!((c.inner_radius - 2.0).abs() < 1e-12);
        assert!(c.inner_holds && c.outer_holds);
        let small = ball_comparison_check(&g, &w, 2.0, 820, 1.0).unwrap();
        assert!(small.inner_radius < 0.0 && small.inner_holds);
    }

    #[test]
    fn cycle_test_function() {
        let g = generate(&GeneratorSpec::Cycle { n: 100 }).unwrap();
        let w = ConformalWeight::uniform(100, 1.0);
        let rep = annulus_test_function(&g, &w, 2.0, 0, 10.0).unwrap();
        assert_eq!(rep.area, 21.0);
        assert!((rep.lower_bound - 100.0 / (4.0 * 9.0 * 2.0 * 21.0)).abs() < 1e-15);
        assert!(rep.holds);
        assert!(matches!(annulus_test_function(&g, &w, 2.0, 0, 60.0), Err(Error::Degenerate(_))));
    }
}
