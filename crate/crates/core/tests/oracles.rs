#![allow(clippy::needless_range_loop)]

mod common;

use common::{brute_force_kappa, folded_walk_law, mean_cycle_distance, random_connected};
use conformal_core::bumps::rayleigh_quotient;
use conformal_core::graph::mass_transport_check;
use conformal_core::resistance::effective_resistance;
use conformal_core::separators::{bp_covering_separator, min_vertex_cut_annulus};
use conformal_core::spectral::{annealed_check, distribution, spectrum, HeatKernel};
use conformal_core::walks::{
    cycle_displacement_law, markov_type_ratio, restricted_simulate, simulate, speed_profile, MarkovMode, Metric, Start,
};
use conformal_core::{generate, GeneratorSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn small_spectra() {
    let cases: [(GeneratorSpec, Vec<f64>); 3] = [
        (GeneratorSpec::Complete { n: 2 }, vec![0.0, 2.0]),
        (GeneratorSpec::Complete { n: 3 }, vec![0.0, 1.5, 1.5]),
        (GeneratorSpec::Cycle { n: 4 }, vec![0.0, 1.0, 1.0, 2.0]),
    ];
    for (spec, want) in cases {
        let got = spectrum(&generate(&spec).unwrap(), false).unwrap();
        for (a, b) in got.eigenvalues().iter().zip(&want) {
            assert!(close(*a, *b, 1e-12), "{spec:?}: {a} vs {b}");
        }
    }
    // p_2(x, x): 1 on an edge, 1/2 on the triangle and on C_4.
    for (spec, p2) in [
        (GeneratorSpec::Complete { n: 2 }, 1.0),
        (GeneratorSpec::Complete { n: 3 }, 0.5),
        (GeneratorSpec::Cycle { n: 4 }, 0.5),
    ] {
        let g = generate(&spec).unwrap();
        assert!(close(HeatKernel::new(&g, None).diag(0, 2).unwrap(), p2, 1e-15));
    }
    let c4 = spectrum(&generate(&GeneratorSpec::Cycle { n: 4 }).unwrap(), false).unwrap();
    let a = annealed_check(&c4, 2).unwrap();
    assert!(close(a.trace_over_n, 0.5, 1e-12));
    assert!(close(a.bound, 1.0 / 16.0, 1e-15));
}

#[test]
fn closed_form_spectra() {
    // Cycle: 1 - cos(2πj/n). Torus grid (4-regular): 1 - (cos a + cos b)/2.
    let n = 37;
    let want = sorted((0..n).map(|j| 1.0 - (std::f64::consts::TAU * j as f64 / n as f64).cos()).collect());
    let got = spectrum(&generate(&GeneratorSpec::Cycle { n }).unwrap(), false).unwrap();
    assert!(got.eigenvalues().iter().zip(&want).all(|(a, b)| close(*a, *b, 1e-10)));

    let (r, c) = (6, 9);
    let mut want = Vec::new();
    for i in 0..r {
        for j in 0..c {
            let a = std::f64::consts::TAU * i as f64 / r as f64;
            let b = std::f64::consts::TAU * j as f64 / c as f64;
            want.push(1.0 - (a.cos() + b.cos()) / 2.0);
        }
    }
    let got = spectrum(&generate(&GeneratorSpec::Grid { rows: r, cols: c, torus: true }).unwrap(), false).unwrap();
    assert!(got.eigenvalues().iter().zip(&sorted(want)).all(|(a, b)| close(*a, *b, 1e-10)));

    // Star K_{1,k}: 0, 1 with multiplicity k - 1, 2.
    let got = spectrum(&generate(&GeneratorSpec::Star { leaves: 7 }).unwrap(), false).unwrap();
    let want = [0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0];
    assert!(got.eigenvalues().iter().zip(&want).all(|(a, b)| close(*a, *b, 1e-10)));
}

#[test]
fn heat_rows_match_matrix_powers() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = random_connected(15, 20, &mut rng);
    let n = g.n();
    let p: Vec<Vec<f64>> = (0..n)
        .map(|x| (0..n).map(|y| if g.has_edge(x, y) { 1.0 / g.degree(x) as f64 } else { 0.0 }).collect())
        .collect();
    let mut power: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for t in 0..=9 {
        for x in 0..n {
            let row = distribution(&g, x, t);
            assert!(row.iter().zip(&power[x]).all(|(a, b)| close(*a, *b, 1e-13)));
        }
        power = (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| power[i][k] * p[k][j]).sum()).collect()).collect();
    }
}

#[test]
fn rayleigh_by_hand() {
    let k2 = generate(&GeneratorSpec::Complete { n: 2 }).unwrap();
    assert!(close(rayleigh_quotient(&k2, &[1.0, 0.0]).unwrap(), 2.0, 1e-15));
    let k3 = generate(&GeneratorSpec::Complete { n: 3 }).unwrap();
    assert!(close(rayleigh_quotient(&k3, &[1.0, 0.0, 0.0]).unwrap(), 2.0, 1e-15));
}

#[test]
fn mass_transport_by_double_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let g = random_connected(8, 6, &mut rng);
        let table: Vec<Vec<f64>> = (0..8).map(|_| (0..8).map(|_| rng.random::<f64>()).collect()).collect();
        let f = |x: usize, y: usize| table[x][y];
        let (lhs, rhs) = mass_transport_check(&g, 8, f);
        let direct: f64 = (0..8).flat_map(|x| (0..8).map(move |y| (x, y))).map(|(x, y)| f(x, y)).sum();
        assert!(close(lhs, rhs, 0.0));
        assert!(close(lhs, direct, 1e-12));
    }
}

#[test]
fn series_parallel_resistances() {
    for n in [2usize, 5, 17] {
        let g = generate(&GeneratorSpec::Path { n }).unwrap();
        let r = effective_resistance(&g, &[0], &[n - 1]).unwrap().value;
        assert!(close(r, (n - 1) as f64, 1e-9));
    }
    // Two arcs of lengths k and n - k in parallel.
    let n = 20;
    let g = generate(&GeneratorSpec::Cycle { n }).unwrap();
    for k in 1..n {
        let r = effective_resistance(&g, &[0], &[k]).unwrap().value;
        assert!(close(r, (k * (n - k)) as f64 / n as f64, 1e-9));
    }
    let c4 = generate(&GeneratorSpec::Cycle { n: 4 }).unwrap();
    assert!(close(effective_resistance(&c4, &[0], &[2]).unwrap().value, 1.0, 1e-12));
}

#[test]
fn min_cuts_match_exhaustive_search() {
    let g = generate(&GeneratorSpec::Grid { rows: 21, cols: 21, torus: false }).unwrap();
    let centre = 10 * 21 + 10;
    let s = min_vertex_cut_annulus(&g, centre, 2, 3).unwrap();
    assert_eq!(Some(s.kappa), brute_force_kappa(&g, centre, 2, 3));

    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    while checked < 60 {
        let n = rng.random_range(10..40);
        let g = random_connected(n, rng.random_range(0..n), &mut rng);
        let x = rng.random_range(0..n);
        let r = rng.random_range(1..3);
        let r_outer = r + rng.random_range(1..3);
        let hops = g.bfs(x);
        if hops.iter().filter(|&&d| d > r && d <= r_outer).count() > 18 {
            continue;
        }
        let want = brute_force_kappa(&g, x, r, r_outer);
        match min_vertex_cut_annulus(&g, x, r, r_outer) {
            Ok(s) => assert_eq!(Some(s.kappa), want),
            Err(conformal_core::Error::NoExterior) => assert_eq!(want, None),
            Err(e) => panic!("{e}"),
        }
        checked += 1;
    }
}

#[test]
fn covering_separator_bound_on_grid() {
    let g = generate(&GeneratorSpec::Grid { rows: 60, cols: 60, torus: false }).unwrap();
    let s = bp_covering_separator(&g, 30 * 60 + 30, 4).unwrap();
    assert!(s.within_bound);
    assert!(s.separator.len() <= s.bound);
}

#[test]
fn cycle_laws_agree_with_convolution() {
    for (n, t) in [(7usize, 5usize), (10, 30), (64, 100), (10_000, 100)] {
        let folded = folded_walk_law(n, t);
        let mut by_distance = vec![0.0; n / 2 + 1];
        for (k, p) in folded.iter().enumerate() {
            by_distance[k.min(n - k)] += p;
        }
        let law = cycle_displacement_law(n, t);
        assert!(law.iter().zip(&by_distance).all(|(a, b)| close(*a, *b, 1e-14)));
    }
    let mean = mean_cycle_distance(&folded_walk_law(10_000, 100));
    assert!(close(mean, 7.958923738717877, 1e-10));
}

#[test]
fn cycle_speed_within_three_sigma() {
    let g = generate(&GeneratorSpec::Cycle { n: 10_000 }).unwrap();
    let prof = speed_profile(&g, Metric::Graph, Start::Uniform, &[100], 20_000, None, 9).unwrap();
    let row = &prof.rows[0];
    let exact = mean_cycle_distance(&folded_walk_law(10_000, 100));
    assert!((row.mean - exact).abs() <= 3.0 * row.stderr, "{} vs {exact} (se {})", row.mean, row.stderr);
}

#[test]
fn occupation_and_transition_frequencies() {
    let c8 = generate(&GeneratorSpec::Cycle { n: 8 }).unwrap();
    let steps = 100_000;
    let trace = simulate(&c8, Start::Vertex(0), steps, 2).unwrap();
    let mut counts = [0usize; 8];
    for &v in &trace.steps[1..] {
        counts[v] += 1;
    }
    // Occupation of a stationary chain: allow 3σ with a generous effective-sample
    // factor for the correlation of consecutive positions on an even cycle.
    for c in counts {
        let p = c as f64 / steps as f64;
        let sigma = (0.125 * 0.875 / steps as f64).sqrt() * 4.0;
        assert!((p - 0.125).abs() <= 3.0 * sigma, "occupation {p}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = random_connected(12, 14, &mut rng);
    let trace = simulate(&g, Start::Stationary, 200_000, 5).unwrap();
    let n = g.n();
    let mut visits = vec![0usize; n];
    let mut moves = vec![vec![0usize; n]; n];
    for w in trace.steps.windows(2) {
        visits[w[0]] += 1;
        moves[w[0]][w[1]] += 1;
    }
    for x in 0..n {
        let p = 1.0 / g.degree(x) as f64;
        let sigma = (p * (1.0 - p) / visits[x] as f64).sqrt();
        for &y in g.neighbors(x) {
            let f = moves[x][y] as f64 / visits[x] as f64;
            assert!((f - p).abs() <= 3.0 * sigma + 1e-12, "{x}->{y}: {f} vs {p}");
        }
    }
}

#[test]
fn restricted_walk_is_reversible_for_its_stationary_law() {
    let g = generate(&GeneratorSpec::Grid { rows: 5, cols: 5, torus: false }).unwrap();
    let set: Vec<usize> = vec![0, 1, 2, 5, 6, 7, 12];
    let steps = 400_000;
    let trace = restricted_simulate(&g, &set, Start::Vertex(0), steps, 13).unwrap();
    let deg_sum: usize = set.iter().map(|&v| g.degree(v)).sum();
    let mut visits = [0usize; 25];
    let mut flow = vec![vec![0usize; 25]; 25];
    for w in trace.steps.windows(2) {
        visits[w[0]] += 1;
        flow[w[0]][w[1]] += 1;
    }
    for &x in &set {
        let pi = g.degree(x) as f64 / deg_sum as f64;
        let freq = visits[x] as f64 / steps as f64;
        // Mixing is fast on this small set; allow 3σ inflated for correlation.
        assert!((freq - pi).abs() <= 3.0 * (pi * (1.0 - pi) / steps as f64).sqrt() * 6.0, "π_S({x})");
        for &y in &set {
            if x < y && g.has_edge(x, y) {
                let (a, b) = (flow[x][y] as f64, flow[y][x] as f64);
                // Under reversibility the two directed counts have equal means.
                assert!((a - b).abs() <= 3.0 * (a + b).sqrt() + 1.0, "{x}<->{y}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn cycle_markov_type_is_exactly_diffusive() {
    // Before wrapping around, E d(Z_T, Z_0)² = T for the walk on C_n.
    let n = 64;
    let g = generate(&GeneratorSpec::Cycle { n }).unwrap();
    let dist = |x: usize, y: usize| {
        let k = x.abs_diff(y);
        k.min(n - k) as f64
    };
    for t in [1usize, 2, 5, 17, 31] {
        let m = markov_type_ratio(&g, dist, 2.0, t, MarkovMode::Exact, 0).unwrap();
        assert!(close(m.ratio, 1.0, 1e-12), "T = {t}: {}", m.ratio);
    }
    let m = markov_type_ratio(&g, dist, 2.0, 1000, MarkovMode::Exact, 0).unwrap();
    assert!(m.ratio < 1.0);
}

#[test]
fn binary_tree_height_two_alpha() {
    // Sibling leaf pairs (2 of them, 3 vertices each) weigh 2^{-3/2}; the cross
    // pairs kept by parity, (0, 2) and (1, 3), run through the root and weigh 2^{-3}.
    let c = conformal_core::confopt::cbt_certificate(2).unwrap();
    let a1 = 2f64.powf(-1.5);
    let a2 = 2f64.powf(-3.0);
    let root = 2.0 * a2;
    let middle = a1 + 2.0 * a2;
    let leaf = a1 + a2;
    let want = root * root + 2.0 * middle * middle + 4.0 * leaf * leaf;
    assert!(close(c.alpha_l2_sq, want, 1e-14));
    assert!(c.alpha_l2_sq <= 8.0);
}
