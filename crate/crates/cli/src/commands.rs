use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use conformal_core::bumps::{bump_family_delocalized, bump_family_easy, BumpFamily};
use conformal_core::confopt::{cbt_audit, cbt_certificate, growth_objective, optimize_weight};
use conformal_core::graph::{ball_sizes, ConformalWeight, DegreeProfile, Graph};
use conformal_core::partitions::{padding_profile, Ckr, ExpClustering, PadBoost, PartitionSampler};
use conformal_core::resistance::{annulus_test_function, effective_resistance};
use conformal_core::separators::{barrier, min_vertex_cut_annulus, subdiffusivity_experiment, SeparatorTable, SubdiffParams};
use conformal_core::spectral::{bump_return_certificate, return_curve, spectrum, spectrum_partial, DENSE_LIMIT};
use conformal_core::walks::{speed_profile, Metric, Start};
use conformal_core::{exec, generate, io, GeneratorSpec};
use serde_json::json;

use crate::error::{usage, CliError, CliResult};
use crate::output::{emit, envelope, Format, Table};
use crate::{Command, Common, GenArgs, Kind, MetricKind, Sampler};

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn load_graph(common: &Common, preset: Option<&Graph>) -> CliResult<Graph> {
    if let Some(g) = preset {
        return Ok(g.clone());
    }
    let path = common.graph.as_ref().ok_or_else(|| usage("missing --graph"))?;
    Ok(io::read_graph(open(path)?)?)
}

fn load_weight(common: &Common, g: &Graph) -> CliResult<ConformalWeight> {
    match &common.weight {
        Some(path) => Ok(io::read_weight(open(path)?, g.n())?),
        None => Ok(ConformalWeight::uniform(g.n(), 1.0)),
    }
}

/// Tables default to CSV and may be asked for as JSON.
fn emit_table(common: &Common, command: &str, params: serde_json::Value, table: &Table) -> CliResult<()> {
    let text = match common.format.unwrap_or(Format::Csv) {
        Format::Csv => table.to_csv(),
        Format::Json => envelope(command, common.seed, params, table.to_json())?,
    };
    emit(common.out.as_deref(), &text)
}

/// Reports are JSON only.
fn emit_report(common: &Common, command: &str, params: serde_json::Value, result: impl serde::Serialize) -> CliResult<()> {
    if common.format == Some(Format::Csv) {
        return Err(usage(format!("`{command}` writes a JSON report; CSV is not available")));
    }
    emit(common.out.as_deref(), &envelope(command, common.seed, params, result)?)
}

fn need<T>(v: Option<T>, flag: &str, kind: Kind) -> CliResult<T> {
    v.ok_or_else(|| usage(format!("--{flag} is required for --kind {kind:?}")))
}

fn generator_spec(a: &GenArgs) -> CliResult<GeneratorSpec> {
    use GeneratorSpec as G;
    let k = a.kind;
    let seed = a.common.seed;
    Ok(match k {
        Kind::Grid => G::Grid { rows: need(a.rows, "rows", k)?, cols: need(a.cols.or(a.rows), "cols", k)?, torus: a.torus },
        Kind::TriGrid => G::TriGrid { k: need(a.k, "k", k)?, torus: a.torus },
        Kind::Cycle => G::Cycle { n: need(a.n, "n", k)? },
        Kind::Path => G::Path { n: need(a.n, "n", k)? },
        Kind::BinaryTree => G::BinaryTree { h: need(a.h, "h", k)? },
        Kind::CanopyTree => G::CanopyTree { h: need(a.h, "h", k)? },
        Kind::Prism => G::Prism { length: need(a.length, "length", k)? },
        Kind::StackedTriangulation => G::StackedTriangulation { insertions: need(a.insertions, "insertions", k)?, seed },
        Kind::DecoratedTree => G::DecoratedTree {
            depth: need(a.depth, "depth", k)?,
            alpha: need(a.alpha, "alpha", k)?,
            l_max: need(a.l_max, "l-max", k)?,
            seed,
        },
        Kind::TransientTree => {
            if a.d.is_empty() {
                return Err(usage("--d is required for --kind transient-tree"));
            }
            G::TransientTree { h: need(a.h, "h", k)?, d: a.d.clone() }
        }
        Kind::Star => G::Star { leaves: need(a.leaves, "leaves", k)? },
        Kind::Complete => G::Complete { n: need(a.n, "n", k)? },
    })
}

fn sampler_tau(r: f64, tau: Option<f64>) -> f64 {
    tau.unwrap_or(r / 2.0)
}

fn max_ball(g: &Graph, w: &ConformalWeight, r: f64) -> usize {
    ball_sizes(g, w, r).into_iter().max().unwrap_or(0)
}

fn bump_rows(g: &Graph, family: &BumpFamily) -> Table {
    let prof = DegreeProfile::new(g);
    let mut t = Table::new(&["bump", "support_size", "core_mass", "rayleigh"]);
    for (i, b) in family.bumps().iter().enumerate() {
        t.push(vec![i.into(), b.support.len().into(), prof.pi_of(&b.core).into(), b.rayleigh.into()]);
    }
    t
}

fn parse_start(s: &str) -> CliResult<Start> {
    match s {
        "stationary" => Ok(Start::Stationary),
        "uniform" => Ok(Start::Uniform),
        v => v
            .parse()
            .map(Start::Vertex)
            .map_err(|_| usage(format!("--start must be `stationary`, `uniform` or a vertex, got {v:?}"))),
    }
}

fn common_of(cmd: &Command) -> Option<&Common> {
    Some(match cmd {
        Command::Gen(a) => &a.common,
        Command::Partition(a) => &a.common,
        Command::Bumps(a) => &a.common,
        Command::Spectrum(a) => &a.common,
        Command::Heat(a) => &a.common,
        Command::Certify(a) => &a.common,
        Command::Resist(a) => &a.common,
        Command::Separate(a) => &a.common,
        Command::Barrier(a) => &a.common,
        Command::Subdiff(a) => &a.common,
        Command::Walk(a) => &a.common,
        Command::Optimize(a) => &a.common,
        Command::Cbt(a) => &a.common,
        Command::Run(_) => return None,
    })
}

/// Run one subcommand. `preset` replaces `--graph` (used by config runs).
pub fn execute(cmd: Command, preset: Option<&Graph>) -> CliResult<()> {
    if let Some(threads) = common_of(&cmd).and_then(|c| c.threads) {
        exec::init_threads(threads);
    }
    let started = Instant::now();
    let name = match &cmd {
        Command::Gen(_) => "gen",
        Command::Partition(_) => "partition",
        Command::Bumps(_) => "bumps",
        Command::Spectrum(_) => "spectrum",
        Command::Heat(_) => "heat",
        Command::Certify(_) => "certify",
        Command::Resist(_) => "resist",
        Command::Separate(_) => "separate",
        Command::Barrier(_) => "barrier",
        Command::Subdiff(_) => "subdiff",
        Command::Walk(_) => "walk",
        Command::Optimize(_) => "optimize",
        Command::Cbt(_) => "cbt",
        Command::Run(_) => "run",
    };
    let outcome = dispatch(cmd, preset);
    // Timings stay out of the reports so that reruns are byte-identical.
    eprintln!("{name}: {:.3}s", started.elapsed().as_secs_f64());
    outcome
}

fn dispatch(cmd: Command, preset: Option<&Graph>) -> CliResult<()> {
    match cmd {
        Command::Gen(a) => {
            let g = generate(&generator_spec(&a)?)?;
            emit(a.common.out.as_deref(), &io::graph_to_string(&g))
        }
        Command::Partition(a) => {
            let c = &a.common;
            let g = load_graph(c, preset)?;
            let w = load_weight(c, &g)?;
            let profile = match a.sampler {
                Sampler::Ckr => padding_profile(&g, &w, &Ckr::new(&g, &w, a.tau, c.seed)?, a.alpha, &a.deltas, a.trials)?,
                Sampler::Exp => {
                    padding_profile(&g, &w, &ExpClustering::new(&g, &w, a.tau / 2.0, c.seed)?, a.alpha, &a.deltas, a.trials)?
                }
                Sampler::BoostCkr => {
                    let base = Ckr::new(&g, &w, a.tau, c.seed)?;
                    padding_profile(&g, &w, &PadBoost::new(&g, &w, &base, a.alpha, c.seed)?, a.alpha, &a.deltas, a.trials)?
                }
                Sampler::BoostExp => {
                    let base = ExpClustering::new(&g, &w, a.tau / 2.0, c.seed)?;
                    padding_profile(&g, &w, &PadBoost::new(&g, &w, &base, a.alpha, c.seed)?, a.alpha, &a.deltas, a.trials)?
                }
            };
            let mut t = Table::new(&["delta", "empirical_pad", "stderr"]);
            for i in 0..profile.delta_grid.len() {
                t.push(vec![profile.delta_grid[i].into(), profile.empirical_pad[i].into(), profile.stderr[i].into()]);
            }
            let params = json!({"tau": a.tau, "alpha": a.alpha, "trials": a.trials, "sampler": format!("{:?}", a.sampler).to_lowercase()});
            emit_table(c, "partition", params, &t)
        }
        Command::Bumps(a) => {
            let c = &a.common;
            let g = load_graph(c, preset)?;
            let w = load_weight(c, &g)?;
            let k = a.k.unwrap_or_else(|| max_ball(&g, &w, a.r));
            let sampler = Ckr::new(&g, &w, sampler_tau(a.r, a.tau), c.seed)?;
            let (family, report) = match a.delta {
                Some(delta) => {
                    let (f, r) = bump_family_delocalized(&g, &w, a.r, k, a.alpha, delta, &sampler, c.seed)?;
                    (f, serde_json::to_value(r).expect("report serializes"))
                }
                None => {
                    let (f, r) = bump_family_easy(&g, &w, a.r, k, a.alpha, &sampler, c.seed)?;
                    (f, serde_json::to_value(r).expect("report serializes"))
                }
            };
            family.verify(&g)?;
            let table = bump_rows(&g, &family);
            match c.format.unwrap_or(Format::Csv) {
                Format::Csv => emit(c.out.as_deref(), &table.to_csv()),
                Format::Json => {
                    let params = json!({"R": a.r, "K": k, "alpha": a.alpha, "delta": a.delta});
                    emit_report(c, "bumps", params, json!({"bumps": table.to_json(), "report": report}))
                }
            }
        }
        Command::Spectrum(a) => {
            let c = &a.common;
            let g = load_graph(c, preset)?;
            let data = match a.count {
                Some(k) if k < g.n() => spectrum_partial(&g, k, false)?,
                _ if g.n() > DENSE_LIMIT => return Err(usage(format!("n = {} > {DENSE_LIMIT}: pass --count", g.n()))),
                _ => spectrum(&g, false)?,
            };
            data.check_invariants()?;
            let mut t = Table::new(&["k", "lambda"]);
            for (k, &l) in data.eigenvalues().iter().enumerate() {
                t.push(vec![k.into(), l.into()]);
            }
            emit_table(c, "spectrum", json!({"count": a.count}), &t)
        }
        Command::Heat(a) => {
            let c = &a.common;
            let g = load_graph(c, preset)?;
            if a.x >= g.n() {
                return Err(conformal_core::Error::VertexOutOfRange { vertex: a.x, n: g.n() }.into());
            }
            let times: Vec<usize> = if !a.times.is_empty() {
                a.times.clone()
            } else {
                (1..=a.t.ok_or_else(|| usage("pass --T or --times"))?).collect()
            };
            let doubled: Vec<usize> = times.iter().map(|t| 2 * t).collect();
            let p = return_curve(&g, a.x, &doubled);
            let mut t = Table::new(&["T", "p_2T"]);
            for (tt, pp) in times.iter().zip(p) {
                t.push(vec![(*tt).into(), pp.into()]);
            }
            emit_table(c, "heat", json!({"x": a.x}), &t)
        }
        Command::Certify(a) => {
            let c = &a.common;
            let g = load_graph(c, preset)?;
            let w = load_weight(c, &g)?;
            let k = a.k.unwrap_or_else(|| max_ball(&g, &w, a.r));
            let sampler = Ckr::new(&g, &w, sampler_tau(a.r, a.tau), c.seed)?;
            let (family, bumps) = bump_family_delocalized(&g, &w, a.r, k, a.alpha, a.delta, &sampler, c.seed)?;
            let cert = bump_return_certificate(&g, &family, a.t, a.epsilon, a.beta, None)?;
            let sound = cert.is_sound();
            let params = json!({"R": a.r, "delta": a.delta, "T": a.t, "alpha": a.alpha, "K": k, "epsilon": a.epsilon, "beta": a.beta, "tau": sampler.tau()});
            emit_report(c, "certify", params, json!({"bumps": bumps, "certificate": cert, "sound": sound}))?;
            if sound {
                Ok(())
            } else {
                Err(CliError::Violation("return-probability certificate disagrees with the exact kernel".into()))
            }
        }
        Command::Resist(a) => {
            let c = &a.common;
            let g = load_graph(c, preset)?;
            match (a.x, a.r) {
                (Some(x), Some(r)) => {
                    let w = load_weight(c, &g)?;
                    let rep = annulus_test_function(&g, &w, a.c, x, r)?;
                    let result = json!({
                        "R": r,
                        "bound": rep.lower_bound,
                        "exact": rep.exact,
                        "ratio": rep.exact / rep.lower_bound,
                        "exact_conformal": rep.exact_conformal,
                        "energy": rep.energy,
                        "energy_bound": rep.energy_bound,
                        "area": rep.area,
                        "inner_graph_radius": rep.inner_graph_radius,
                        "lipschitz_holds": rep.lipschitz_holds,
                        "holds": rep.holds,
                    });
                    emit_report(c, "resist", json!({"x": x, "R": r, "C": a.c}), result)?;
                    if rep.holds {
                        Ok(())
                    } else {
                        Err(CliError::Violation("test-function bound exceeds the exact resistance".into()))
                    }
                }
                (None, None) => {
                    if a.sources.is_empty() || a.targets.is_empty() {
                        return Err(usage("pass --sources and --targets, or --x and --R"));
                    }
                    let q = effective_resistance(&g, &a.sources, &a.targets)?;
                    let result = json!({"R": q.value, "energy": q.energy, "solver": q.solver});
                    emit_report(c, "resist", json!({"sources": a.sources, "targets": a.targets}), result)
                }
                _ => Err(usage("--x and --R go together")),
            }
        }
        Command::Separate(a) => {
            let c = &a.common;
            let g = load_graph(c, preset)?;
            let mut t = Table::new(&["r", "r_outer", "kappa", "q"]);
            for &r in &a.r {
                let s = min_vertex_cut_annulus(&g, a.x, r, a.factor * r)?;
                t.push(vec![r.into(), s.r_outer.into(), s.kappa.into(), s.q.into()]);
            }
            emit_table(c, "separate", json!({"x": a.x, "factor": a.factor}), &t)
        }
        Command::Barrier(a) => {
            let c = &a.common;
            let g = load_graph(c, preset)?;
            let r_outer = a.r_outer.unwrap_or(3 * a.r);
            let table = SeparatorTable::min_cuts(&g, a.r, r_outer)?;
            let b = barrier(&g, &table, c.seed)?;
            let result = json!({
                "r": b.r,
                "r_outer": b.r_outer,
                "size": b.members.len(),
                "fraction": b.fraction(g.n()),
                "mean_q": table.mean_q(),
                "max_component_diameter": b.component_diameters.iter().max(),
                "diameters_hold": b.diameters_hold(),
                "members": b.members,
            });
            emit_report(c, "barrier", json!({"r": a.r, "r_outer": r_outer}), result)
        }
        Command::Subdiff(a) => {
            let c = &a.common;
            let g = load_graph(c, preset)?;
            let params = SubdiffParams {
                scales: a.scales.clone(),
                ratio: a.ratio,
                t_grid: a.times.clone(),
                trials: a.trials,
                collar: a.collar,
                fit_roots: a.fit_roots,
            };
            let rep = subdiffusivity_experiment(&g, &params, c.seed)?;
            emit_report(c, "subdiff", serde_json::to_value(&params).expect("params serialize"), rep)
        }
        Command::Walk(a) => {
            let c = &a.common;
            let g = load_graph(c, preset)?;
            let start = parse_start(&a.start)?;
            let w;
            let metric = match a.metric {
                MetricKind::Graph => Metric::Graph,
                MetricKind::Conformal => {
                    w = load_weight(c, &g)?;
                    Metric::Conformal(&w)
                }
            };
            let prof = speed_profile(&g, metric, start, &a.times, a.trials, None, c.seed)?;
            let mut t = Table::new(&["T", "mean", "stderr", "trials"]);
            for r in &prof.rows {
                t.push(vec![r.t.into(), r.mean.into(), r.stderr.into(), r.trials.into()]);
            }
            emit_table(c, "walk", json!({"start": a.start, "metric": format!("{:?}", a.metric).to_lowercase()}), &t)
        }
        Command::Optimize(a) => {
            let c = &a.common;
            let g = load_graph(c, preset)?;
            let baseline = growth_objective(&g, &ConformalWeight::uniform(g.n(), 1.0), a.r);
            let (w, obj) = optimize_weight(&g, a.r, a.iterations, c.seed)?;
            if let Some(path) = &a.save_weight {
                emit(Some(path), &io::weight_to_string(&w))?;
            }
            emit_report(c, "optimize", json!({"R": a.r, "iterations": a.iterations}), json!({"objective": obj, "baseline": baseline}))
        }
        Command::Cbt(a) => {
            let c = &a.common;
            let cert = cbt_certificate(a.n)?;
            let alpha = cert.alpha_vector();
            let audit = match (&c.weight, a.q) {
                (Some(path), Some(q)) => {
                    let size = alpha.len();
                    let w = io::read_weight(open(path)?, size)?;
                    Some(cbt_audit(a.n, &w, q)?)
                }
                (None, None) => None,
                _ => return Err(usage("--weight and --Q go together")),
            };
            let sound = audit.as_ref().is_none_or(|a| a.sound);
            let result = json!({"certificate": cert, "alpha_vector": alpha, "audit": audit});
            emit_report(c, "cbt", json!({"n": a.n, "Q": a.q}), result)?;
            if sound {
                Ok(())
            } else {
                Err(CliError::Violation("a weight passed the growth grid but is shorter than the certified norm".into()))
            }
        }
        Command::Run(a) => crate::config::run_file(&a.config),
    }
}
