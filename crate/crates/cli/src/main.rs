//! `conformal-lab`: seeded, reproducible experiments on finite graphs.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Format;

#[derive(Parser, Debug)]
#[command(name = "conformal-lab", version, about = "Conformal metrics, partitions and spectral certificates on finite graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// Graph file (`n m` header, then `u v` lines).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Weight file (one real per line); defaults to ω ≡ 1.
    #[arg(long)]
    pub weight: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a generated graph in the edge-list format.
    Gen(GenArgs),
    /// Empirical padding probabilities of a random partition sampler.
    Partition(PartitionArgs),
    /// Disjointly supported test functions and their Rayleigh quotients.
    Bumps(BumpsArgs),
    /// Normalized-Laplacian eigenvalues.
    Spectrum(SpectrumArgs),
    /// Return probabilities `p_2T(x, x)`.
    Heat(HeatArgs),
    /// Certified lower bounds on return probabilities from delocalized bumps.
    Certify(CertifyArgs),
    /// Effective resistances and the annulus test-function bound.
    Resist(ResistArgs),
    /// Minimum annulus vertex separators.
    Separate(SeparateArgs),
    /// Random barrier set from annulus separators.
    Barrier(BarrierArgs),
    /// Barrier metrics and walk speed across scales.
    Subdiff(SubdiffArgs),
    /// Monte Carlo walk displacement.
    Walk(WalkArgs),
    /// Search for a normalized weight with small ball growth.
    Optimize(OptimizeArgs),
    /// Binary-tree growth certificate, optionally auditing a weight.
    Cbt(CbtArgs),
    /// Run an experiment described by a TOML config file.
    Run(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Kind {
    Grid,
    TriGrid,
    Cycle,
    Path,
    BinaryTree,
    CanopyTree,
    Prism,
    StackedTriangulation,
    DecoratedTree,
    TransientTree,
    Star,
    Complete,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub h: Option<usize>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub torus: bool,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub insertions: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub l_max: Option<usize>,
    #[arg(long)]
    pub leaves: Option<usize>,
    /// Degree profile of the transient tree, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub d: Vec<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Sampler {
    Ckr,
    Exp,
    BoostCkr,
    BoostExp,
}

#[derive(Args, Debug)]
pub struct PartitionArgs {
    /// Diameter bound of the blocks.
    #[arg(long)]
    pub tau: f64,
    /// Padding is measured at radius `δ τ / α`.
    #[arg(long, default_value_t = 4.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5")]
    pub deltas: Vec<f64>,
    #[arg(long, value_enum, default_value = "ckr")]
    pub sampler: Sampler,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct BumpsArgs {
    #[arg(long = "R")]
    pub r: f64,
    /// Ball-size bound; defaults to `max_x |B_ω(x, R)|`.
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Build the delocalized family with this δ instead of the eigenvalue family.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Diameter of the partition blocks; defaults to `R/2`.
    #[arg(long)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    /// Compute only the smallest `count` eigenvalues.
    #[arg(long)]
    pub count: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct HeatArgs {
    #[arg(long, default_value_t = 0)]
    pub x: usize,
    /// Report every `T` in `1..=T`.
    #[arg(long = "T")]
    pub t: Option<usize>,
    /// Explicit list of times, overriding `--T`.
    #[arg(long, value_delimiter = ',')]
    pub times: Vec<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[arg(long = "R")]
    pub r: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long = "T")]
    pub t: usize,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ResistArgs {
    /// Source set for a plain resistance query.
    #[arg(long, value_delimiter = ',')]
    pub sources: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<usize>,
    /// Centre of the annulus test function.
    #[arg(long)]
    pub x: Option<usize>,
    #[arg(long = "R")]
    pub r: Option<f64>,
    /// Regulation constant.
    #[arg(long = "C", default_value_t = 2.0)]
    pub c: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SeparateArgs {
    #[arg(long, default_value_t = 0)]
    pub x: usize,
    /// Inner radii.
    #[arg(long, value_delimiter = ',', required = true)]
    pub r: Vec<usize>,
    /// Outer radius is `factor · r`.
    #[arg(long, default_value_t = 3)]
    pub factor: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct BarrierArgs {
    #[arg(long)]
    pub r: usize,
    /// Defaults to `3r`.
    #[arg(long)]
    pub r_outer: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SubdiffArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    pub scales: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub ratio: usize,
    #[arg(long, value_delimiter = ',', default_value = "16,64,256")]
    pub times: Vec<usize>,
    #[arg(long, default_value_t = 400)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub collar: usize,
    #[arg(long, default_value_t = 32)]
    pub fit_roots: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricKind {
    Graph,
    Conformal,
}

#[derive(Args, Debug)]
pub struct WalkArgs {
    /// `stationary`, `uniform`, or a vertex index.
    #[arg(long, default_value = "stationary")]
    pub start: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub times: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, value_enum, default_value = "graph")]
    pub metric: MetricKind,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[arg(long = "R")]
    pub r: f64,
    #[arg(long, default_value_t = 50)]
    pub iterations: usize,
    /// Also write the optimized weight here.
    #[arg(long)]
    pub save_weight: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct CbtArgs {
    /// Tree height.
    #[arg(long)]
    pub n: usize,
    /// Claimed growth ratio for the audit of `--weight`.
    #[arg(long = "Q")]
    pub q: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::execute(cli.command, None) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
