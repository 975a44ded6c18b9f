//! The `nfmcc` command line.
//!
//! Exit status is 0 on success, 1 when the computation ran but the answer is
//! negative (an invalid certificate under `--require-valid`, a failed
//! robustness trial, an unreachable size bin) and 2 for bad invocations or
//! unreadable input.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nfmcc_core::certificates::{
    build_int_opt_certificate, check_nd_assumption, check_strong_set, find_path_certificate, DEFAULT_LINEARIZATION,
};
use nfmcc_core::cluster::{l2_norm_diag_with_floor, one_diag, RecoveredClustering, NOISE_FLOOR};
use nfmcc_core::nfm::{filter_by_strength, generate, DEFAULT_FRINGE_CUTOFF};
use nfmcc_core::sdp::{solve, SolverOptions, Variant};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{run_robustness_sweep, run_table, write_csv, ExperimentSpec, RobustnessSpec, Table};
use crate::io::{
    partition_from_labels, read_graph, read_instance, read_json, to_json, write_output, InstanceFile, SolutionFile,
};

#[derive(Debug, Parser)]
#[command(name = "nfmcc", version, about = "Correlation clustering on Node Features Model graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw an NFM instance.
    Gen(GenArgs),
    /// Solve one of the two SDP relaxations.
    Solve(SolveArgs),
    /// Run a recovery algorithm.
    Cluster(ClusterArgs),
    /// Build and check a certificate.
    Certify(CertifyArgs),
    /// Evaluate the norm-diag assumption on every cluster of an instance.
    CheckAssumption(AssumptionArgs),
    /// Regenerate one of the experiment tables.
    Experiment(ExperimentArgs),
    /// Perturbation sweep for the stability of `diag X*`.
    Robustness(RobustnessArgs),
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
}

impl SolverArgs {
    fn options(&self) -> Result<SolverOptions> {
        if !(self.tol > 0.0 && self.tol.is_finite()) || !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Usage("--tol and --rho must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Usage("--max-iters must be positive".into()));
        }
        Ok(SolverOptions { tol: self.tol, max_iters: self.max_iters, rho: self.rho, ..SolverOptions::default() })
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// A scalar `a` for `α = a·e`, or `a1,a2,...` with k entries.
    #[arg(long, default_value = "0.3", value_parser = parse_list)]
    pub alpha: ::std::vec::Vec<f64>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    #[value(name = "1d")]
    UnitDiag,
    #[value(name = "nd")]
    NormDiag,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::UnitDiag => Variant::UnitDiag,
            VariantArg::NormDiag => Variant::NormDiag,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Any JSON file with a `W` field.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgArg {
    #[value(name = "1-diag")]
    OneDiag,
    #[value(name = "l2-norm-diag")]
    L2NormDiag,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub alg: AlgArg,
    /// Smallest diagonal entry `l2-norm-diag` treats as signal.
    #[arg(long, default_value_t = NOISE_FLOOR)]
    pub noise_floor: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CertKind {
    IntOpt,
    Paths,
    StrongSet,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: CertKind,
    /// Clustering to certify for `int-opt`, as written by `cluster`;
    /// uncovered nodes are strays. Defaults to the labels of an instance file.
    #[arg(long)]
    pub clusters: Option<PathBuf>,
    /// Exit with status 1 when the certificate is invalid.
    #[arg(long)]
    pub require_valid: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AssumptionArgs {
    /// An instance file, as written by `gen`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_FRINGE_CUTOFF)]
    pub cutoff: f64,
    #[arg(long, default_value_t = DEFAULT_LINEARIZATION)]
    pub c: f64,
    #[arg(long)]
    pub require_valid: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=7))]
    pub table: u8,
    #[arg(long)]
    pub seed: u64,
    /// CSV report, one row per bin.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Full report with every instance record.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub instances: Option<usize>,
    /// Run the assumption table at the full cluster sizes 1201-1900.
    #[arg(long)]
    pub full_sizes: bool,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iters: usize,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// `‖Δ‖_F`, or a comma list cycled over the trials.
    #[arg(long, default_value = "0.1,1,10", value_parser = parse_list)]
    pub delta_norm: ::std::vec::Vec<f64>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

// clap hands each occurrence to the parser and the whole list is one value,
// so the fields above spell out the `Vec` path to opt out of repeated values.
fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

/// Parses `args` (program name first), runs the command and maps the result
/// to an exit status. Errors go to standard error.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("nfmcc: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}

pub fn exit_status(e: &Error) -> u8 {
    match e {
        Error::Core(nfmcc_core::Error::InvalidInput(_) | nfmcc_core::Error::InvalidParameter(_)) => 2,
        Error::Csv(_) => 2,
        e if e.is_usage() => 2,
        _ => 1,
    }
}

/// Runs one command; `Ok(false)` is a negative answer.
pub fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Cluster(a) => cluster(a),
        Command::Certify(a) => certify(a),
        Command::CheckAssumption(a) => check_assumption(a),
        Command::Experiment(a) => experiment(a),
        Command::Robustness(a) => robustness(a),
    }
}

fn expand_alpha(alpha: &[f64], k: usize) -> Result<Vec<f64>> {
    match alpha.len() {
        1 => Ok(vec![alpha[0]; k]),
        l if l == k => Ok(alpha.to_vec()),
        l => Err(Error::Usage(format!("--alpha has {l} entries but k = {k}"))),
    }
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    write_output(out, &to_json(value))
}

fn gen(a: &GenArgs) -> Result<bool> {
    let alpha = expand_alpha(&a.alpha, a.k)?;
    let inst = generate(a.n, a.k, &alpha, a.seed)?;
    emit(a.out.as_deref(), &InstanceFile::from(&inst))?;
    Ok(true)
}

fn solve_cmd(a: &SolveArgs) -> Result<bool> {
    let opts = a.solver.options()?;
    let g = read_graph(&a.input)?;
    let variant = Variant::from(a.variant);
    let sol = solve(g.weights(), variant, &opts)?;
    emit(a.out.as_deref(), &SolutionFile::new(variant, &sol))?;
    Ok(true)
}

fn cluster(a: &ClusterArgs) -> Result<bool> {
    let opts = a.solver.options()?;
    if !(a.noise_floor >= 0.0) {
        return Err(Error::Usage("--noise-floor must be non-negative".into()));
    }
    let g = read_graph(&a.input)?;
    let rec = match a.alg {
        AlgArg::OneDiag => one_diag(&g, &opts)?,
        AlgArg::L2NormDiag => l2_norm_diag_with_floor(&g, &opts, a.noise_floor)?,
    };
    emit(a.out.as_deref(), &rec.clustering)?;
    Ok(true)
}

#[derive(Serialize)]
struct CertifyOutput {
    kind: &'static str,
    valid: bool,
    certificate: serde_json::Value,
}

fn certify(a: &CertifyArgs) -> Result<bool> {
    let g = read_graph(&a.input)?;
    let (kind, valid, certificate) = match a.kind {
        CertKind::Paths => {
            let c = find_path_certificate(&g);
            ("paths", c.is_certified(), serde_json::to_value(&c))
        }
        CertKind::StrongSet => {
            let c = check_strong_set(&g, None)?;
            ("strong-set", c.valid, serde_json::to_value(&c))
        }
        CertKind::IntOpt => {
            let (clusters, strays) = match &a.clusters {
                Some(p) => {
                    let rec: RecoveredClustering = read_json(p)?;
                    let strays = (0..g.n()).filter(|i| !rec.covered.contains(i)).collect();
                    (rec.clusters, strays)
                }
                None => {
                    let inst = read_instance(&a.input)?;
                    partition_from_labels(&inst.truth.labels, inst.truth.k)
                }
            };
            let c = build_int_opt_certificate(&g, &clusters, &strays)?;
            ("int-opt", c.valid, serde_json::to_value(&c))
        }
    };
    let certificate = certificate.map_err(|e| Error::Usage(format!("cannot encode certificate: {e}")))?;
    emit(a.out.as_deref(), &CertifyOutput { kind, valid, certificate })?;
    Ok(valid || !a.require_valid)
}

#[derive(Serialize)]
struct AssumptionOutput {
    cutoff: f64,
    c: f64,
    all_ok: bool,
    clusters: Vec<nfmcc_core::certificates::NdAssumptionReport>,
}

fn check_assumption(a: &AssumptionArgs) -> Result<bool> {
    if !(a.c > 0.0 && a.c.is_finite()) {
        return Err(Error::Usage("--c must be positive".into()));
    }
    let inst = read_instance(&a.input)?;
    let sets = filter_by_strength(&inst.theta, a.cutoff)?;
    let clusters = sets
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| check_nd_assumption(&inst.graph, s, &inst.theta.select(s), a.c))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let all_ok = clusters.iter().all(|r| r.all_ok());
    emit(a.out.as_deref(), &AssumptionOutput { cutoff: a.cutoff, c: a.c, all_ok, clusters })?;
    Ok(all_ok || !a.require_valid)
}

fn experiment(a: &ExperimentArgs) -> Result<bool> {
    let table = Table::from_number(a.table).ok_or_else(|| Error::Usage(format!("no table {}", a.table)))?;
    let mut spec = if a.full_sizes {
        if table != Table::Assumption {
            return Err(Error::Usage("--full-sizes only applies to table 6".into()));
        }
        ExperimentSpec::full_assumption_sizes(a.seed)
    } else {
        ExperimentSpec::standard(table, a.seed)
    };
    if let Some(m) = a.instances {
        spec.instances = m;
    }
    spec.tol = a.tol;
    spec.max_iters = a.max_iters;
    SolverArgs { tol: a.tol, max_iters: a.max_iters, rho: 1.0 }.options()?;

    let start = Instant::now();
    let report = run_table(&spec)?;
    eprintln!("nfmcc: table {} finished in {:.2}s", a.table, start.elapsed().as_secs_f64());

    let mut csv = Vec::new();
    write_csv(&report, &mut csv)?;
    let csv = String::from_utf8(csv).expect("csv output is UTF-8");
    write_output(a.out.as_deref(), &csv)?;
    if let Some(p) = &a.json {
        emit(Some(p), &report)?;
    }
    Ok(true)
}

fn robustness(a: &RobustnessArgs) -> Result<bool> {
    SolverArgs { tol: a.tol, max_iters: 50_000, rho: 1.0 }.options()?;
    let spec = RobustnessSpec { tol: a.tol, ..RobustnessSpec::new(a.n, a.trials, a.delta_norm.clone(), a.seed) };
    // only `experiment` runs its batch in parallel
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker: {e}")))?;
    let start = Instant::now();
    let report = pool.install(|| run_robustness_sweep(&spec))?;
    eprintln!(
        "nfmcc: {}/{} trials hold ({} skipped) in {:.2}s",
        report.holds,
        report.trials.len(),
        report.skipped,
        start.elapsed().as_secs_f64()
    );
    emit(a.out.as_deref(), &report)?;
    Ok(report.holds == report.trials.len())
}
