//! Seeded batch experiments over NFM instances, one report row per size bin.
//!
//! Instance `i` of every bin draws from the ChaCha stream seeded with
//! `base_seed + i`; bin `b` uses stream number `b + 1` of that seed, so bins
//! are independent and a report is a pure function of its spec.

mod robustness;
pub mod scenarios;

use nfmcc_core::certificates::{check_nd_assumption, check_strong_set, rank_one_decompose};
use nfmcc_core::cluster::{evaluate_recovery, l2_norm_diag};
use nfmcc_core::linalg::{laplacian, min_eigenvalue};
use nfmcc_core::nfm::{filter_by_strength, generate, NfmInstance, DEFAULT_FRINGE_CUTOFF};
use nfmcc_core::sdp::SolverOptions;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use robustness::{run_robustness_sweep, RobustnessSpec, RobustnessReport, RobustnessTrial};

/// Laplacians with `λ_min ≥ −PSD_TOL · max(1, ‖L‖_F)` count as PSD.
pub const PSD_TOL: f64 = 1e-9;

/// Top eigenvalue counts as separated when it is this many times the others.
pub const SEPARATION_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table {
    /// PSD-ness of full cluster Laplacians.
    LaplacianPsd,
    /// Strong-set certificate on strong plus near-strong nodes.
    StrongSet,
    /// Spectrum of the linearised block; the three parts split the bins.
    Spectral(u8),
    /// Conditions of the norm-diag assumption.
    Assumption,
    /// Recovery by `l2-norm-diag` on whole graphs.
    Recovery,
}

impl Table {
    /// Table number as printed, 1 to 7.
    pub fn from_number(t: u8) -> Option<Table> {
        match t {
            1 => Some(Table::LaplacianPsd),
            2 => Some(Table::StrongSet),
            3..=5 => Some(Table::Spectral(t - 2)),
            6 => Some(Table::Assumption),
            7 => Some(Table::Recovery),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Table::LaplacianPsd => 1,
            Table::StrongSet => 2,
            Table::Spectral(p) => p + 2,
            Table::Assumption => 6,
            Table::Recovery => 7,
        }
    }
}

/// Inclusive size range. For the recovery table `lo == hi` is the graph size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeBin {
    pub lo: usize,
    pub hi: usize,
}

impl SizeBin {
    pub fn label(&self) -> String {
        if self.lo == self.hi {
            self.lo.to_string()
        } else {
            format!("{}-{}", self.lo, self.hi)
        }
    }

    fn contains(&self, s: usize) -> bool {
        self.lo <= s && s <= self.hi
    }
}

fn bins(ranges: &[(usize, usize)]) -> Vec<SizeBin> {
    ranges.iter().map(|&(lo, hi)| SizeBin { lo, hi }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub table: Table,
    pub k: usize,
    pub alpha: Vec<f64>,
    pub bins: Vec<SizeBin>,
    pub instances: usize,
    pub cutoff: f64,
    /// Slope of the linearised logit.
    pub c: f64,
    pub base_seed: u64,
    /// Draws allowed per instance before a bin is declared unreachable.
    pub retry_budget: usize,
    pub tol: f64,
    pub max_iters: usize,
}

impl ExperimentSpec {
    /// The standard setup: `k = 3`, `α = 0.3e`, 10 instances per bin,
    /// cutoff 0.6. The assumption table runs at one tenth of its full cluster
    /// sizes; see [`ExperimentSpec::full_assumption_sizes`].
    pub fn standard(table: Table, base_seed: u64) -> Self {
        let small = [(6, 10), (11, 15), (16, 20), (21, 25), (26, 30), (31, 35), (36, 40)];
        let ranges: Vec<(usize, usize)> = match table {
            Table::LaplacianPsd | Table::StrongSet => small.to_vec(),
            Table::Spectral(1) => small[0..3].to_vec(),
            Table::Spectral(2) => small[3..6].to_vec(),
            Table::Spectral(_) => small[6..].to_vec(),
            Table::Assumption => (12..19).map(|h| (h * 10 + 1, h * 10 + 10)).collect(),
            Table::Recovery => (6..15).map(|t| (t * 10, t * 10)).collect(),
        };
        let solver = SolverOptions::default();
        ExperimentSpec {
            table,
            k: 3,
            alpha: vec![0.3; 3],
            bins: bins(&ranges),
            instances: 10,
            cutoff: DEFAULT_FRINGE_CUTOFF,
            c: nfmcc_core::certificates::DEFAULT_LINEARIZATION,
            base_seed,
            retry_budget: 500,
            tol: solver.tol,
            max_iters: solver.max_iters,
        }
    }

    /// Assumption table at the full cluster sizes 1201-1900.
    pub fn full_assumption_sizes(base_seed: u64) -> Self {
        let ranges: Vec<(usize, usize)> = (12..19).map(|h| (h * 100 + 1, h * 100 + 100)).collect();
        ExperimentSpec { bins: bins(&ranges), ..Self::standard(Table::Assumption, base_seed) }
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions { tol: self.tol, max_iters: self.max_iters, ..SolverOptions::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.instances == 0 {
            return Err(Error::Usage("at least one instance per bin is required".into()));
        }
        if self.alpha.len() != self.k {
            return Err(Error::Usage("alpha must have k entries".into()));
        }
        let mut sorted = self.bins.clone();
        sorted.sort_by_key(|b| b.lo);
        if sorted.iter().any(|b| b.lo > b.hi || b.lo == 0) || sorted.windows(2).any(|w| w[0].hi >= w[1].lo) {
            return Err(Error::Usage("bins must be non-empty and non-overlapping".into()));
        }
        Ok(())
    }
}

/// One instance of a bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    /// Seed of the NFM draw.
    pub seed: u64,
    /// Nodes in the graph.
    pub n: usize,
    /// Size of the cluster examined (graph size for the recovery table).
    pub size: usize,
    pub success: bool,
    /// Smallest Laplacian eigenvalue (table 1).
    pub min_eigenvalue: Option<f64>,
    /// Non-zero eigenvalues of the linearised block (tables 3-5).
    pub eigenvalues: Option<Vec<f64>>,
    /// Top eigenvalue at least [`SEPARATION_FACTOR`] times the rest.
    pub separated: Option<bool>,
    /// Node-averaged third-condition ratio (table 6).
    pub c3_ratio: Option<f64>,
    /// First and second assumption conditions separately (table 6).
    pub c1_ok: Option<bool>,
    pub c2_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinReport {
    pub bin: SizeBin,
    pub label: String,
    pub instances: usize,
    pub successes: usize,
    pub records: Vec<InstanceRecord>,
}

impl BinReport {
    pub fn mean_min_eigenvalue(&self) -> Option<f64> {
        mean(self.records.iter().filter_map(|r| r.min_eigenvalue))
    }

    pub fn separated(&self) -> usize {
        self.records.iter().filter(|r| r.separated == Some(true)).count()
    }

    /// C3 ratio averaged over the instances that pass C1 and C2.
    pub fn mean_c3_ratio(&self) -> Option<f64> {
        mean(self.records.iter().filter(|r| r.success).filter_map(|r| r.c3_ratio))
    }

    /// C3 ratio averaged over every instance, whatever C1 and C2 say.
    pub fn mean_c3_ratio_all(&self) -> Option<f64> {
        mean(self.records.iter().filter_map(|r| r.c3_ratio))
    }

    pub fn c1_successes(&self) -> usize {
        self.records.iter().filter(|r| r.c1_ok == Some(true)).count()
    }

    pub fn c2_successes(&self) -> usize {
        self.records.iter().filter(|r| r.c2_ok == Some(true)).count()
    }
}

fn mean(it: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, c) = it.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (c > 0).then(|| s / c as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub rows: Vec<BinReport>,
}

/// Nodes whose size decides the bin: all of `V_j` for table 1, otherwise
/// the strong and near-strong nodes `V_j'`.
fn candidate_sets(inst: &NfmInstance, spec: &ExperimentSpec) -> Result<Vec<Vec<usize>>> {
    Ok(match spec.table {
        Table::LaplacianPsd => inst.truth.clusters(),
        _ => filter_by_strength(&inst.theta, spec.cutoff)?,
    })
}

/// Draws NFM instances until one has a cluster whose size lies in `bin`.
/// The graph size adapts to the observed cluster sizes between draws.
fn draw_cluster(spec: &ExperimentSpec, bin_idx: usize, inst_idx: usize) -> Result<(NfmInstance, Vec<usize>)> {
    let bin = spec.bins[bin_idx];
    let mut rng = ChaCha8Rng::seed_from_u64(spec.base_seed.wrapping_add(inst_idx as u64));
    rng.set_stream(bin_idx as u64 + 1);
    let target = (bin.lo + bin.hi) as f64 / 2.0;
    let mut n = (target * spec.k as f64 * 2.0).max(bin.lo as f64);
    for _ in 0..spec.retry_budget {
        let seed: u64 = rng.random();
        let inst = generate(n.round() as usize, spec.k, &spec.alpha, seed)?;
        let sets = candidate_sets(&inst, spec)?;
        if let Some(found) = sets.iter().find(|s| bin.contains(s.len())) {
            return Ok((inst, found.clone()));
        }
        let avg = sets.iter().map(Vec::len).sum::<usize>() as f64 / sets.len() as f64;
        let factor = if avg > 0.0 { (target / avg).clamp(0.5, 2.0) } else { 2.0 };
        // jitter keeps the search from cycling between two sizes
        n = (n * factor * rng.random_range(0.9..1.1)).max(bin.lo as f64);
    }
    Err(Error::BinExhausted { lo: bin.lo, hi: bin.hi, attempts: spec.retry_budget })
}

fn cluster_record(spec: &ExperimentSpec, inst: &NfmInstance, nodes: &[usize]) -> Result<InstanceRecord> {
    let mut rec = InstanceRecord {
        seed: inst.seed,
        n: inst.theta.n(),
        size: nodes.len(),
        success: false,
        min_eigenvalue: None,
        eigenvalues: None,
        separated: None,
        c3_ratio: None,
        c1_ok: None,
        c2_ok: None,
    };
    let sub = inst.graph.subgraph(nodes);
    match spec.table {
        Table::LaplacianPsd => {
            let l = laplacian(sub.weights());
            let lmin = min_eigenvalue(&l)?;
            rec.success = lmin >= -PSD_TOL * l.frobenius_norm().max(1.0);
            rec.min_eigenvalue = Some(lmin);
        }
        Table::StrongSet => {
            rec.success = check_strong_set(&sub, None)?.valid;
        }
        Table::Spectral(_) => {
            let d = rank_one_decompose(&inst.theta.select(nodes), spec.c)?;
            let ev = d.nonzero_eigenvalues();
            let rest = ev.iter().skip(1).fold(0.0f64, |a, v| a.max(v.abs()));
            rec.success = d.positive;
            rec.separated = Some(ev[0] >= SEPARATION_FACTOR * rest);
            rec.eigenvalues = Some(ev);
        }
        Table::Assumption => {
            let rep = check_nd_assumption(&inst.graph, nodes, &inst.theta.select(nodes), spec.c)?;
            rec.success = rep.conditions.c1_ok && rep.conditions.c2_ok;
            rec.c3_ratio = Some(rep.conditions.mean_c3_ratio());
            rec.c1_ok = Some(rep.conditions.c1_ok);
            rec.c2_ok = Some(rep.conditions.c2_ok);
        }
        Table::Recovery => unreachable!("whole-graph table"),
    }
    Ok(rec)
}

fn recovery_record(spec: &ExperimentSpec, n: usize, inst_idx: usize) -> Result<InstanceRecord> {
    let seed = spec.base_seed.wrapping_add(inst_idx as u64);
    let inst = generate(n, spec.k, &spec.alpha, seed)?;
    let rec = l2_norm_diag(&inst.graph, &spec.solver())?;
    let ev = evaluate_recovery(&rec.clustering, &inst.truth);
    Ok(InstanceRecord {
        seed,
        n,
        size: n,
        success: ev.success,
        min_eigenvalue: None,
        eigenvalues: None,
        separated: None,
        c3_ratio: None,
        c1_ok: None,
        c2_ok: None,
    })
}

/// Runs every bin of `spec`; instances within a bin run in parallel.
pub fn run_table(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.bins.len());
    for (b, bin) in spec.bins.iter().enumerate() {
        let records: Vec<InstanceRecord> = (0..spec.instances)
            .into_par_iter()
            .map(|i| match spec.table {
                Table::Recovery => recovery_record(spec, bin.lo, i),
                _ => {
                    let (inst, nodes) = draw_cluster(spec, b, i)?;
                    cluster_record(spec, &inst, &nodes)
                }
            })
            .collect::<Result<_>>()?;
        rows.push(BinReport {
            bin: *bin,
            label: bin.label(),
            instances: records.len(),
            successes: records.iter().filter(|r| r.success).count(),
            records,
        });
    }
    Ok(ExperimentReport { spec: spec.clone(), rows })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.2}"))
}

/// One CSV row per bin with the columns of the corresponding table.
pub fn write_csv<W: std::io::Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match report.spec.table {
        Table::LaplacianPsd => {
            w.write_record(["cluster_size_range", "psd_success", "mean_smallest_laplacian_eigenvalue"])?;
            for r in &report.rows {
                w.write_record([r.label.clone(), r.successes.to_string(), fmt_opt(r.mean_min_eigenvalue())])?;
            }
        }
        Table::StrongSet => {
            w.write_record(["cluster_size_range", "combinatorial_condition_success"])?;
            for r in &report.rows {
                w.write_record([r.label.clone(), r.successes.to_string()])?;
            }
        }
        Table::Spectral(_) => {
            w.write_record(["cluster_size_range", "eigenvector_success", "separated", "nonzero_eigenvalues"])?;
            for r in &report.rows {
                let ev: Vec<String> = r
                    .records
                    .iter()
                    .filter(|x| x.success)
                    .filter_map(|x| x.eigenvalues.as_ref())
                    .map(|e| e.iter().map(|v| format!("{v:.1}")).collect::<Vec<_>>().join(" "))
                    .collect();
                w.write_record([r.label.clone(), r.successes.to_string(), r.separated().to_string(), ev.join("; ")])?;
            }
        }
        Table::Assumption => {
            w.write_record([
                "cluster_size_range",
                "c1_c2_success",
                "average_c3_upper_bound",
                "c1_success",
                "c2_success",
                "average_c3_all_instances",
            ])?;
            for r in &report.rows {
                w.write_record([
                    r.label.clone(),
                    r.successes.to_string(),
                    fmt_opt(r.mean_c3_ratio()),
                    r.c1_successes().to_string(),
                    r.c2_successes().to_string(),
                    fmt_opt(r.mean_c3_ratio_all()),
                ])?;
            }
        }
        Table::Recovery => {
            w.write_record(["graph_size", "l2_norm_diag_success"])?;
            for r in &report.rows {
                w.write_record([r.label.clone(), r.successes.to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_numbers_round_trip() {
        for t in 1..=7 {
            assert_eq!(Table::from_number(t).unwrap().number(), t);
        }
        assert!(Table::from_number(0).is_none());
        assert!(Table::from_number(8).is_none());
    }

    #[test]
    fn standard_specs_have_the_expected_rows() {
        let t7 = ExperimentSpec::standard(Table::Recovery, 0);
        let labels: Vec<String> = t7.bins.iter().map(SizeBin::label).collect();
        assert_eq!(labels, ["60", "70", "80", "90", "100", "110", "120", "130", "140"]);
        assert_eq!(ExperimentSpec::standard(Table::LaplacianPsd, 0).bins.len(), 7);
        let spectral: usize = (1..=3).map(|p| ExperimentSpec::standard(Table::Spectral(p), 0).bins.len()).sum();
        assert_eq!(spectral, 7);
        let t6 = ExperimentSpec::standard(Table::Assumption, 0);
        assert_eq!((t6.bins[0].lo, t6.bins[6].hi), (121, 190));
        let full = ExperimentSpec::full_assumption_sizes(0);
        assert_eq!((full.bins[0].lo, full.bins[6].hi), (1201, 1900));
    }

    #[test]
    fn overlapping_bins_and_zero_instances_are_rejected() {
        let mut spec = ExperimentSpec::standard(Table::LaplacianPsd, 0);
        spec.bins = bins(&[(6, 10), (10, 15)]);
        assert!(run_table(&spec).is_err());
        let mut spec = ExperimentSpec::standard(Table::LaplacianPsd, 0);
        spec.instances = 0;
        assert!(run_table(&spec).is_err());
    }

    #[test]
    fn empty_bin_list_gives_an_empty_report() {
        let mut spec = ExperimentSpec::standard(Table::StrongSet, 0);
        spec.bins.clear();
        assert!(run_table(&spec).unwrap().rows.is_empty());
    }

    #[test]
    fn unreachable_bin_is_reported() {
        let mut spec = ExperimentSpec::standard(Table::LaplacianPsd, 0);
        spec.retry_budget = 0;
        spec.instances = 1;
        assert!(matches!(run_table(&spec), Err(Error::BinExhausted { lo: 6, hi: 10, attempts: 0 })));
    }
}
