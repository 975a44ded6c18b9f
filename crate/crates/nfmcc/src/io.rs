//! JSON file formats for instances, solutions, clusterings and reports.
//!
//! Floats are written with the shortest representation that parses back to
//! the same `f64`, and read with exact rounding, so every file round-trips
//! bit for bit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nfmcc_core::linalg::SymMatrix;
use nfmcc_core::nfm::{ground_truth, FeatureMatrix, Label, NfmInstance, SignedGraph, Strength};
use nfmcc_core::sdp::{SdpSolution, Variant};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An instance as produced by `gen`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub k: usize,
    pub alpha: Vec<f64>,
    pub seed: u64,
    pub theta: Vec<Vec<f64>>,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    pub strength: Vec<Option<Strength>>,
}

impl From<&NfmInstance> for InstanceFile {
    fn from(inst: &NfmInstance) -> Self {
        InstanceFile {
            n: inst.theta.n(),
            k: inst.theta.k(),
            alpha: inst.alpha.clone(),
            seed: inst.seed,
            theta: inst.theta.to_rows(),
            w: inst.graph.weights().to_rows(),
            labels: inst.truth.labels.clone(),
            strength: inst.truth.strength.clone(),
        }
    }
}

impl InstanceFile {
    /// Rebuilds the instance; the graph is taken from the file, the labels
    /// are recomputed from `theta` and must agree with the stored ones.
    pub fn to_instance(&self) -> Result<NfmInstance> {
        let theta = FeatureMatrix::from_rows(&self.theta)?;
        if theta.n() != self.n || theta.k() != self.k {
            return Err(Error::Usage("theta does not match n and k".into()));
        }
        let graph = SignedGraph::from_rows(&self.w)?;
        if graph.n() != self.n {
            return Err(Error::Usage("W does not match n".into()));
        }
        let truth = ground_truth(&theta);
        if truth.labels != self.labels || truth.strength != self.strength {
            return Err(Error::Usage("stored labels disagree with theta".into()));
        }
        Ok(NfmInstance { alpha: self.alpha.clone(), seed: self.seed, theta, graph, truth })
    }
}

// Any file with a `W` field can be read as a graph.
#[derive(Deserialize)]
struct GraphOnly {
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub cone: f64,
}

/// Output of `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub variant: Variant,
    #[serde(rename = "X")]
    pub x: SymMatrix,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub converged: bool,
}

impl SolutionFile {
    pub fn new(variant: Variant, sol: &SdpSolution) -> Self {
        SolutionFile {
            variant,
            x: sol.x.clone(),
            objective: sol.objective,
            residuals: Residuals { primal: sol.primal_residual, dual: sol.dual_residual, cone: sol.cone_violation },
            iterations: sol.iterations,
            converged: sol.converged,
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    // serialising plain data into a String cannot fail
    let mut s = serde_json::to_string_pretty(value).expect("serialisable value");
    s.push('\n');
    s
}

/// Writes to `path`, or to standard output when it is `None`.
pub fn write_output(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, contents).map_err(|source| Error::Io { path: p.to_path_buf(), source }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}

pub fn read_graph(path: &Path) -> Result<SignedGraph> {
    let g: GraphOnly = read_json(path)?;
    SignedGraph::from_rows(&g.w).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

pub fn read_instance(path: &Path) -> Result<NfmInstance> {
    let f: InstanceFile = read_json(path)?;
    f.to_instance().map_err(|e| match e {
        Error::Core(c) => Error::Usage(format!("{}: {c}", path.display())),
        Error::Usage(m) => Error::Usage(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Partition implied by the labels: ground-truth clusters and strays.
pub fn partition_from_labels(labels: &[Label], k: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut clusters = vec![Vec::new(); k];
    let mut strays = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        match l {
            Label::Cluster(j) => clusters[*j].push(i),
            Label::Stray => strays.push(i),
        }
    }
    clusters.retain(|c| !c.is_empty());
    (clusters, strays)
}
