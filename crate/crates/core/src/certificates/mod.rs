//! Numerical checkers for the optimality and PSD certificates.

mod assumption;
mod int_opt;
mod nd_rec;
mod psd;
mod robustness;

pub use assumption::{
    check_nd_assumption, check_nd_conditions, decompose_against, rank_one_decompose, NdAssumptionReport,
    NdConditions, RankOneDecomposition, DEFAULT_LINEARIZATION,
};
pub use int_opt::{build_int_opt_certificate, IntOptCertificate, INT_OPT_PSD_TOL, INT_OPT_SIGN_TOL, INT_OPT_TOL};
pub use nd_rec::{
    fixed_point, verify_nd_rec, FixedPoint, FixedPointStatus, NdRecCertificate, FIXED_POINT_MAX_ITERS,
    FIXED_POINT_TOL, ND_REC_NORM_TOL, ND_REC_PSD_TOL, ND_REC_TOL,
};
pub use psd::{
    check_strong_set, find_path_certificate, negative_nodes, strong_set_weighted, EdgePaths, PathCertificate,
    PathSearch, StrongSetCertificate,
};
pub use robustness::{check_diag_robustness, DiagRobustness};
