//! Generator cones with Archimedean ε-semantics: the Gram inner product,
//! t-thresholds, level-1 LP membership, maximal-ordering membership at
//! level n, and properness probing.

pub mod cone;
pub mod gram;
pub mod lp;
pub mod membership;
pub mod omax;
pub mod oracle;
pub mod probe;
pub mod thresholds;
pub mod tseq;

pub use cone::{build_initial_cone, GeneratorCone};
pub use gram::{gram_matrix, Gram};
pub use lp::lp_member;
pub use membership::{
    Certificate, ConeOracle, Diagnostics, MembershipResult, Query, Route, Verdict,
};
pub use omax::{omax_member, OmaxOptions};
pub use oracle::BaseOracle;
pub use probe::{properness_probe, ProbeBudget, ProbeResult};
pub use thresholds::{t_thresholds, Thresholds};
pub use tseq::TSequence;
