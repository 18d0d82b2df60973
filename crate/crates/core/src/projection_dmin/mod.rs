//! The projection step `C_n(p)`, abstract relations `p(x − τe)p = 0`, the
//! compression lemma as a concrete test oracle, and d-minimalization by
//! compression.

pub mod cnp;
pub mod dmin;
pub mod lemma;
pub mod relation;

pub use cnp::{check_effect, cnp_member, doubled_query, validate_cnp};
pub use dmin::{
    compressed_query, dmin_refute, dmin_sampled_certify, validate_compression, CompressionCert,
    DminOutcome, SampleOutcome, SearchBudget,
};
pub use lemma::{lemma_compression_witness, LemmaVerdict};
pub use relation::{relation_check, Holds, RelationStep, RelationVerdict};

/// Largest padding weight accepted as a witness.
pub const T_MAX: f64 = 1_073_741_824.0;
