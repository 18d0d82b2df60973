//! Concrete quantum systems: numerical SICs, prime-dimension MUBs, their
//! verification, and the operator-system maps into `M_d`.

pub mod checks;
pub mod concrete;
pub mod instance;
pub mod mub;
pub mod sic;
pub mod soundness;
pub mod verify;

pub use checks::{pi_positivity_check, PiPositivityReport};
pub use concrete::ConcreteOracle;
pub use instance::QuantumInstance;
pub use mub::mub_generate;
pub use sic::{sic_search, sic_search_best};
pub use soundness::{soundness_check, SoundnessReport, SOUNDNESS_TOL};
pub use verify::{verify_instance, VerificationReport};
