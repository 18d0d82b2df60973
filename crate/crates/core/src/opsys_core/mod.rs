//! *-vector spaces, their elements and Hermitian matrix levels, and the
//! SIC/MUB generator elements.

pub mod element;
pub mod generator;
pub mod space;

pub use element::{HermLevel, HermMat, VElement};
pub use generator::{make_generator, GeneratorSpec};
pub use space::{build_mub_space, build_sic_space, build_space, SpaceKind, SpaceRef, StarSpace};
