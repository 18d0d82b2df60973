pub mod cli;
pub mod cone_engine;
pub mod error;
pub mod iterate;
pub mod json;
pub mod numerics;
pub mod opsys_core;
pub mod projection_dmin;
pub mod quantum_instances;
pub mod rng;
