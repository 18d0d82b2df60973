//! Numerical kernels: Hermitian eigendecomposition, nonnegative least squares
//! and alternating-projection feasibility over products of PSD cones.

pub mod dykstra;
pub mod eig;
pub mod linalg;
pub mod nnls;
pub mod sdp;

pub use dykstra::{dykstra_psd_feasibility, AffineSystem, FeasOptions, FeasResult, FeasStatus};
pub use eig::{herm_eig, min_eigenvalue, psd_project, EigResult};
pub use linalg::{c, CMat};
pub use nnls::{nnls_solve, NnlsResult};
