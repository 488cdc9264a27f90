//! Randomized low-rank dynamic mode decomposition (rDMD) for motion detection
//! in fixed-camera video.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] dense kernels: deterministic SVD, the randomized SVD with
//!   oversampling and subspace iterations, a real nonsymmetric eigensolver and
//!   complex least squares, plus the binary matrix exchange format.
//! * [`dmd`] splits a snapshot matrix into shifted sequences and computes
//!   modes, eigenvalues and amplitudes of the low-rank linear operator.
//! * [`background`] converts eigenvalues into Fourier modes, selects the
//!   slowly evolving ones as background and thresholds the residual.
//! * [`eval`] confusion counts, recall/precision/F-measure and ROC/AUC.
//! * [`pipeline`] frame I/O, synthetic videos with ground truth, chunked
//!   end-to-end runs and the SVD timing harness.

pub mod background;
pub mod dmd;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod pipeline;

pub use error::{Error, ErrorKind, Result};
pub use num_complex::Complex64;

/// Dense real matrix, column-major storage.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense complex matrix, column-major storage.
pub type ComplexMatrix = nalgebra::DMatrix<Complex64>;
