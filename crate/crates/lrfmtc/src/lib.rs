//! Tucker tensor completion with direct multilinear rank learning.
//!
//! The central solver recovers a low multilinear-rank Tucker model from a
//! partially observed, possibly noisy 3-mode tensor. It exploits the fact
//! that a Tucker tensor equals a CPD whose three wide factor matrices are
//! low-rank, and minimizes
//!
//! ```text
//! alpha * (||B1||_* + ||B2||_* + ||B3||_*) + 0.5 * ||(Y - [[B1,B2,B3]]) .* O||_F^2
//! ```
//!
//! by block coordinate descent, solving each factor subproblem with an
//! accelerated singular-value-thresholding iteration. The multilinear rank
//! falls out of the singular spectra of the fitted factors. A noise-aware
//! HaLRTC baseline (ADMM over unfolding-wise trace norms), synthetic data
//! generation, masking/noise models, quality metrics and a sweep harness for
//! rank-recovery experiments round out the toolkit.
//!
//! Start with the runnable programs under `examples/`; the `lrfmtc` binary
//! exposes the same functionality as subcommands over a small binary tensor
//! file format.

// Validators use `!(x > 0.0)` so NaN parameters fail closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod halrtc;
pub mod io;
pub mod linalg;
pub mod solver;
pub mod tensor;
mod util;

pub mod cli;

pub use error::{Error, Result};
pub use tensor::{FactorSet, Matrix, ObservationMask, Tensor3};
