//! Primal-dual gradient methods for equality-constrained optimization.
//!
//! The crate covers three layers:
//!
//! * [`problem`]: equality-constrained problems, spectral summaries of the
//!   constraint matrix and reference saddle points.
//! * [`solvers`]: the incremental, non-incremental and forward-backward
//!   primal-dual recursions, step-size bounds and linear-rate certificates.
//! * [`consensus`]: mixing matrices, consensus operators and the decentralized
//!   algorithms obtained from the same primal-dual template.
//!
//! [`experiment`] drives multi-agent scenarios end to end.

pub mod consensus;
pub mod error;
pub mod experiment;
pub mod problem;
pub mod solvers;

pub use error::{Error, Result};
