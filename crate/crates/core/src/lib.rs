//! Structured branching-coalescing particle systems with coordinated
//! transitions, the jump-diffusions they are moment dual to, and the
//! deterministic ODE systems their first moments satisfy.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, threads, or a command line lives in the companion `cobra`
//! crate; replica parallelism plugs in through [`exec::Executor`].
//!
//! Module map:
//!
//! * [`measure`]: finite atomic measures on `[0, 1]` and their rate kernels.
//! * [`model`]: graphs, the full measure-valued parameterization, presets and
//!   truncation of infinite lattices/trees.
//! * [`forward`]: exact event-driven simulation of the particle process.
//! * [`dual`]: Euler–Maruyama + Poisson-jump simulation of the frequency process.
//! * [`analytics`]: matrix exponentials and RK4 solvers for the moment ODEs.
//! * [`pam`]: random potentials and Feynman–Kac style estimators.
//! * [`harness`]: brute-force oracle and the statistical checks built on top.

#![no_std]
// `!(x > 0.0)` style guards deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytics;
pub mod dual;
pub mod exec;
pub mod forward;
pub mod harness;
pub mod math;
pub mod measure;
pub mod model;
pub mod pam;
pub mod rng;
pub mod stats;

pub use measure::{Atom, AtomicMeasure, EventKind, MeasureError, MeasureSplit};
pub use model::{GraphSpec, ModelError, ModelSpec, TypeSignature};
pub use stats::EstimateWithCI;

/// Crate version, echoed into every artifact the CLI writes.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
