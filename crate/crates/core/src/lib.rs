//! Deconvolution of Poissonian images.
//!
//! Three multiplicative fixed-point schemes share one set of operators:
//!
//! * Richardson-Lucy (RL), the maximum-likelihood iteration under a
//!   nonnegative blur;
//! * sparse RL (SRL), which runs the same kind of update on the nonnegative
//!   coefficients of an overcomplete dictionary of positive atoms and adds an
//!   l1 (Laplacian) penalty, giving `c <- c * A*{g / A c} / (A*{1} + lambda)`;
//! * RLTV, RL damped by a total-variation curvature term.
//!
//! [`simulate`] and [`experiment`] generate synthetic count data and
//! orchestrate seeded multi-trial comparisons; [`metrics`] scores them.

pub mod array;
pub mod error;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod operators;
pub mod simulate;
pub mod solvers;

pub use array::{CoeffLayout, CoeffStack, Image};
pub use error::{Error, Result};
pub use metrics::MetricReport;
pub use operators::{ConvKernel, Dictionary, ForwardModel, HaarDictionary, PatchAtoms, PatchDictionary, SplineDictionary};
pub use solvers::{run_solver, Method, Solution, SolverConfig, SolverTrace, StopRule, Termination, TraceRecord};
