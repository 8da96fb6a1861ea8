//! Multi-block inertial Bregman proximal optimization.
//!
//! The crate is organized around a generic engine and one complete
//! application:
//!
//! * [`block`] holds the block-structured vocabulary: partitions, block
//!   vectors, kernels, problems and block Bregman distances.
//! * [`solver`] runs the cyclic inertial Bregman sweep, tracks the Lyapunov
//!   value and stationarity residual, and decides when to stop.
//! * [`symtrinmf`] binds symmetric nonnegative tri-factorization
//!   `X ≈ U V Uᵀ` into the engine with closed-form block updates.
//! * [`diagnostics`] provides independent checks: finite differences,
//!   sampled relative-smoothness certification, a numeric subproblem
//!   oracle, descent auditing and rate classification.
//! * [`io`] and [`cli`] handle matrices on disk, synthetic instances and the
//!   `bibpa` command line.
//!
//! ```
//! use bibpa::solver::{derive_schedule, run, SolveOptions};
//! use bibpa::symtrinmf::{KernelParams, SymTriInstance};
//! use ndarray::array;
//!
//! let x = array![[2.0, 1.0], [1.0, 2.0]];
//! let inst = SymTriInstance::new(x, 1, KernelParams::default()).unwrap();
//! let problem = inst.as_block_problem();
//! let schedule = derive_schedule(&problem.lipschitz(), &problem.sigmas(), 0.5, 0.9).unwrap();
//! let x0 = inst.initial_point(3);
//! let result = run(&problem, &schedule, &x0, &SolveOptions::default()).unwrap();
//! assert!(result.trace.len() > 1);
//! ```

pub mod block;
pub mod cli;
pub mod diagnostics;
mod error;
pub mod io;
pub(crate) mod linalg;
pub mod solver;
pub mod symtrinmf;

pub use block::{BlockKernel, BlockPartition, BlockProblem, BlockVector};
pub use error::{Error, Result};
pub use solver::{SolveOptions, SolveResult, StepSchedule};
