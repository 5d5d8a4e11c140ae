// `!(x > 0.0)` rejects NaN along with out-of-range values; index loops
// mirror the numerical formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod barrier;
pub mod correlations;
pub mod couplings;
pub mod duhamel;
pub mod experiments;
pub mod heat;
pub mod kernel;
pub mod particles;
pub mod quad;
pub mod rng;
pub mod transition;

pub use heat::{solve_rho, HeatError, HeatParams, RhoSolution, SolveOptions};
pub use kernel::{sample_jump, validate_kernel, JumpKernel, KernelError};
pub use rng::RngStream;
pub use transition::{transition_probability, OriginReturn, TransitionTable};
