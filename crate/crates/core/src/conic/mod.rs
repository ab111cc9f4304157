//! Conic programs and the ADMM solver used for every relaxation.

mod admm;
mod dump;
mod ldl;
mod program;

pub use admm::{solve, warm_start, SolveResult, SolveStatus, SolverSettings, WarmStart};
pub(crate) use admm::solve_relaxation;
pub use dump::{read_program, write_program};
pub use program::{Bound, ConicProgram, ConstraintBlock, SparseRow};
