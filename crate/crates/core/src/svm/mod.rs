//! Soft-margin support vector machines on precomputed or vector kernels.

mod io;
mod kernel;
mod multiclass;
mod smo;

pub use io::{model_to_string, parse_model, read_model, write_model};
pub use kernel::{vector_cross, vector_gram, KernelKind, KernelSpec};
pub use multiclass::{
    argmax_first, train_multiclass, vote_winner, BinaryModel, MulticlassModel, Strategy,
};
pub use smo::{solve, solve_dual, BoxBound, DualSolution, SolverOptions, SvmModel};
