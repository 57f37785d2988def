//! Sparse storage and the solver kernels: direct LU, ILU(0), GMRES, BiCGStab.

mod ilu;
mod krylov;
mod lu;
mod ordering;
mod sparse;

pub use ilu::{ilu0, Ilu0};
pub use krylov::{bicgstab, gmres, IterationReport, KrylovConfig, Status};
pub use lu::{lu_factor, lu_factor_with, LuFactorization, LuOptions};
pub use ordering::nested_dissection;
pub use sparse::{axpy, dot, norm2, Identity, LinearOperator, Preconditioner, SparseMatrix, Triplets};
