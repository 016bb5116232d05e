//! Dense linear algebra, the analytical least-squares oracle, a fixed-step
//! ODE integrator and eigenvalue routines.

mod banded;
mod eigen;
mod lstsq;
mod matrix;
mod ode;

pub use banded::{BandedCholesky, BandedSpd};
pub use eigen::{eigenvalues, Spectrum};
pub use lstsq::{
    pseudoinverse_solve, residual_and_lse, solve_square, LeastSquares, Lu, DEFAULT_CONDITION_CAP,
};
pub use matrix::{DenseMatrix, DenseVector};
pub use ode::{integrate_linear_ode, step_schedule, Rk4, Trajectory};

pub use nalgebra::Complex;
