//! Numerical toolkit for anisotropic nonlocal p-Laplace operators.
//!
//! The operator under study acts along coordinate axes only: its jump measure
//! charges axis-parallel differences with one-dimensional densities
//! `s_k (1 - s_k) |x_k - y_k|^{-1 - s_k p}`, one order `s_k` per axis. The
//! normalization keeps every derived quantity bounded as any `s_k` tends to 1,
//! and the induced geometry is anisotropic: balls are rectangles whose
//! half-width along axis `k` is `r^{s_max/s_k}`.
//!
//! Modules:
//! - [`geometry`]: anisotropy data, metric, rectangles, slabs, scaling maps,
//!   and the anisotropic dyadic rectangle construction.
//! - [`kernel`]: kernel families, exact tail masses and per-cell weights.
//! - [`grid`]: tensor grids, discrete energies, operator application,
//!   cut-off functions.
//! - [`solver`]: Dirichlet problems solved by nonlinear Gauss-Seidel descent.
//! - [`maximal`]: rectangle maximal functions (plain, sharp, dyadic) and
//!   good-lambda level-set measurements.
//! - [`verify`]: empirical checks of the algebraic and functional
//!   inequalities that govern the operator, with replayable reports.

pub mod error;
pub mod geometry;
pub mod grid;
pub mod kernel;
mod index;

pub mod maximal;
pub mod num;
pub mod quad;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{Anisotropy, Rect, Slab};
pub use grid::{ExteriorRule, GridFunction};
pub use kernel::KernelFamily;
pub use maximal::{MaximalResult, MaximalVariant};
pub use solver::{DirichletProblem, Solution, SweepMode};
pub use verify::{InequalityReport, SeriesPoint};
