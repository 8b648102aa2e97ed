//! Desk-scale numerical toolkit for qualitative homogenization of parabolic
//! equations with lower-order terms,
//!
//! ```text
//!   ∂t p = ∇·(a(x/ε, t/ε²) ∇p) + b(x/ε, t/ε²)·∇p + d(x/ε, t/ε²) p,
//! ```
//!
//! on parabolic cylinders V = U × I with Cauchy–Dirichlet data. The crate
//! solves the heterogeneous and homogenized problems, computes space-time
//! correctors and effective coefficients (ā, b̄, d̄), evaluates oscillation
//! error functionals in discrete negative parabolic Sobolev norms, and probes
//! the Caccioppoli and Meyers energy estimates that back the convergence
//! statements.
//!
//! Modules follow the pipeline: [`mesh`] and [`fields`] set up grids and
//! coefficient samplers, [`linalg`] and [`solver`] run the implicit stepping,
//! [`norms`] provides L^p / parabolic H¹ / dual norms, [`corrector`] solves
//! cell problems and averages coefficients, [`twoscale`] builds the corrected
//! test function and the error functional, [`diagnostics`] measures energy
//! inequalities, and [`harness`] + [`cli`] orchestrate ε-sweeps and ensembles.

// Stencil and assembly loops read clearest with explicit indices.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]

pub mod cli;
pub mod config;
pub mod corrector;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod norms;
pub mod solver;
pub mod twoscale;

pub use error::{Error, Result};
