//! Numerical potential theory on discretized subsets of ℝⁿ.
//!
//! The crate computes swept measures (balayage), equilibrium distributions,
//! and fractional Green kernels on grids approximating compact sets, by
//! solving nonnegativity-constrained quadratic programs over kernel energy
//! matrices. A measure ω off a set A is swept onto A by minimizing the
//! energy-norm distance to the cone of positive measures carried by A; the
//! minimizer's potential matches U^ω on A and is dominated by it elsewhere.
//!
//! Module map:
//!
//! * [`geometry`] — grids on spheres, balls, annuli, and boxes, plus
//!   refinement and nested families.
//! * [`kernels`] — Riesz kernels `|x−y|^{α−n}`, the reflection 2-Green
//!   kernel on a ball, and the fractional α-Green kernel built by exterior
//!   Riesz sweeping.
//! * [`measures`] — discrete positive measures, potentials, mutual energies,
//!   and energy (Gram) matrices.
//! * [`solver`] — the deterministic nonnegative quadratic program solver
//!   with KKT certification.
//! * [`sweep`] — the sweeping operators: balayage, equilibrium measures,
//!   Dirac sweeps, integral representation, symmetry verification,
//!   refinement sequences, and minimal-mass checks.
//! * [`green`] — the fractional-Green application: mass loss under
//!   α-Green sweeping and the Frostman restriction cross-check.
//! * [`config`] / [`runner`] — batch experiment configuration and CSV/
//!   diagnostics output, used by the `balayage` binary and the examples.
//!
//! Each major capability has a runnable example under `examples/`.

pub mod config;
pub mod geometry;
pub mod green;
pub mod kernels;
mod linalg;
pub mod measures;
pub mod runner;
pub mod solver;
pub mod sweep;

pub use geometry::{Cell, DiscretizedSet, Point, Shape};
pub use kernels::Kernel;
pub use measures::{DiscreteMeasure, GramMatrix};
pub use solver::{NnqpSolution, SolveOptions};
pub use sweep::{SweepOperator, SweepResult};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("kernel error: {0}")]
    Kernel(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid measure: {0}")]
    Measure(String),

    #[error("ill-conditioned discretization: Cholesky broke down at pivot {pivot} of {size} (cells too close for the self-energy rule)")]
    IllConditioned { size: usize, pivot: usize },

    #[error("solver did not converge in {iterations} iterations (min stationarity {min_stationarity:.3e}, complementarity {complementarity:.3e})")]
    NonConvergence {
        iterations: usize,
        min_stationarity: f64,
        complementarity: f64,
    },

    #[error("source measure is zero; sweeping requires a nonzero source")]
    ZeroSource,

    #[error("source support overlaps the target partially; it must lie entirely on or entirely off the target cells")]
    MixedOverlap,

    #[error("source point coincides with a target cell center")]
    SourceOnTarget,

    #[error("swept mass {swept:.6} exceeds the maximum-principle bound {bound:.6}")]
    MassBound { swept: f64, bound: f64 },

    #[error("witness is infeasible: potential falls {margin:.3e} below the source potential on the target")]
    InfeasibleWitness { margin: f64 },

    #[error("target sets are not nested: coarse cell centers must appear among fine ones")]
    NotNested,

    #[error("config error in field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
