//! Crouzeix–Raviart and lowest-order Raviart–Thomas finite elements for general
//! second-order linear elliptic problems
//!
//! ```text
//!     -div(A grad u + u b) + gamma u = f   in Omega,     u = u_D on the boundary,
//! ```
//!
//! which may be indefinite and non-selfadjoint. The mixed solution is computed
//! two ways: by a direct saddle-point solve, and by a closed-form reconstruction
//! from a modified nonconforming solve. A residual estimator drives adaptive
//! red-green-blue refinement.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, CSV output and the
//! command line live in the `afem` crate.

#![no_std]

extern crate alloc;

pub mod adapt;
pub mod assembly;
pub mod bench;
pub mod error;
pub mod geom;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use geom::{Mat2, Point, Vec2};
pub use mesh::Triangulation;

/// Convenient re-exports
pub mod prelude {
    pub use crate::adapt::{
        adaptive_loop, adaptive_loop_with, average_cr, dorfler_mark, estimate_mixed, estimate_nc,
        EstimatorReport, LevelState, LoopConfig, MarkedSet, RefinementMode,
    };
    pub use crate::assembly::{
        apply_dirichlet, assemble_mixed_direct, assemble_modified_ncfem, assemble_ncfem,
        CrSolution, MixedSolution, NcCoefficients, SparseSystem, SystemKind,
    };
    pub use crate::bench::{
        convergence_rate, error_norms, ConvergenceHistory, ErrorNorms, LevelDiagnostics, LevelRecord,
        SingularEvent,
    };
    pub use crate::error::{Error, Result};
    pub use crate::geom::{Mat2, Point, Vec2};
    pub use crate::mesh::{build_mesh, rgb_refine, uniform_red_refine, BoundarySegment, Triangulation};
    pub use crate::problem::{
        benchmark, project_p0, s_of_t, Benchmark, CallbackField, CoefficientField, ExactSolution,
        PiecewiseData, ProblemInstance,
    };
    pub use crate::solver::{
        equivalence_residual, solve_mixed_direct, solve_mixed_via_equivalence, solve_ncfem,
        solve_sparse, LinearSolveReport, SolverConfig,
    };
}
