//! Finite element solver for the Dirichlet eigenvalue problem of the integral
//! fractional Laplacian on intervals, squares, L-shaped domains and polygonal
//! approximations of the disk.
//!
//! The discrete problem is the Galerkin restriction of
//! `<u, v> = lambda (u, v)` to continuous piecewise linear functions vanishing
//! outside the domain, where `<., .>` is the full-space Gagliardo form scaled
//! by the normalization constant `C(n, s)`. Stiffness matrices carry three
//! contributions: element-pair interactions inside the domain (with
//! Jacobi-weighted Duffy rules on touching pairs), interactions with a
//! triangulated annulus covering the rest of the enclosing ball, and a
//! closed-form weight for the unbounded complement of that ball.
//!
//! The crate is organized along the pipeline:
//! [`kernel`] (closed-form constants and reference bounds), [`mesh`]
//! (nested simplicial meshes), [`quadrature`] (Gauss and singular pair rules),
//! [`assembly`] (stiffness/mass matrices), [`eigensolve`] (generalized
//! symmetric eigenpairs), [`convergence`] (refinement studies and order fits)
//! and [`oracle`] (slow adaptive integration used to validate assembly).

pub mod assembly;
pub mod convergence;
pub mod eigensolve;
pub mod kernel;
pub mod mesh;
pub mod oracle;
pub mod quadrature;

pub use assembly::{assemble_mass, assemble_stiffness, AssemblyParams, DofMap, SymmetricMatrix};
pub use convergence::{
    eigenfunction_error_series, fit_order, run_study, three_point_order, EigenfunctionErrorSeries,
    OrderFit, RefinementStudy, StudyParams,
};
pub use eigensolve::{
    fix_sign, rayleigh_quotient, residual_norm, solve_lowest, EigenPair, SolverMode, Spectrum,
};
pub use kernel::{
    chen_song_bounds, kwasnicki_estimate, normalization_constant, scale_eigenvalue, EigenBounds,
    FracOrder, KernelConstant,
};
pub use mesh::{Domain, Mesh, PairClass, PairTag, ShapeReport};
pub use quadrature::{complement_weight, gauss_simplex, singular_pair_rule, PairQuadRule, QuadRule};

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("fractional order s = {0} must lie in (0, 1)")]
    InvalidFracOrder(f64),
    #[error("unsupported spatial dimension n = {0}")]
    InvalidDimension(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("element {0} is degenerate")]
    DegenerateElement(usize),
    #[error("mesh has no interior degrees of freedom")]
    NoInteriorDofs,
    #[error("quadrature rule order {0} exceeds the supported maximum {1}")]
    UnsupportedQuadOrder(usize, usize),
    #[error("requested rule for disjoint pair; use a tensor Gauss rule instead")]
    DisjointPairRule,
    #[error("divergent singular integral: {0}")]
    DivergentIntegral(String),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("nonlinear fit did not converge; three-point fallback: alpha = {fallback_alpha}, lambda_ext = {fallback_lambda}")]
    FitDidNotConverge {
        fallback_alpha: f64,
        fallback_lambda: f64,
    },
    #[error("convergence stalled: {0}")]
    StalledConvergence(String),
    #[error("adaptive integration did not reach tolerance {0:.1e}")]
    OracleBudget(f64),
    #[error("mesh i/o: {0}")]
    MeshIo(String),
}

pub type Result<T> = std::result::Result<T, Error>;
