//! Numerical integration: Gauss rules on simplices, Duffy-type rules for the
//! singular kernel on touching pairs, and the complement weight of the
//! enclosing ball.

mod complement;
mod dd;
mod gauss;
mod singular;

pub use complement::complement_weight;
pub use gauss::{
    gauss_jacobi_01, gauss_legendre_01, gauss_simplex, gauss_simplex_cached, gl_cached, QuadRule,
    MAX_GAUSS_DEGREE,
};
pub use singular::{singular_pair_rule, PairQuadRule};
