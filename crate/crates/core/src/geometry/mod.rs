//! Mirror maps, Bregman divergences, feasible sets, and exact solvers for the
//! composite mirror step
//!
//! ```text
//! argmin_{x in X}  h(x) + <g, x - anchor> + D_psi(x, anchor) / eta
//! ```
//!
//! Only (mirror, domain, regularizer) triples with a closed-form or scalar
//! root solution are accepted; see [`ProxSolver::new`].

mod domain;
mod mirror;
mod prox;

pub use domain::Domain;
pub use mirror::{check_uniform_convexity, MirrorKind, MirrorMap, UniformConvexityReport};
pub use prox::{solve_prox, supported_triples, ProxProblem, ProxSolver, Triple};
