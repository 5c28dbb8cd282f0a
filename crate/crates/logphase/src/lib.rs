//! Numerical toolkit for logarithmic double phase functionals.
//!
//! The library evaluates the generalized N-function
//! `S(x,t) = a(x) t^p(x) + b(x) t^q(x) log^s(x)(1+t)` and the family of
//! functions built from it (linear splices, convex and Sobolev conjugates,
//! critical and subcritical growth densities), computes modulars and
//! Luxemburg norms of piecewise-linear functions on simplicial meshes,
//! stress-tests the sharp pointwise inequalities this machinery rests on,
//! and solves the model Dirichlet problem driven by the associated
//! divergence-form operator in the sublinear reaction regime.
//!
//! Everything is deterministic under a fixed seed; reports serialize to
//! JSON and field data to CSV. See the `book/` guide for a narrative tour.

pub mod config;
pub mod energy;
pub mod error;
pub mod expr;
pub mod inequality;
pub mod mesh;
pub mod modular;
pub mod phi;
pub mod problem;
pub mod quadrature;
pub mod report;
pub mod rootfind;
pub mod sobolev;

pub use error::{Error, Result};
pub use expr::{Point, ScalarField};
pub use problem::{exponent_summary, pick_epsilon, validate_hypotheses};
pub use problem::{DomainKind, ExponentSummary, ProblemData, Subcritical};
pub use report::{HypothesisEntry, HypothesisReport, InequalityReport};

// The book chapters double as doc-tests so the guide can never drift from
// the API. `cargo test --doc` compiles and runs every fenced snippet.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fields-and-hypotheses.md")]
    mod fields_and_hypotheses {}
    #[doc = include_str!("../../../book/src/phi-functions.md")]
    mod phi_functions {}
    #[doc = include_str!("../../../book/src/sobolev-conjugate.md")]
    mod sobolev_conjugate {}
    #[doc = include_str!("../../../book/src/modulars-and-norms.md")]
    mod modulars_and_norms {}
    #[doc = include_str!("../../../book/src/inequality-lab.md")]
    mod inequality_lab {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
}
