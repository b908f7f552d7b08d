//! # fanolab
//!
//! A numerical laboratory for finite-energy pluripotential theory on
//! symmetry-reduced Fano model spaces. The crate computes the energy and
//! entropy functionals of Kähler geometry (E, I, J, E*, L, Ding, Mabuchi),
//! solves the Kähler-Einstein equation on two model geometries, runs Ricci
//! iteration and the normalized Kähler-Ricci flow, and property-tests the
//! inequality apparatus (quasi-triangle recursion, Pinsker, Hölder-Young,
//! entropy-energy and Moser-Trudinger transfer) at desk scale.
//!
//! The two model spaces are the radial two-cone-point sphere (convex
//! functions of one log coordinate with cone parameters beta0, beta_inf) and
//! the torus-invariant product surface (convex functions on a square). Both
//! make every functional exactly computable: potentials are piecewise linear,
//! Monge-Ampère measures are slope jumps or gradient-polygon areas, and the
//! pairings close the discrete integration by parts so the classical
//! identities hold to roundoff.
//!
//! See the guide in `book/` for the conceptual tour; its code snippets are
//! doctested from [`guide`].
//!
//! ```
//! use fanolab::model::ModelSpace;
//! use fanolab::solver::{ke_solve, Gauge, SolverConfig};
//!
//! // the round sphere is its own Kähler-Einstein metric
//! let model = ModelSpace::radial(1.0, 1.0, 8.0, 64)?;
//! let (phi, residual) = ke_solve(&model, &SolverConfig::default(), Gauge::None)?;
//! assert!(residual < 1e-9);
//! assert!(phi.values.iter().all(|v| v.abs() < 1e-9));
//! # Ok::<(), fanolab::error::Error>(())
//! ```

pub mod cli;
pub mod convex;
pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod lab;
pub mod model;
pub mod orlicz;
pub mod report;
pub mod sampling;
pub mod solver;
pub mod wedge2d;

pub use error::{Error, Result};
pub use grid::{Grid, GridMeasure, Potential};
pub use model::ModelSpace;

/// The book chapters, doctested. Each module's documentation is one chapter
/// of the mdbook guide; `cargo test --doc` runs every fenced code block.
pub mod guide {
    #[doc = include_str!("../../../book/src/model-spaces.md")]
    pub mod model_spaces {}
    #[doc = include_str!("../../../book/src/functionals.md")]
    pub mod functionals {}
    #[doc = include_str!("../../../book/src/solving-ke.md")]
    pub mod solving_ke {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    pub mod dynamics {}
    #[doc = include_str!("../../../book/src/inequalities.md")]
    pub mod inequalities {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
