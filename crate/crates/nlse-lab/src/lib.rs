//! Numerical laboratory for generalized (non)linear quantum mechanics on
//! periodic grids.
//!
//! The crate integrates a unified family of nonlinear Schrödinger equations
//! built from density/current ratio functionals and a logarithmic term,
//! implements nonlinear gauge transformations of the third kind and the
//! observables of a position-measurement-based quantum framework (effects,
//! velocity-cone momentum, mixtures), and certifies or refutes numerical
//! equivalence between nonlinear models and linear quantum mechanics —
//! including the two-particle signaling experiment for entangled states.
//!
//! Entry points:
//! - [`field`]: grids, wavefunctions, densities, currents, Born probabilities.
//! - [`functionals`]: the ratio functionals R1..R5 and the logarithmic term.
//! - [`gauge`]: nonlinear gauge maps, generalized projections, equivalence checks.
//! - [`dynamics`]: split-step propagation of the linear and nonlinear equations.
//! - [`observables`]: effects, mixtures, density matrices, momentum measures,
//!   and the two-particle signaling experiment.
//! - [`experiment`]: declarative experiment runner behind the CLI.
//!
//! The `examples/` directory contains one runnable example per capability;
//! `nlse-lab verify` runs the bundled acceptance suite.

pub mod acceptance;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod field;
pub mod functionals;
pub mod gauge;
pub mod grid;
pub mod observables;
pub mod spectral;

pub use error::{NlseError, Result};
pub use field::Wavefunction;
pub use grid::{Grid, Region};
