//! Finite-volume solver and linear-stability toolkit for a thin liquid film
//! carrying a soluble surfactant.
//!
//! Unknowns per cell are the film height `h`, the bulk surfactant content
//! `m = h·C₀/β` and the surface concentration `Γ`. See the README for the
//! equations, the discretization and the command-line interface.

pub mod cli;
pub mod diagnostics;
pub mod discretize;
pub mod eigen;
pub mod error;
pub mod integrate;
pub mod linstab;
pub mod model;
pub mod par;
pub mod quadrature;
pub mod tridiag;

pub use error::{Error, Field, Result};
pub use integrate::{run, step, HaltReason, IntegratorConfig, RunOutcome, RunTrace, Scheme};
pub use model::{Grid, Params, State, SurfaceTensionLaw};
