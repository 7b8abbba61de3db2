//! Simulation engine for the polarization-maximization opinion model.
//!
//! `N` vector-valued agents in `R^D` evolve in discrete time: at every epoch
//! each agent picks the single "friend" whose adoption maximizes the group
//! polarization functional and moves a step `dt` toward it. Because the
//! friend objective is linear in the candidate position, the search can be
//! restricted to the vertices of the convex hull, which is what makes runs
//! with 10^5..10^6 agents practical. A subsampled (stochastic) solver
//! estimates the steering vector from `S <= N` agents per step.
//!
//! Module layout:
//! - [`geometry`]: point sets, convex hulls, containment tests
//! - [`model`]: metric family, polarization functionals, steering vectors,
//!   friend selection
//! - [`dynamics`]: deterministic and stochastic epoch steppers, run drivers,
//!   communication records
//! - [`init`]: reproducible random initial conditions
//! - [`analysis`]: attractor extraction, reconstruction error, histograms,
//!   communication block structure

pub mod analysis;
pub mod dynamics;
mod error;
pub mod geometry;
pub mod init;
pub mod model;
pub mod seeding;
mod vecmath;

pub use error::{Error, Result};
