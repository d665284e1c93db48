//! Analysis toolkit for a DC-DC boost converter under sliding-mode control
//! with a washout filter, modelled as a three-dimensional piecewise-smooth
//! (Filippov) system.
//!
//! The crate provides:
//!
//! - the dimensionless converter model and its two smooth vector fields
//!   ([`model`]),
//! - the Filippov convention on the switching manifold: region
//!   classification, Lie derivatives and the sliding vector field
//!   ([`filippov`]),
//! - closed-form tangency and equilibrium analysis: cusp, two-fold and
//!   pseudo-equilibrium classification ([`singularities`]),
//! - an event-driven integrator that flows the smooth fields, detects
//!   manifold crossings and slides on the attracting part of the manifold
//!   ([`integrator`]),
//! - Hopf threshold, unstable limit cycle continuation, homoclinic
//!   connection detection and assembly of the two-parameter bifurcation set
//!   ([`bifurcation`]),
//! - manifest/config plumbing for the `fb` command-line tool ([`cli`]).

pub mod bifurcation;
pub mod cli;
pub mod error;
pub mod filippov;
pub mod integrator;
pub mod model;
mod ode;
pub mod singularities;

pub use error::{Error, Result};
pub use model::{Params, PhysicalParams, State};
