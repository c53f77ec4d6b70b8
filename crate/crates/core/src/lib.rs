//! Simulation and optimisation of dissipative state preparation in a Rydberg
//! aggregate coupled to a small laser-driven atomic reservoir.

pub mod analytic;
pub mod basis;
pub mod catalog;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod observables;
pub mod operator;
pub mod optimize;
pub mod sampling;

pub use basis::{BasisIndex, EnvLevel, SpaceSpec};
pub use dynamics::{DensityMatrix, Liouvillian};
pub use error::{Error, Result};
pub use model::{Geometry, LaserParams, Model, PhysConstants};
pub use operator::OperatorMatrix;
