//! Simulation and verification toolkit for expansive curvature flows.
//!
//! Closed curves in the plane and closed surfaces in space move outward with
//! normal velocity `1/F(λ)`, where `F` is a positive symmetric function of the
//! principal curvatures, increasing in each of them. The crate provides
//!
//! * a catalog of speed functions and sampled admissibility checks ([`speeds`]),
//! * exact treatment of round spheres and the ancientness criterion ([`sphere_ode`]),
//! * discrete curves and triangle meshes with curvature estimation ([`hypersurface`]),
//! * an explicit flow integrator with trajectory bookkeeping ([`flow`]),
//! * Alexandrov reflection predicates and audits ([`reflection`], [`rigidity`]),
//! * a configuration-driven runner used by the `expflow` binary ([`cli`]).

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod families;
pub mod flow;
pub mod hypersurface;
pub mod quadrature;
pub mod reflection;
pub mod rigidity;
pub mod speeds;
pub mod sphere_ode;

pub use error::{Error, Result};
pub use hypersurface::{Hypersurface, Point};
pub use speeds::{CurvatureVector, SpeedFunction};
