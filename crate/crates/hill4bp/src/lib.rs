//! Spatial Hill four-body approximation for the neighborhood of a Trojan.
//!
//! The model is a rotating Kepler problem with a quadratic tidal term whose
//! coefficients derive from the mass ratio `mu` of the two primaries pushed
//! to infinity. The crate computes the model's constants, Lagrange points,
//! Hill regions and symmetries, integrates the flow in the physical and the
//! Moser-regularized chart, and certifies by direct sampling the
//! transversality inequalities (`dH(X) > 0` on the bounded energy component,
//! `dQ(X) > 0` near the collision fiber) that make the bounded energy
//! hypersurfaces contact-type.
//!
//! All operations are pure functions over immutable value types; scans are
//! parallel over seeded sample batches with a deterministic merge, so a
//! fixed seed reproduces reports bit-for-bit at any thread count.

pub mod contact;
pub mod dd;
pub mod error;
pub mod flow;
pub mod hill_region;
pub mod lagrange;
pub mod model;
pub mod ode;
pub mod params;
pub mod regularization;
pub mod report;
pub mod state;
pub mod symmetry;

pub use error::{Error, Result};
pub use params::{derive_parameters, rotation_diagonalization_check, ParameterSet};
pub use state::{PhaseState, SphericalPoint, R_MIN};

pub use nalgebra;
