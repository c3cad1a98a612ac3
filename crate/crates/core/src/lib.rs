//! Numerical verification of Bochner- and Reilly-type identities for the
//! divergence-form operator `L_A u = div(A∇u)`, together with finite-element
//! spectra and first-eigenvalue lower bounds on a catalog of test manifolds.

pub mod boundary;
pub mod bounds;
pub mod geometry;
pub mod identities;
pub mod jets;
pub mod sampling;
pub mod spectral;
pub mod suite;
pub mod zoo;

pub use geometry::{
    BoundarySpec, Chart, ChartManifold, EndomorphismField, FieldRole, GeometryError, PointFrame, ScalarJetField, Slot,
    StructureFlags, TensorDerivatives, TensorJet,
};
pub use jets::{ChartFn, DomainError, EvalError, Jet3};
pub use zoo::{BoundaryCondition, CatalogEntry, Topology};
