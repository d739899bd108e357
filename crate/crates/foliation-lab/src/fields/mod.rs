//! Discrete exterior calculus on model manifolds.

pub mod deriv;
pub mod form;
pub mod grid;
pub mod identities;
pub mod io;
pub mod plane;

pub use form::{basis, coframe, FormField, LineField, DEGENERACY_TOL};
pub use identities::{operator_identities, IdentityLevel, IdentityReport};
pub use grid::{Axis, AxisKind, ManifoldKind, MappingTorusData, ModelManifold};
pub use plane::{
    covector_angle, flow_pushforward, flow_pushforward_plane, plane_field_angle, CovectorField, Flow,
    FnCovector, PlaneField, TranslationFlow,
};
