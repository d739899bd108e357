//! Numerical laboratory for foliations, contact structures and Liouville
//! structures on model 3-manifolds.
//!
//! The crate is organised by capability:
//!
//! * [`fields`]: differential forms sampled on product grids, exterior
//!   calculus, plane fields and their transport by flows.
//! * [`smoothing`]: monotone smoothing of increasing functions, relative and
//!   family versions, smoothing of planar embeddings and near-identity isotopies.
//! * [`foliated`]: clean covers of model surfaces, graphical interpolation and
//!   the 2D smoothing pipeline for (bi)foliated homeomorphisms.
//! * [`anosov`]: suspension Anosov flows, defining pairs, bicontact structures
//!   and linear Liouville pairs.
//! * [`contact`]: contact-sign certification, standard neighbourhood forms,
//!   ribbon holonomy, pull-down profiles and parallel transport.
//! * [`liouville`]: pre-Liouville checks, thickenings, boundary straightening
//!   and path certification.
//! * [`suite`]: configuration, suite orchestration and reports.
//!
//! Runnable walkthroughs live in `examples/`; see the README for the list.

pub mod anosov;
pub mod contact;
pub mod error;
pub mod fields;
pub mod foliated;
pub mod liouville;
pub mod numeric;
pub mod smoothing;
pub mod suite;

pub use error::{LabError, Result};
