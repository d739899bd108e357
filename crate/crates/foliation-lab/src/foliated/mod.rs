//! The two-dimensional smoothing of foliated and bifoliated homeomorphisms
//! of the torus over a clean cover, and the graphical interpolation kernel.

mod cover;
mod foliation;
mod interpolation;
mod pipeline;

pub use cover::{
    build_clean_cover, face_distance, Chart, CleanCover2D, CoverReport, CoverShape, Profile, Simplex, ADAPTED_RADIUS, J2,
};
pub use foliation::{Axis, FoliatedHomeo2D, Foliation2D, P2};
pub use interpolation::{
    check_interpolation, graphical_interpolation, random_profile_pair, Cutoff, GraphicalInterpolation,
    InterpolationReport, CUTOFF_SLOPE,
};
pub use pipeline::{
    smooth_bifoliated_homeo_2d, smooth_foliated_homeo_2d, smooth_foliated_homeo_2d_with, Auxiliary, FoliatedOptions,
    FoliatedReport, IsotopyStation, SmoothedHomeo2D, StageReport,
};
