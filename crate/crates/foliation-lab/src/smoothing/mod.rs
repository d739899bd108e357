//! Smoothing primitives: increasing functions (absolute, relative and in
//! families), planar embeddings and near-identity isotopies.

mod monotone;

pub use monotone::{
    check_collar_data, check_monotone, collar_mismatches, smooth_increasing, smooth_increasing_relative, C1Fn,
    CollarData, Mollified, MonotoneFunction, MonotoneReport, RelativeReport, RelativeSmoothing, SmoothIncreasing,
    CHECK_FACTOR,
};

mod family;

pub use family::{
    check_family, collar_cutoff, smooth_increasing_family, FamilyCollar, FamilyData, FamilyFn, FamilyReport,
    SampledFamily, SmoothFamily,
};

mod embedding;

pub use embedding::{
    certify_embedding, check_embedding_family, det, first_crossing, smooth_embedding_family, sup_distance,
    EmbeddingCertificate, EmbeddingCollar, EmbeddingData, EmbeddingFamilyReport, EmbeddingFn, FnMap, Identity,
    Jacobian, PLEmbedding2D, PlanarMap, Point, SliceMap, SliceReport, SmoothEmbeddingFamily, SplineMap,
};

mod isotopy;

pub use isotopy::{near_identity_isotopy, Isotopy, IsotopyReport, IsotopySlice};

mod tensor;

pub use tensor::{GridBoundary, GridMollifier, LineMollifier, TensorReport};
