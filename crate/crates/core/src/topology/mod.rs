//! Line-field topology of the Cauchy-Green tensor.

mod delaunay;
pub mod index;
pub mod singularities;

pub use delaunay::delaunay_edges;
pub use index::{
    census_enclosed, line_field_index, vector_field_index, Census, ClosedPolygon, HalfInteger, IndexError,
    PolygonError,
};
pub use singularities::{
    classification_radius, classify_all, classify_singularity, locate_singularities, nearest_neighbors, pair_wedges,
    select_isolated, singularity_residual, zero_level_segments, Classification, ClassifyError, Singularity,
    SingularityType, WedgePair, CLASSIFICATION_SAMPLES,
};
