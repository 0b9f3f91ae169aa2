//! Archive of cluster summaries with locational and feature indices.

pub mod codec;
mod feature_grid;
mod policy;
mod record;
mod rtree;
mod store;

pub use feature_grid::{FeatureGrid, Interval};
pub use policy::{sample_draw, ArchivePolicy, Resolution, Selection};
pub use record::{feature_vector, FeatureVector, Mbr, PatternRecord};
pub use rtree::RTree;
pub use store::{BaseConfig, PatternBase, FORMAT_VERSION, MANIFEST, RECORDS_DIR};
