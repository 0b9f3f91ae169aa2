//! Density-based clustering over sliding windows with skeletal grid summaries,
//! multi-resolution compression, a pattern archive and cluster matching.

pub mod driver;
pub mod engine;
pub mod error;
pub mod matcher;
pub mod model;
pub mod multires;
pub mod oracle;
pub mod pattern_base;
pub mod sgs;
pub mod synth;
pub mod verify;

pub use driver::{OutOfOrderPolicy, WindowDriver, WindowOutput};
pub use engine::{ClusterOutput, Engine, EngineConfig, EngineStats};
pub use error::{Error, Result};
pub use matcher::{execute_match, exhaustive_match, MatchQuery, MatchResult};
pub use model::{
    CellCoord, CellOffset, CellStatus, ClusterParams, GridSpec, Lifespan, PointId, Stamp,
    StreamPoint, WindowIndex, WindowKind, WindowSpec,
};
pub use pattern_base::{
    ArchivePolicy, BaseConfig, FeatureVector, Mbr, PatternBase, PatternRecord, Resolution,
    Selection,
};
pub use sgs::{SgsCell, SgsSummary};
