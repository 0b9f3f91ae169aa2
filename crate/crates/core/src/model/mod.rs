//! Domain types shared by the engine, the archive and the matcher.

mod grid;
mod lifespan;

pub use grid::{
    cell_of, grid_side_length, min_cell_gap, neighbor_cell_envelope, offset_space, CellCoord,
    CellOffset, GridSpec, OffsetSpace, MAX_DIM,
};
pub use lifespan::{last_window, neighborship_lifespan, point_lifespan, Lifespan, WindowIndex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PointId = u64;

/// Arrival stamp. Tuple index for count-based windows, stream time for time-based ones.
pub type Stamp = i64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamPoint {
    pub id: PointId,
    pub t: Stamp,
    pub coords: Vec<f64>,
}

impl StreamPoint {
    pub fn new(id: PointId, t: Stamp, coords: Vec<f64>) -> Self {
        Self { id, t, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn distance_sq(&self, other: &StreamPoint) -> f64 {
        distance_sq(&self.coords, &other.coords)
    }
}

#[inline]
pub fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Count,
    Time,
}

/// Sliding window extent. Window `n` covers stamps in `(origin + n*slide, origin + n*slide + win]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub kind: WindowKind,
    pub win: i64,
    pub slide: i64,
}

impl WindowSpec {
    pub fn new(kind: WindowKind, win: i64, slide: i64) -> Result<Self> {
        let spec = Self { kind, win, slide };
        spec.validate()?;
        Ok(spec)
    }

    pub fn count(win: i64, slide: i64) -> Result<Self> {
        Self::new(WindowKind::Count, win, slide)
    }

    pub fn time(win: i64, slide: i64) -> Result<Self> {
        Self::new(WindowKind::Time, win, slide)
    }

    pub fn validate(&self) -> Result<()> {
        if self.slide <= 0 || self.slide > self.win {
            return Err(Error::InvalidParameter(format!(
                "window requires 0 < slide <= win (win={}, slide={})",
                self.win, self.slide
            )));
        }
        Ok(())
    }

    /// Number of slides needed to fill the first window.
    pub fn bootstrap_slides(&self) -> u64 {
        ((self.win + self.slide - 1) / self.slide) as u64
    }

    /// Largest lifespan any point can have.
    pub fn max_lifespan(&self) -> u32 {
        self.bootstrap_slides() as u32
    }
}

/// Density thresholds: `range_threshold` is the neighbor radius, `count_threshold`
/// the number of neighbors (self excluded) that makes a point core.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub range_threshold: f64,
    pub count_threshold: usize,
}

impl ClusterParams {
    pub fn new(range_threshold: f64, count_threshold: usize) -> Result<Self> {
        let p = Self {
            range_threshold,
            count_threshold,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range_threshold > 0.0 && self.range_threshold.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "range threshold must be positive and finite, got {}",
                self.range_threshold
            )));
        }
        if self.count_threshold < 1 {
            return Err(Error::InvalidParameter(
                "count threshold must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Core,
    Edge,
    Noise,
}
