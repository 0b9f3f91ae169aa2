//! Skeletal grid summaries: the per-cluster unit that is emitted, archived and matched.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::model::{offset_space, CellCoord, CellOffset, CellStatus, GridSpec, OffsetSpace};

/// One skeletal grid cell with its connection indicators reduced to the offsets that are true.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgsCell {
    pub location: CellCoord,
    pub population: u32,
    pub status: CellStatus,
    /// Offsets (lexicographically sorted) of cells this cell is connected to. Always empty
    /// for edge cells.
    pub connections: Vec<CellOffset>,
}

/// Skeletal grid summary of one cluster at one resolution level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgsSummary {
    pub cluster_id: u64,
    pub level: u8,
    /// Coarsening factor between consecutive levels.
    pub rho: u32,
    /// Level-0 grid; cell side at this summary's level is `grid.side * rho^level`.
    pub grid: GridSpec,
    /// Cells sorted by location.
    pub cells: Vec<SgsCell>,
}

impl SgsSummary {
    pub fn dim(&self) -> usize {
        self.grid.d
    }

    pub fn side(&self) -> f64 {
        self.grid.side_at(self.level, self.rho)
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn volume(&self) -> usize {
        self.cells.len()
    }

    pub fn core_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| c.status == CellStatus::Core)
            .count()
    }

    pub fn total_population(&self) -> u64 {
        self.cells.iter().map(|c| c.population as u64).sum()
    }

    pub fn cell(&self, location: &[i32]) -> Option<&SgsCell> {
        self.cells
            .binary_search_by(|c| c.location.as_slice().cmp(location))
            .ok()
            .map(|i| &self.cells[i])
    }

    /// Index space of connection offsets at this summary's level.
    pub fn connection_space(&self) -> Arc<OffsetSpace> {
        offset_space(self.grid.d, self.level, self.rho)
    }

    /// Sort cells by location and connection lists lexicographically.
    pub fn normalize(&mut self) {
        for c in &mut self.cells {
            c.connections.sort();
        }
        self.cells.sort_by(|a, b| a.location.cmp(&b.location));
    }

    /// Copy with every cell location shifted by `by`.
    pub fn shifted(&self, by: &[i32]) -> SgsSummary {
        let mut s = self.clone();
        for c in &mut s.cells {
            c.location = c.location.offset(by);
        }
        s
    }

    /// Per-axis inclusive min/max of cell locations, `None` if empty.
    pub fn location_bounds(&self) -> Option<(Vec<i32>, Vec<i32>)> {
        let first = self.cells.first()?;
        let mut lo = first.location.0.clone();
        let mut hi = lo.clone();
        for c in &self.cells[1..] {
            for (axis, &x) in c.location.0.iter().enumerate() {
                lo[axis] = lo[axis].min(x);
                hi[axis] = hi[axis].max(x);
            }
        }
        Some((lo, hi))
    }
}
