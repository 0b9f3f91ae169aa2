//! Multi-resolution compression of skeletal summaries and budget-driven level selection.
//!
//! Level `L + 1` merges every `ρ^d` block of level-`L` cells (aligned to the global grid)
//! into one cell. Higher levels are coarser.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::model::{offset_space, CellCoord, CellStatus};
use crate::sgs::{SgsCell, SgsSummary};

/// Encoded size of one cell at a level: `i32` per axis, `u32` population, one status
/// byte and a bitmask over the level's connection space.
pub fn cell_bytes(d: usize, level: u8, rho: u32) -> u64 {
    let bits = offset_space(d, level, rho).len() as u64;
    4 * d as u64 + 4 + 1 + bits.div_ceil(8)
}

/// One round of coarsening.
pub fn compress(s: &SgsSummary) -> SgsSummary {
    let rho = s.rho;
    let mut parents: BTreeMap<CellCoord, (u32, bool)> = BTreeMap::new();
    let mut links: BTreeSet<(CellCoord, CellCoord)> = BTreeSet::new();
    for c in &s.cells {
        let p = c.location.parent(rho, 1);
        for o in &c.connections {
            let q = c.location.offset(&o.0).parent(rho, 1);
            if q != p {
                links.insert((p.clone(), q.clone()));
                links.insert((q, p.clone()));
            }
        }
        let e = parents.entry(p).or_insert((0, false));
        e.0 += c.population;
        e.1 |= c.status == CellStatus::Core;
    }
    let mut cells: Vec<SgsCell> = parents
        .iter()
        .map(|(loc, &(population, core))| SgsCell {
            location: loc.clone(),
            population,
            status: if core {
                CellStatus::Core
            } else {
                CellStatus::Edge
            },
            connections: Vec::new(),
        })
        .collect();
    for (p, q) in links {
        let Ok(i) = cells.binary_search_by(|c| c.location.cmp(&p)) else {
            continue;
        };
        // links may point at a parent holding no child of this summary; a connection
        // needs both ends present
        if cells[i].status == CellStatus::Core && parents.contains_key(&q) {
            cells[i].connections.push(q.diff(&p));
        }
    }
    let mut out = SgsSummary {
        cluster_id: s.cluster_id,
        level: s.level + 1,
        rho,
        grid: s.grid.clone(),
        cells,
    };
    out.normalize();
    out
}

/// Coarsen to `level`. Errors if `level` is finer than the summary.
pub fn compress_to(s: &SgsSummary, level: u8) -> Result<SgsSummary> {
    if level < s.level {
        return Err(Error::LevelMismatch(s.level, level));
    }
    let mut cur = s.clone();
    while cur.level < level {
        cur = compress(&cur);
    }
    Ok(cur)
}

/// `(cell_count, bytes)` of the summary coarsened to `target_level`.
pub fn resolution_cost(s: &SgsSummary, target_level: u8) -> Result<(u64, u64)> {
    if target_level < s.level {
        return Err(Error::LevelMismatch(s.level, target_level));
    }
    let rounds = (target_level - s.level) as u32;
    let count = s
        .cells
        .iter()
        .map(|c| c.location.parent(s.rho, rounds))
        .collect::<HashSet<_>>()
        .len() as u64;
    Ok((count, count * cell_bytes(s.dim(), target_level, s.rho)))
}

/// Finest level in `s.level..=max_level` whose encoded cells fit into `budget_bytes`.
pub fn select_resolution(s: &SgsSummary, budget_bytes: u64, max_level: u8) -> Result<u8> {
    if budget_bytes == 0 {
        return Err(Error::InvalidParameter(
            "byte budget must be positive".into(),
        ));
    }
    let mut needed = 0;
    for level in s.level..=max_level.max(s.level) {
        let (_, bytes) = resolution_cost(s, level)?;
        if bytes <= budget_bytes {
            return Ok(level);
        }
        needed = bytes;
    }
    Err(Error::BudgetExceeded {
        budget: budget_bytes,
        max_level,
        needed,
    })
}
