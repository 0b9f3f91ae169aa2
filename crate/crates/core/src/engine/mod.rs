//! Integrated cluster extraction and skeletal-grid summarization over sliding windows.
//!
//! Every live point, cell status and cell connection carries the last window in which it
//! is known to hold. Those bounds are fixed or extended only when a point arrives, so a
//! window advance never looks at neighborships: it pops expired points, and everything
//! whose bound passed simply stops counting.
//!
//! Per arriving point `x` with neighbors `N(x)` (one range query):
//!
//! * `x` is core through the `θc`-th largest neighborship bound, capped by its own.
//! * Each `q ∈ N(x)` gains `x` for its whole remaining life. If that pushes `q`'s core
//!   bound, the new bound is recomputed from `q`'s non-core-career list (the `< θc`
//!   neighbors that outlive its old core career) plus `x`.
//! * Cell core bounds are maxima of resident core bounds. A connection between cells
//!   lives as long as its best pair of mutually-neighboring core points; an attachment
//!   of a cell to a core cell as long as its best (point, core point) neighbor pair.
//!   Only pairs involving `x` or a point whose core bound moved can change, and the
//!   latter are exactly the non-core-career partners of that point.

mod career;

pub use career::{core_lifespan, edge_lifespan, CareerList};

use std::cell::Cell;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    distance_sq, last_window, offset_space, CellCoord, CellOffset, CellStatus, ClusterParams,
    GridSpec, Lifespan, OffsetSpace, PointId, Stamp, StreamPoint, WindowIndex, WindowSpec,
};
use crate::sgs::{SgsCell, SgsSummary};

/// Bound used for "never core".
const NEVER: WindowIndex = -1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub window: WindowSpec,
    pub params: ClusterParams,
    pub grid: GridSpec,
    /// Window 0 covers `(origin, origin + win]`.
    pub origin: Stamp,
    /// Coarsening factor stamped onto emitted summaries.
    pub rho: u32,
}

impl EngineConfig {
    pub fn new(window: WindowSpec, params: ClusterParams, d: usize) -> Result<Self> {
        let grid = GridSpec::new(&params, d)?;
        let cfg = Self {
            window,
            params,
            grid,
            origin: 0,
            rho: 3,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        self.params.validate()?;
        let expected = crate::model::grid_side_length(&self.params, self.grid.d)?;
        if ((self.grid.side - expected) / expected).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "grid side {} does not match range threshold (expected {expected})",
                self.grid.side
            )));
        }
        if self.grid.origin.len() != self.grid.d {
            return Err(Error::DimensionMismatch {
                expected: self.grid.d,
                actual: self.grid.origin.len(),
            });
        }
        if self.rho < 2 {
            return Err(Error::InvalidParameter("rho must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct PointEntry {
    point: StreamPoint,
    cell: CellCoord,
    until: WindowIndex,
    core_until: WindowIndex,
    career: CareerList,
}

/// A grid cell with lifespan indicators. Connection and attachment keys index the
/// engine's search offset space.
#[derive(Debug, Clone)]
pub struct SkeletalCell {
    location: CellCoord,
    points: VecDeque<PointId>,
    core_until: WindowIndex,
    /// Core-core connections, stored on both cells.
    connections: Vec<(u32, WindowIndex)>,
    /// Cells attached to this one (as seen from this core cell).
    attachments: Vec<(u32, WindowIndex)>,
}

impl SkeletalCell {
    fn new(location: CellCoord) -> Self {
        Self {
            location,
            points: VecDeque::new(),
            core_until: NEVER,
            connections: Vec::new(),
            attachments: Vec::new(),
        }
    }
}

fn raise(list: &mut Vec<(u32, WindowIndex)>, key: u32, until: WindowIndex) {
    match list.iter_mut().find(|(k, _)| *k == key) {
        Some((_, u)) => *u = (*u).max(until),
        None => list.push((key, until)),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineStats {
    pub points_ingested: u64,
    pub range_queries: u64,
    pub distance_computations: u64,
    pub windows_emitted: u64,
    /// Calls to `advance_window`.
    pub advances: u64,
    pub points_expired: u64,
    /// Range queries and distance computations performed inside `advance_window`.
    pub advance_range_queries: u64,
    pub advance_distance_computations: u64,
}

/// One cluster of one window in full and summarized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutput {
    /// Smallest member point id.
    pub cluster_id: PointId,
    pub window_index: WindowIndex,
    pub sgs: SgsSummary,
    /// All member ids, ascending.
    pub members: Vec<PointId>,
    /// Core member ids, ascending.
    pub core_members: Vec<PointId>,
}

impl ClusterOutput {
    pub fn edge_members(&self) -> Vec<PointId> {
        let core: HashSet<_> = self.core_members.iter().collect();
        self.members
            .iter()
            .copied()
            .filter(|id| !core.contains(id))
            .collect()
    }
}

/// Cluster extraction + summarization state for one stream.
#[derive(Debug)]
pub struct Engine {
    config: EngineConfig,
    search: OffsetSpace,
    envelope: Arc<OffsetSpace>,
    now: WindowIndex,
    slides_ingested: u64,
    filled: bool,
    last_t: Option<Stamp>,
    cells: HashMap<CellCoord, SkeletalCell>,
    points: HashMap<PointId, PointEntry>,
    arrivals: VecDeque<PointId>,
    stats: EngineStats,
    range_queries: Cell<u64>,
    distances: Cell<u64>,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        let search = OffsetSpace::search(config.grid.d);
        let envelope = offset_space(config.grid.d, 0, config.rho);
        Ok(Self {
            config,
            search,
            envelope,
            now: 0,
            slides_ingested: 0,
            filled: false,
            last_t: None,
            cells: HashMap::new(),
            points: HashMap::new(),
            arrivals: VecDeque::new(),
            stats: EngineStats::default(),
            range_queries: Cell::new(0),
            distances: Cell::new(0),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn window_index(&self) -> WindowIndex {
        self.now
    }

    /// Exclusive start stamp of the current window.
    pub fn window_start(&self) -> Stamp {
        self.config.origin + self.now * self.config.window.slide
    }

    /// Whether the first window has been completely ingested.
    pub fn is_filled(&self) -> bool {
        self.filled
    }

    pub fn stats(&self) -> EngineStats {
        EngineStats {
            range_queries: self.range_queries.get(),
            distance_computations: self.distances.get(),
            ..self.stats
        }
    }

    pub fn live_point_count(&self) -> usize {
        self.points.len()
    }

    pub fn live_points(&self) -> impl Iterator<Item = &StreamPoint> {
        self.arrivals.iter().map(|id| &self.points[id].point)
    }

    /// Stamp interval `(lo, hi]` the next `ingest_slide` batch must fall in.
    pub fn fresh_interval(&self) -> (Stamp, Stamp) {
        let w = &self.config.window;
        let o = self.config.origin;
        if self.filled {
            let lo = o + self.now * w.slide + w.win;
            (lo, lo + w.slide)
        } else {
            let k = self.slides_ingested as i64;
            (o + k * w.slide, o + ((k + 1) * w.slide).min(w.win))
        }
    }

    /// Advance to the next window (after the first fill), insert the batch in arrival
    /// order and emit the window's clusters. Returns `None` while the first window is
    /// still filling.
    pub fn ingest_slide(&mut self, batch: Vec<StreamPoint>) -> Result<Option<Vec<ClusterOutput>>> {
        let (lo, hi) = self.fresh_interval();
        let mut last = self.last_t;
        let mut seen = HashSet::with_capacity(batch.len());
        for p in &batch {
            if p.t <= lo || p.t > hi {
                return Err(Error::OutsideWindow {
                    id: p.id,
                    t: p.t,
                    lo,
                    hi,
                });
            }
            if let Some(l) = last {
                if p.t < l {
                    return Err(Error::OutOfOrder {
                        id: p.id,
                        t: p.t,
                        last: l,
                    });
                }
            }
            last = Some(p.t);
            if p.dim() != self.config.grid.d {
                return Err(Error::DimensionMismatch {
                    expected: self.config.grid.d,
                    actual: p.dim(),
                });
            }
            if !seen.insert(p.id) || self.points.contains_key(&p.id) {
                return Err(Error::DuplicateId(p.id));
            }
        }
        if self.filled {
            self.advance_window();
        }
        for p in batch {
            self.insert(p)?;
        }
        self.slides_ingested += 1;
        if !self.filled {
            if self.slides_ingested < self.config.window.bootstrap_slides() {
                return Ok(None);
            }
            self.filled = true;
        }
        Ok(Some(self.emit_clusters()))
    }

    /// Live points within the range threshold of `p` (excluding `p` itself).
    pub fn range_query(&self, p: &StreamPoint) -> Result<Vec<PointId>> {
        let cell = self.config.grid.cell_of(&p.coords)?;
        Ok(self.neighbors(&p.coords, &cell, p.id))
    }

    fn neighbors(&self, coords: &[f64], cell: &CellCoord, exclude: PointId) -> Vec<PointId> {
        self.range_queries.set(self.range_queries.get() + 1);
        let r2 = self.config.params.range_threshold * self.config.params.range_threshold;
        let mut out = Vec::new();
        let mut computed = 0u64;
        let mut key = cell.0.clone();
        let mut scan = |c: &SkeletalCell| {
            for id in &c.points {
                if *id == exclude {
                    continue;
                }
                computed += 1;
                if distance_sq(coords, &self.points[id].point.coords) <= r2 {
                    out.push(*id);
                }
            }
        };
        if let Some(c) = self.cells.get(cell.as_slice()) {
            scan(c);
        }
        for o in self.search.offsets() {
            for (k, (base, off)) in key.iter_mut().zip(cell.0.iter().zip(&o.0)) {
                *k = base + off;
            }
            if let Some(c) = self.cells.get(key.as_slice()) {
                scan(c);
            }
        }
        self.distances.set(self.distances.get() + computed);
        out
    }

    fn check_point(&self, p: &StreamPoint) -> Result<()> {
        if p.dim() != self.config.grid.d {
            return Err(Error::DimensionMismatch {
                expected: self.config.grid.d,
                actual: p.dim(),
            });
        }
        if self.points.contains_key(&p.id) {
            return Err(Error::DuplicateId(p.id));
        }
        if let Some(last) = self.last_t {
            if p.t < last {
                return Err(Error::OutOfOrder {
                    id: p.id,
                    t: p.t,
                    last,
                });
            }
        }
        let lo = self.window_start();
        let hi = lo + self.config.window.win;
        if p.t <= lo || p.t > hi {
            return Err(Error::OutsideWindow {
                id: p.id,
                t: p.t,
                lo,
                hi,
            });
        }
        Ok(())
    }

    fn offset_index(&self, from: &CellCoord, to: &CellCoord) -> u32 {
        let o = to.diff(from);
        self.search
            .index_of(&o.0)
            .unwrap_or_else(|| panic!("neighbor cell offset {o:?} outside search envelope"))
            as u32
    }

    fn link_connection(&mut self, a: &CellCoord, b: &CellCoord, until: WindowIndex) {
        let o = self.offset_index(a, b);
        let back = self.search.neg_index(o as usize) as u32;
        raise(&mut self.cells.get_mut(a).unwrap().connections, o, until);
        raise(&mut self.cells.get_mut(b).unwrap().connections, back, until);
    }

    fn link_attachment(&mut self, core: &CellCoord, attached: &CellCoord, until: WindowIndex) {
        let o = self.offset_index(core, attached);
        raise(&mut self.cells.get_mut(core).unwrap().attachments, o, until);
    }

    /// Insert one point of the current window: one range query, then career, status,
    /// connection and attachment maintenance.
    pub fn insert(&mut self, p: StreamPoint) -> Result<()> {
        self.check_point(&p)?;
        let now = self.now;
        let k = self.config.params.count_threshold;
        let id = p.id;
        let until = last_window(p.t, self.config.origin, self.config.window.slide);
        let cell = self.config.grid.cell_of(&p.coords)?;
        let neighbors = self.neighbors(&p.coords, &cell, id);

        // the new point outlives nobody, so each neighborship lasts as long as the neighbor
        let x_core = career::kth_largest(neighbors.iter().map(|q| self.points[q].until), k)
            .map_or(NEVER, |u| u.min(until));
        let mut x_career = CareerList::new(now);
        for q in &neighbors {
            let u = self.points[q].until;
            if u > x_core {
                x_career.push(*q, u);
            }
        }

        // neighbors whose core career the new point extends, with their partners from
        // before the extension
        let mut extended: Vec<(PointId, Vec<(PointId, WindowIndex)>)> = Vec::new();
        for &q in &neighbors {
            let e = self.points.get_mut(&q).unwrap();
            let nb = e.until;
            if nb <= e.core_until {
                continue;
            }
            e.career.prune(now);
            let partners: Vec<_> = e.career.live(now).collect();
            if partners.len() + 1 >= k {
                let new_core =
                    career::kth_largest(partners.iter().map(|&(_, u)| u).chain([nb]), k).unwrap();
                debug_assert!(new_core > e.core_until);
                e.core_until = new_core;
                e.career.drop_through(new_core);
                extended.push((q, partners));
            }
            if nb > e.core_until {
                e.career.push(id, nb);
            }
        }

        let slot = self
            .cells
            .entry(cell.clone())
            .or_insert_with(|| SkeletalCell::new(cell.clone()));
        slot.points.push_back(id);
        slot.core_until = slot.core_until.max(x_core);
        self.points.insert(
            id,
            PointEntry {
                point: p,
                cell: cell.clone(),
                until,
                core_until: x_core,
                career: x_career,
            },
        );
        self.arrivals.push_back(id);
        self.last_t = Some(self.points[&id].point.t);
        for (q, _) in &extended {
            let e = &self.points[q];
            let c = self.cells.get_mut(&e.cell).unwrap();
            c.core_until = c.core_until.max(e.core_until);
        }

        for &q in &neighbors {
            let e = &self.points[&q];
            if e.cell == cell {
                continue;
            }
            let (qcell, qcore, quntil) = (e.cell.clone(), e.core_until, e.until);
            let both = x_core.min(qcore);
            if both >= now {
                self.link_connection(&cell, &qcell, both);
            }
            if qcore >= now {
                self.link_attachment(&qcell, &cell, qcore);
            }
            if x_core >= now {
                self.link_attachment(&cell, &qcell, x_core.min(quntil));
            }
        }
        for (q, partners) in extended {
            let (qcell, qcore) = {
                let e = &self.points[&q];
                (e.cell.clone(), e.core_until)
            };
            for (b, nb) in partners {
                let e = &self.points[&b];
                if e.cell == qcell {
                    continue;
                }
                let (bcell, bcore) = (e.cell.clone(), e.core_until);
                let both = qcore.min(bcore);
                if both >= now {
                    self.link_connection(&qcell, &bcell, both);
                }
                let att = qcore.min(nb);
                if att >= now {
                    self.link_attachment(&qcell, &bcell, att);
                }
            }
        }
        self.stats.points_ingested += 1;
        Ok(())
    }

    /// Slide to the next window: drop expired points and lapsed indicators. Performs no
    /// range query and no distance computation.
    pub fn advance_window(&mut self) {
        let (q0, d0) = (self.range_queries.get(), self.distances.get());
        self.stats.advances += 1;
        self.now += 1;
        let now = self.now;
        while let Some(&id) = self.arrivals.front() {
            if self.points[&id].until >= now {
                break;
            }
            self.arrivals.pop_front();
            self.stats.points_expired += 1;
            let entry = self.points.remove(&id).unwrap();
            let cell = self.cells.get_mut(&entry.cell).unwrap();
            let front = cell.points.pop_front();
            debug_assert_eq!(front, Some(id));
            if cell.points.is_empty() {
                debug_assert!(cell.core_until < now);
                self.cells.remove(&entry.cell);
            }
        }
        for c in self.cells.values_mut() {
            c.connections.retain(|&(_, u)| u >= now);
            c.attachments.retain(|&(_, u)| u >= now);
        }
        self.stats.advance_range_queries += self.range_queries.get() - q0;
        self.stats.advance_distance_computations += self.distances.get() - d0;
    }

    /// Depth-first search over core cells along live connections; each component plus
    /// its attached cells is one cluster.
    pub fn emit_clusters(&self) -> Vec<ClusterOutput> {
        let now = self.now;
        let mut core_cells: Vec<&CellCoord> = self
            .cells
            .values()
            .filter(|c| c.core_until >= now)
            .map(|c| &c.location)
            .collect();
        core_cells.sort();

        let mut component_of: HashMap<&[i32], usize> = HashMap::new();
        let mut components: Vec<Vec<&CellCoord>> = Vec::new();
        let mut key = vec![0i32; self.config.grid.d];
        for &start in &core_cells {
            if component_of.contains_key(start.as_slice()) {
                continue;
            }
            let idx = components.len();
            let mut members = vec![start];
            component_of.insert(start.as_slice(), idx);
            let mut stack = vec![start];
            while let Some(loc) = stack.pop() {
                let cell = &self.cells[loc];
                for &(o, u) in &cell.connections {
                    if u < now {
                        continue;
                    }
                    self.shift_into(&mut key, loc, o);
                    let (next, _) = self.cells.get_key_value(key.as_slice()).unwrap();
                    if !component_of.contains_key(next.as_slice()) {
                        component_of.insert(next.as_slice(), idx);
                        members.push(next);
                        stack.push(next);
                    }
                }
            }
            members.sort();
            components.push(members);
        }

        let mut out: Vec<ClusterOutput> = components
            .iter()
            .enumerate()
            .map(|(idx, cells)| self.build_cluster(idx, cells, &component_of))
            .collect();
        out.sort_by_key(|c| c.cluster_id);
        out
    }

    fn shift_into(&self, key: &mut [i32], loc: &CellCoord, o: u32) {
        let off = self.search.get(o as usize);
        for (k, (a, b)) in key.iter_mut().zip(loc.0.iter().zip(&off.0)) {
            *k = a + b;
        }
    }

    fn build_cluster(
        &self,
        idx: usize,
        core_cells: &[&CellCoord],
        component_of: &HashMap<&[i32], usize>,
    ) -> ClusterOutput {
        let now = self.now;
        let mut key = vec![0i32; self.config.grid.d];
        let mut attached: BTreeSet<CellCoord> = BTreeSet::new();
        for &loc in core_cells {
            for &(o, u) in &self.cells[loc].attachments {
                if u < now {
                    continue;
                }
                self.shift_into(&mut key, loc, o);
                if component_of.get(key.as_slice()) != Some(&idx) {
                    attached.insert(CellCoord(key.clone()));
                }
            }
        }

        // a non-core point belongs to the cluster iff one of its live neighbors is a
        // core point of the component; all of its live neighbors sit in its career list
        let joins = |e: &PointEntry| {
            e.career.live(now).any(|(b, _)| {
                let b = &self.points[&b];
                b.core_until >= now && component_of.get(b.cell.as_slice()) == Some(&idx)
            })
        };

        let mut cells = Vec::with_capacity(core_cells.len() + attached.len());
        let mut members = Vec::new();
        let mut core_members = Vec::new();
        for &loc in core_cells {
            let cell = &self.cells[loc];
            let mut links: Vec<u32> = cell
                .connections
                .iter()
                .filter(|&&(_, u)| u >= now)
                .map(|&(o, _)| o)
                .collect();
            for &(o, u) in &cell.attachments {
                if u < now {
                    continue;
                }
                self.shift_into(&mut key, loc, o);
                if attached.contains(key.as_slice()) {
                    links.push(o);
                }
            }
            links.sort_unstable();
            links.dedup();
            // offsets at exactly the range threshold only arise from boundary rounding
            // and have no slot in the summary's connection space
            cells.push(SgsCell {
                location: loc.clone(),
                population: cell.points.len() as u32,
                status: CellStatus::Core,
                connections: links
                    .into_iter()
                    .map(|o| self.search.get(o as usize))
                    .filter(|o| self.envelope.contains(&o.0))
                    .cloned()
                    .collect(),
            });
            for id in &cell.points {
                let e = &self.points[id];
                if e.core_until >= now {
                    core_members.push(*id);
                    members.push(*id);
                } else if joins(e) {
                    members.push(*id);
                }
            }
        }
        for loc in &attached {
            let cell = &self.cells[loc];
            cells.push(SgsCell {
                location: loc.clone(),
                population: cell.points.len() as u32,
                status: CellStatus::Edge,
                connections: Vec::new(),
            });
            for id in &cell.points {
                let e = &self.points[id];
                if e.core_until < now && joins(e) {
                    members.push(*id);
                }
            }
        }
        members.sort_unstable();
        core_members.sort_unstable();
        let cluster_id = members[0];
        let mut sgs = SgsSummary {
            cluster_id,
            level: 0,
            rho: self.config.rho,
            grid: self.config.grid.clone(),
            cells,
        };
        sgs.normalize();
        ClusterOutput {
            cluster_id,
            window_index: now,
            sgs,
            members,
            core_members,
        }
    }

    /// Full-representation points of a cluster, in member order.
    pub fn member_points(&self, c: &ClusterOutput) -> Vec<StreamPoint> {
        c.members
            .iter()
            .filter_map(|id| self.points.get(id).map(|e| e.point.clone()))
            .collect()
    }

    pub fn point_lifespan(&self, id: PointId) -> Option<Lifespan> {
        self.points
            .get(&id)
            .map(|e| Lifespan::until(e.until, self.now))
    }

    pub fn point_core_lifespan(&self, id: PointId) -> Option<Lifespan> {
        self.points
            .get(&id)
            .map(|e| Lifespan::until(e.core_until, self.now))
    }

    /// Windows right after the core career in which the point is an edge point, from its
    /// career list and its partners' current core lifespans.
    pub fn point_edge_lifespan(&self, id: PointId) -> Option<Lifespan> {
        let e = self.points.get(&id)?;
        let partner_core: Vec<Lifespan> = e
            .career
            .live(self.now)
            .map(|(b, _)| Lifespan::until(self.points[&b].core_until, self.now))
            .collect();
        Some(edge_lifespan(
            Lifespan::until(e.until, self.now),
            Lifespan::until(e.core_until, self.now),
            &partner_core,
        ))
    }

    /// Number of live entries in a point's non-core-career neighbor list.
    pub fn career_len(&self, id: PointId) -> Option<usize> {
        self.points.get(&id).map(|e| e.career.live_len(self.now))
    }

    pub fn cell(&self, location: &[i32]) -> Option<CellView<'_>> {
        self.cells
            .get(location)
            .map(|cell| CellView { cell, engine: self })
    }

    pub fn cells(&self) -> impl Iterator<Item = CellView<'_>> {
        self.cells
            .values()
            .map(|cell| CellView { cell, engine: self })
    }
}

/// Read-only view of a skeletal cell at the engine's current window.
#[derive(Clone, Copy)]
pub struct CellView<'a> {
    cell: &'a SkeletalCell,
    engine: &'a Engine,
}

impl<'a> CellView<'a> {
    pub fn location(&self) -> &'a CellCoord {
        &self.cell.location
    }

    pub fn side(&self) -> f64 {
        self.engine.config.grid.side
    }

    pub fn population(&self) -> usize {
        self.cell.points.len()
    }

    pub fn point_ids(&self) -> impl Iterator<Item = PointId> + 'a {
        self.cell.points.iter().copied()
    }

    pub fn core_lifespan(&self) -> Lifespan {
        Lifespan::until(self.cell.core_until, self.engine.now)
    }

    /// Core if it holds a core point, edge if attached to a live core cell, else noise.
    pub fn status(&self) -> CellStatus {
        let now = self.engine.now;
        if self.cell.core_until >= now {
            return CellStatus::Core;
        }
        let search = &self.engine.search;
        for (i, o) in search.offsets().iter().enumerate() {
            let other = self.cell.location.offset(&o.0);
            let Some(c) = self.engine.cells.get(&other) else {
                continue;
            };
            let back = search.neg_index(i) as u32;
            if c.core_until >= now && c.attachments.iter().any(|&(k, u)| k == back && u >= now) {
                return CellStatus::Edge;
            }
        }
        CellStatus::Noise
    }

    /// Live core-core connections. Empty for non-core cells.
    pub fn connections(&self) -> Vec<(CellOffset, Lifespan)> {
        self.live(&self.cell.connections)
    }

    /// Live attachments of neighboring cells to this core cell.
    pub fn attachments(&self) -> Vec<(CellOffset, Lifespan)> {
        self.live(&self.cell.attachments)
    }

    fn live(&self, list: &[(u32, WindowIndex)]) -> Vec<(CellOffset, Lifespan)> {
        let now = self.engine.now;
        if self.cell.core_until < now {
            return Vec::new();
        }
        let mut v: Vec<_> = list
            .iter()
            .filter(|&&(_, u)| u >= now)
            .map(|&(o, u)| {
                (
                    self.engine.search.get(o as usize).clone(),
                    Lifespan::until(u, now),
                )
            })
            .collect();
        v.sort();
        v
    }
}
