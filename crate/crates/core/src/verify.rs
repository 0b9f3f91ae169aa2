//! Structural checks on emitted windows: summary fidelity properties and lifespan
//! monotonicity between consecutive windows.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::Rng;

use crate::engine::{ClusterOutput, Engine};
use crate::model::{distance_sq, CellCoord, CellStatus, ClusterParams, PointId, StreamPoint};
use crate::sgs::SgsSummary;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaReport {
    /// Number of individual assertions evaluated per property:
    /// core-cell membership, edge-cell population, coverage samples, path pairs.
    pub checked: [u64; 4],
    pub violations: Vec<String>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: LemmaReport) {
        for (a, b) in self.checked.iter_mut().zip(other.checked) {
            *a += b;
        }
        self.violations.extend(other.violations);
    }
}

/// Check one window's clusters against its live points:
///
/// * every point in a core cell of a summary is a member of that cluster;
/// * a summary cell holding no core point at all has at most `count_threshold` points;
/// * `samples` random locations inside each summary's cells lie within the range
///   threshold of a member;
/// * for clusters with at most `max_core` core points, any two core points joined by a
///   path of `n` core points are joined by a core-cell path of at most `n` cells.
pub fn check_lemmas(
    clusters: &[ClusterOutput],
    points: &[StreamPoint],
    params: &ClusterParams,
    rng: &mut impl Rng,
    samples: usize,
    max_core: usize,
) -> LemmaReport {
    let mut rep = LemmaReport::default();
    let Some(first) = clusters.first() else {
        return rep;
    };
    let grid = &first.sgs.grid;
    let by_id: HashMap<PointId, &StreamPoint> = points.iter().map(|p| (p.id, p)).collect();
    let mut residents: HashMap<CellCoord, Vec<PointId>> = HashMap::new();
    for p in points {
        residents
            .entry(grid.cell_of(&p.coords).expect("cell"))
            .or_default()
            .push(p.id);
    }
    let all_core: HashSet<PointId> = clusters
        .iter()
        .flat_map(|c| c.core_members.iter().copied())
        .collect();
    let r2 = params.range_threshold * params.range_threshold;

    for c in clusters {
        let members: HashSet<PointId> = c.members.iter().copied().collect();
        for cell in &c.sgs.cells {
            let here = residents.get(&cell.location).map_or(&[][..], Vec::as_slice);
            match cell.status {
                CellStatus::Core => {
                    for id in here {
                        rep.checked[0] += 1;
                        if !members.contains(id) {
                            rep.violations.push(format!(
                                "cluster {}: point {id} in core cell {:?} is not a member",
                                c.cluster_id, cell.location
                            ));
                        }
                    }
                }
                _ => {
                    if here.iter().all(|id| !all_core.contains(id)) {
                        rep.checked[1] += 1;
                        if cell.population as usize > params.count_threshold {
                            rep.violations.push(format!(
                                "cluster {}: edge cell {:?} holds {} points",
                                c.cluster_id, cell.location, cell.population
                            ));
                        }
                    }
                }
            }
        }

        let member_pts: Vec<&StreamPoint> = c
            .members
            .iter()
            .filter_map(|id| by_id.get(id).copied())
            .collect();
        let side = c.sgs.side();
        for _ in 0..samples {
            let cell = &c.sgs.cells[rng.random_range(0..c.sgs.cells.len())];
            let corner = grid.min_corner(&cell.location, side);
            let q: Vec<f64> = corner
                .iter()
                .map(|x| x + rng.random::<f64>() * side)
                .collect();
            rep.checked[2] += 1;
            // sampled location may round into a neighboring cell; allow for that
            let ok = member_pts
                .iter()
                .any(|p| distance_sq(&p.coords, &q) <= r2 * (1.0 + 1e-9));
            if !ok {
                rep.violations.push(format!(
                    "cluster {}: sample {q:?} in cell {:?} is farther than the range threshold from every member",
                    c.cluster_id, cell.location
                ));
            }
        }

        if c.core_members.len() <= max_core {
            check_paths(c, &by_id, r2, &mut rep);
        }
    }
    rep
}

fn check_paths(
    c: &ClusterOutput,
    by_id: &HashMap<PointId, &StreamPoint>,
    r2: f64,
    rep: &mut LemmaReport,
) {
    let core: Vec<&StreamPoint> = c.core_members.iter().map(|id| by_id[id]).collect();
    let n = core.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && core[i].distance_sq(core[j]) <= r2)
                .collect()
        })
        .collect();
    let sgs = &c.sgs;
    let cell_index: HashMap<&CellCoord, usize> = sgs
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| (&c.location, i))
        .collect();
    let cell_adj = core_cell_graph(sgs, &cell_index);
    let grid = &sgs.grid;
    let cell_of: Vec<usize> = core
        .iter()
        .map(|p| cell_index[&grid.cell_of(&p.coords).expect("cell")])
        .collect();
    for s in 0..n {
        let obj = bfs(&adj, s);
        let cells = bfs(&cell_adj, cell_of[s]);
        for t in 0..n {
            let Some(hops) = obj[t] else { continue };
            rep.checked[3] += 1;
            match cells[cell_of[t]] {
                Some(h) if h <= hops => {}
                other => rep.violations.push(format!(
                    "cluster {}: core points {} and {} are {} objects apart but their cells are {:?} cells apart",
                    c.cluster_id,
                    core[s].id,
                    core[t].id,
                    hops + 1,
                    other.map(|h| h + 1)
                )),
            }
        }
    }
}

fn core_cell_graph(sgs: &SgsSummary, index: &HashMap<&CellCoord, usize>) -> Vec<Vec<usize>> {
    sgs.cells
        .iter()
        .map(|c| {
            if c.status != CellStatus::Core {
                return Vec::new();
            }
            c.connections
                .iter()
                .filter_map(|o| index.get(&c.location.offset(&o.0)).copied())
                .filter(|&j| sgs.cells[j].status == CellStatus::Core)
                .collect()
        })
        .collect()
}

fn bfs(adj: &[Vec<usize>], s: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[s] = Some(0);
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        let du = dist[u].unwrap();
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                q.push_back(v);
            }
        }
    }
    dist
}

/// Stored lifespans of every entity at one window.
#[derive(Debug, Clone, Default)]
pub struct LifespanSnapshot {
    window: i64,
    values: HashMap<String, u32>,
}

impl LifespanSnapshot {
    pub fn capture(engine: &Engine) -> Self {
        let mut values = HashMap::new();
        for p in engine.live_points() {
            values.insert(
                format!("point {} life", p.id),
                engine.point_lifespan(p.id).unwrap().get(),
            );
            values.insert(
                format!("point {} core", p.id),
                engine.point_core_lifespan(p.id).unwrap().get(),
            );
        }
        for c in engine.cells() {
            let loc = c.location();
            values.insert(format!("cell {loc:?} core"), c.core_lifespan().get());
            for (o, l) in c.connections() {
                values.insert(format!("connection {loc:?} {o:?}"), l.get());
            }
            for (o, l) in c.attachments() {
                values.insert(format!("attachment {loc:?} {o:?}"), l.get());
            }
        }
        Self {
            window: engine.window_index(),
            values,
        }
    }

    pub fn window(&self) -> i64 {
        self.window
    }

    /// Entities whose lifespan dropped by more than one window between `self` and the
    /// next window's snapshot.
    pub fn violations(&self, next: &LifespanSnapshot) -> Vec<String> {
        assert_eq!(
            next.window,
            self.window + 1,
            "snapshots must be consecutive"
        );
        let mut out = Vec::new();
        for (k, &prev) in &self.values {
            let now = next.values.get(k).copied().unwrap_or(0);
            if now + 1 < prev {
                out.push(format!(
                    "{k}: lifespan {prev} at window {} but {now} at window {}",
                    self.window, next.window
                ));
            }
        }
        out.sort();
        out
    }
}
