//! Brute-force per-window reference: all-pairs DBSCAN and SGS construction straight from
//! the definitions. Quadratic by design; used by tests and the `verify` command.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::ClusterOutput;
use crate::model::{
    offset_space, CellCoord, CellStatus, ClusterParams, GridSpec, PointId, StreamPoint,
};
use crate::sgs::{SgsCell, SgsSummary};

/// One density-based cluster. Edge points may belong to several clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCluster {
    pub core_ids: BTreeSet<PointId>,
    pub edge_ids: BTreeSet<PointId>,
}

impl OracleCluster {
    pub fn members(&self) -> Vec<PointId> {
        self.core_ids.union(&self.edge_ids).copied().collect()
    }

    /// Smallest member id.
    pub fn id(&self) -> PointId {
        let c = self.core_ids.first().copied().unwrap_or(PointId::MAX);
        let e = self.edge_ids.first().copied().unwrap_or(PointId::MAX);
        c.min(e)
    }
}

/// All-pairs neighborhood of one window's points.
pub struct OracleWindow<'a> {
    points: &'a [StreamPoint],
    index: HashMap<PointId, usize>,
    neighbors: Vec<Vec<usize>>,
    core: Vec<bool>,
}

impl<'a> OracleWindow<'a> {
    pub fn new(points: &'a [StreamPoint], params: &ClusterParams) -> Self {
        let r2 = params.range_threshold * params.range_threshold;
        let n = points.len();
        let mut neighbors = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if points[i].distance_sq(&points[j]) <= r2 {
                    neighbors[i].push(j);
                    neighbors[j].push(i);
                }
            }
        }
        let core = neighbors
            .iter()
            .map(|nb| nb.len() >= params.count_threshold)
            .collect();
        let index = points.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
        Self {
            points,
            index,
            neighbors,
            core,
        }
    }

    pub fn is_core(&self, id: PointId) -> bool {
        self.core[self.index[&id]]
    }

    pub fn neighbor_ids(&self, id: PointId) -> Vec<PointId> {
        self.neighbors[self.index[&id]]
            .iter()
            .map(|&j| self.points[j].id)
            .collect()
    }

    /// Connected components of core points; every non-core neighbor of a component's core
    /// point is an edge point of it. Sorted by smallest core id.
    pub fn clusters(&self) -> Vec<OracleCluster> {
        let n = self.points.len();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        let mut order: Vec<usize> = (0..n).filter(|&i| self.core[i]).collect();
        order.sort_by_key(|&i| self.points[i].id);
        for start in order {
            if comp[start] != usize::MAX {
                continue;
            }
            let c = out.len();
            let mut cl = OracleCluster {
                core_ids: BTreeSet::new(),
                edge_ids: BTreeSet::new(),
            };
            comp[start] = c;
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                cl.core_ids.insert(self.points[i].id);
                for &j in &self.neighbors[i] {
                    if !self.core[j] {
                        cl.edge_ids.insert(self.points[j].id);
                    } else if comp[j] == usize::MAX {
                        comp[j] = c;
                        queue.push_back(j);
                    }
                }
            }
            out.push(cl);
        }
        out
    }

    /// SGS of a cluster by direct definition checks over all pairs.
    pub fn sgs(&self, c: &OracleCluster, grid: &GridSpec, rho: u32) -> SgsSummary {
        let cell_of = |i: usize| grid.cell_of(&self.points[i].coords).expect("cell");
        let mut population: HashMap<CellCoord, u32> = HashMap::new();
        for i in 0..self.points.len() {
            *population.entry(cell_of(i)).or_default() += 1;
        }
        let mut cells: BTreeMap<CellCoord, (CellStatus, BTreeSet<CellCoord>)> = BTreeMap::new();
        for id in c.edge_ids.iter() {
            cells
                .entry(cell_of(self.index[id]))
                .or_insert((CellStatus::Edge, BTreeSet::new()));
        }
        for id in c.core_ids.iter() {
            cells
                .entry(cell_of(self.index[id]))
                .or_insert((CellStatus::Edge, BTreeSet::new()))
                .0 = CellStatus::Core;
        }
        let envelope = offset_space(grid.d, 0, rho);
        for id in c.core_ids.iter() {
            let i = self.index[id];
            let a = cell_of(i);
            for &j in &self.neighbors[i] {
                let b = cell_of(j);
                if a == b {
                    continue;
                }
                let b_status = cells[&b].0;
                // core-core neighborship connects core cells; any neighbor attaches an edge cell
                let linked = match b_status {
                    CellStatus::Core => c.core_ids.contains(&self.points[j].id),
                    _ => true,
                };
                let o = b.diff(&a);
                if linked && envelope.contains(&o.0) {
                    cells.get_mut(&a).unwrap().1.insert(o);
                }
            }
        }
        let mut s = SgsSummary {
            cluster_id: c.id(),
            level: 0,
            rho,
            grid: grid.clone(),
            cells: cells
                .into_iter()
                .map(|(location, (status, conns))| SgsCell {
                    population: population[&location],
                    location,
                    status,
                    connections: conns.into_iter().collect(),
                })
                .collect(),
        };
        s.normalize();
        s
    }
}

pub fn naive_dbscan(points: &[StreamPoint], params: &ClusterParams) -> Vec<OracleCluster> {
    OracleWindow::new(points, params).clusters()
}

pub fn naive_sgs(
    c: &OracleCluster,
    points: &[StreamPoint],
    grid: &GridSpec,
    params: &ClusterParams,
    rho: u32,
) -> SgsSummary {
    OracleWindow::new(points, params).sgs(c, grid, rho)
}

/// Oracle clusters of a window with their summaries.
pub fn naive_window(
    points: &[StreamPoint],
    params: &ClusterParams,
    grid: &GridSpec,
    rho: u32,
) -> Vec<(OracleCluster, SgsSummary)> {
    let w = OracleWindow::new(points, params);
    w.clusters()
        .into_iter()
        .map(|c| {
            let s = w.sgs(&c, grid, rho);
            (c, s)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub clusters_compared: usize,
    pub first_divergence: Option<String>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.first_divergence.is_none()
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.first_divergence {
            None => write!(f, "pass ({} clusters)", self.clusters_compared),
            Some(d) => write!(f, "FAIL: {d}"),
        }
    }
}

/// Compare engine output with the oracle: core partition, edge memberships and per-cell
/// location, population, status and connection set.
pub fn assert_equivalent(
    engine: &[ClusterOutput],
    oracle: &[(OracleCluster, SgsSummary)],
) -> EquivalenceReport {
    let report = |msg: String| EquivalenceReport {
        clusters_compared: engine.len().min(oracle.len()),
        first_divergence: Some(msg),
    };
    if engine.len() != oracle.len() {
        return report(format!(
            "cluster count differs: engine {} vs oracle {}",
            engine.len(),
            oracle.len()
        ));
    }
    let mut a: Vec<&ClusterOutput> = engine.iter().collect();
    a.sort_by_key(|c| c.core_members.first().copied());
    for (e, (o, s)) in a.iter().zip(oracle) {
        let core: BTreeSet<_> = e.core_members.iter().copied().collect();
        if core != o.core_ids {
            return report(format!(
                "core set of cluster {} differs: engine {:?} vs oracle {:?}",
                e.cluster_id, core, o.core_ids
            ));
        }
        let edge: BTreeSet<_> = e.edge_members().into_iter().collect();
        if edge != o.edge_ids {
            return report(format!(
                "edge set of cluster {} differs: engine {:?} vs oracle {:?}",
                e.cluster_id, edge, o.edge_ids
            ));
        }
        if e.cluster_id != o.id() {
            return report(format!(
                "cluster id differs: engine {} vs oracle {}",
                e.cluster_id,
                o.id()
            ));
        }
        if let Some(msg) = diff_sgs(&e.sgs, s) {
            return report(format!("cluster {}: {msg}", e.cluster_id));
        }
    }
    EquivalenceReport {
        clusters_compared: engine.len(),
        first_divergence: None,
    }
}

fn diff_sgs(a: &SgsSummary, b: &SgsSummary) -> Option<String> {
    let la: Vec<_> = a.cells.iter().map(|c| &c.location).collect();
    let lb: Vec<_> = b.cells.iter().map(|c| &c.location).collect();
    if la != lb {
        return Some(format!("cell footprint differs: {la:?} vs {lb:?}"));
    }
    for (x, y) in a.cells.iter().zip(&b.cells) {
        if x.population != y.population {
            return Some(format!(
                "cell {:?} population {} vs {}",
                x.location, x.population, y.population
            ));
        }
        if x.status != y.status {
            return Some(format!(
                "cell {:?} status {:?} vs {:?}",
                x.location, x.status, y.status
            ));
        }
        if x.connections != y.connections {
            let missing: Vec<_> = y
                .connections
                .iter()
                .filter(|o| !x.connections.contains(o))
                .map(|o| x.location.offset(&o.0))
                .collect();
            let extra: Vec<_> = x
                .connections
                .iter()
                .filter(|o| !y.connections.contains(o))
                .map(|o| x.location.offset(&o.0))
                .collect();
            return Some(format!(
                "connections of cell {:?} differ: missing to {missing:?}, extra to {extra:?}",
                x.location
            ));
        }
    }
    if a.cluster_id != b.cluster_id || a.level != b.level {
        return Some("summary header differs".into());
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(id: u64, x: f64, y: f64) -> StreamPoint {
        StreamPoint::new(id, id as i64, vec![x, y])
    }

    fn params(r: f64, k: usize) -> ClusterParams {
        ClusterParams::new(r, k).unwrap()
    }

    #[test]
    fn four_mutual_neighbors_one_cluster() {
        let pts = vec![
            p(1, 0.0, 0.0),
            p(2, 0.1, 0.0),
            p(3, 0.0, 0.1),
            p(4, 0.1, 0.1),
        ];
        let c = naive_dbscan(&pts, &params(1.0, 3));
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].core_ids.len(), 4);
        assert!(c[0].edge_ids.is_empty());
    }

    #[test]
    fn far_points_no_clusters() {
        let pts: Vec<_> = (0..10).map(|i| p(i, i as f64 * 5.0, 0.0)).collect();
        assert!(naive_dbscan(&pts, &params(1.0, 1)).is_empty());
    }

    #[test]
    fn shared_edge_point() {
        // two squares of mutual neighbors and one point reaching a corner of each
        let pts = vec![
            p(1, 0.0, 0.0),
            p(2, 0.5, 0.0),
            p(3, 0.0, 0.5),
            p(4, 0.5, 0.5),
            p(5, 2.5, 0.0),
            p(6, 3.0, 0.0),
            p(7, 2.5, 0.5),
            p(8, 3.0, 0.5),
            p(9, 1.5, 0.0),
        ];
        let c = naive_dbscan(&pts, &params(1.0, 3));
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].core_ids, BTreeSet::from([1, 2, 3, 4]));
        assert_eq!(c[1].core_ids, BTreeSet::from([5, 6, 7, 8]));
        assert_eq!(c[0].edge_ids, BTreeSet::from([9]));
        assert_eq!(c[1].edge_ids, BTreeSet::from([9]));
    }

    #[test]
    fn single_cell_sgs() {
        let pts = vec![p(1, 0.1, 0.1), p(2, 0.2, 0.1), p(3, 0.1, 0.2)];
        let g = GridSpec::new(&params(1.0, 2), 2).unwrap();
        let w = naive_window(&pts, &params(1.0, 2), &g, 3);
        assert_eq!(w.len(), 1);
        let s = &w[0].1;
        assert_eq!(s.volume(), 1);
        assert_eq!(s.cells[0].status, CellStatus::Core);
        assert_eq!(s.cells[0].population, 3);
        assert!(s.cells[0].connections.is_empty());
    }

    #[test]
    fn two_cells_one_core_pair() {
        // side = 1/sqrt2 ~ 0.707; cells (0,0) and (1,0)
        let pts = vec![p(1, 0.6, 0.1), p(2, 0.8, 0.1)];
        let g = GridSpec::new(&params(1.0, 1), 2).unwrap();
        let w = naive_window(&pts, &params(1.0, 1), &g, 3);
        assert_eq!(w.len(), 1);
        let s = &w[0].1;
        assert_eq!(s.volume(), 2);
        assert_eq!(s.cells[0].connections, vec![CellCoord(vec![1, 0])]);
        assert_eq!(s.cells[1].connections, vec![CellCoord(vec![-1, 0])]);
    }

    #[test]
    fn permutation_invariant() {
        let mut pts: Vec<_> = (0..60)
            .map(|i| {
                p(
                    i,
                    ((i * 37) % 17) as f64 * 0.3,
                    ((i * 11) % 13) as f64 * 0.3,
                )
            })
            .collect();
        let a = naive_dbscan(&pts, &params(0.5, 3));
        pts.reverse();
        pts.rotate_left(17);
        assert_eq!(a, naive_dbscan(&pts, &params(0.5, 3)));
    }

    #[test]
    fn divergence_is_reported() {
        let pts = vec![p(1, 0.6, 0.1), p(2, 0.8, 0.1)];
        let g = GridSpec::new(&params(1.0, 1), 2).unwrap();
        let w = naive_window(&pts, &params(1.0, 1), &g, 3);
        let (o, s) = &w[0];
        let good = ClusterOutput {
            cluster_id: 1,
            window_index: 0,
            sgs: s.clone(),
            members: vec![1, 2],
            core_members: vec![1, 2],
        };
        assert!(assert_equivalent(std::slice::from_ref(&good), &w).passed());
        let mut bad = good;
        bad.sgs.cells[0].connections.clear();
        let r = assert_equivalent(&[bad], &[(o.clone(), s.clone())]);
        assert!(!r.passed());
        let msg = r.first_divergence.unwrap();
        assert!(msg.contains("[0, 0]") && msg.contains("[1, 0]"), "{msg}");
    }
}
