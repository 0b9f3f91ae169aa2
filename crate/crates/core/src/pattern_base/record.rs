use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CellStatus, StreamPoint, WindowIndex};
use crate::sgs::SgsSummary;

/// Non-locational features of a summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Number of cells.
    pub volume: u64,
    /// Number of core cells.
    pub core_count: u64,
    /// Total population over volume.
    pub avg_density: f64,
    /// Mean number of connection indicators set per core cell.
    pub avg_connectivity: f64,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.volume as f64,
            self.core_count as f64,
            self.avg_density,
            self.avg_connectivity,
        ]
    }
}

pub fn feature_vector(s: &SgsSummary) -> Result<FeatureVector> {
    if s.is_empty() {
        return Err(Error::EmptySummary);
    }
    let volume = s.volume() as u64;
    let mut core = 0u64;
    let mut links = 0u64;
    for c in &s.cells {
        if c.status == CellStatus::Core {
            core += 1;
            links += c.connections.len() as u64;
        }
    }
    Ok(FeatureVector {
        volume,
        core_count: core,
        avg_density: s.total_population() as f64 / volume as f64,
        avg_connectivity: if core == 0 {
            0.0
        } else {
            links as f64 / core as f64
        },
    })
}

/// Axis-aligned box with inclusive bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mbr {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Mbr {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                actual: hi.len(),
            });
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(a, b)| a.partial_cmp(b).is_none_or(|o| o.is_gt()))
        {
            return Err(Error::InvalidParameter(format!(
                "invalid bounds {lo:?} .. {hi:?}"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Bounds of the union of a summary's cell extents.
    pub fn of(s: &SgsSummary) -> Result<Self> {
        let (lo, hi) = s.location_bounds().ok_or(Error::EmptySummary)?;
        let side = s.side();
        let lo = s.grid.min_corner(&lo.into(), side);
        let hi = s
            .grid
            .min_corner(&hi.iter().map(|x| x + 1).collect::<Vec<_>>().into(), side);
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn intersects(&self, other: &Mbr) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(other.lo.iter().zip(&other.hi))
            .all(|((a0, a1), (b0, b1))| a0 <= b1 && b0 <= a1)
    }

    pub fn union(&self, other: &Mbr) -> Mbr {
        Mbr {
            lo: self
                .lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| a.min(*b))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| a.max(*b))
                .collect(),
        }
    }

    pub fn area(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn enlargement(&self, other: &Mbr) -> f64 {
        self.union(other).area() - self.area()
    }
}

/// One archived cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRecord {
    pub id: u64,
    pub window_index: WindowIndex,
    pub mbr: Mbr,
    pub features: FeatureVector,
    pub sgs: SgsSummary,
    /// Member points, when archived with the full representation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<StreamPoint>>,
}

impl PatternRecord {
    pub fn new(id: u64, window_index: WindowIndex, sgs: SgsSummary) -> Result<Self> {
        Ok(Self {
            id,
            window_index,
            mbr: Mbr::of(&sgs)?,
            features: feature_vector(&sgs)?,
            sgs,
            points: None,
        })
    }

    pub fn level(&self) -> u8 {
        self.sgs.level
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CellCoord, ClusterParams, GridSpec};
    use crate::sgs::SgsCell;
    use crate::synth::random_sgs;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sgs(cells: Vec<SgsCell>) -> SgsSummary {
        SgsSummary {
            cluster_id: 1,
            level: 0,
            rho: 3,
            grid: GridSpec::new(&ClusterParams::new(2f64.sqrt(), 3).unwrap(), 2).unwrap(),
            cells,
        }
    }

    fn cell(x: i32, pop: u32, core: bool, conns: usize) -> SgsCell {
        SgsCell {
            location: CellCoord(vec![x, 0]),
            population: pop,
            status: if core {
                CellStatus::Core
            } else {
                CellStatus::Edge
            },
            connections: (0..conns).map(|i| CellCoord(vec![1, i as i32])).collect(),
        }
    }

    #[test]
    fn feature_examples() {
        let f = feature_vector(&sgs(vec![
            cell(0, 3, true, 1),
            cell(1, 3, true, 2),
            cell(2, 2, false, 0),
            cell(3, 2, false, 0),
        ]))
        .unwrap();
        assert_eq!((f.volume, f.core_count, f.avg_density), (4, 2, 2.5));
        assert_eq!(f.avg_connectivity, 1.5);
        let f = feature_vector(&sgs(vec![cell(0, 5, true, 0)])).unwrap();
        assert_eq!(f.as_array(), [1.0, 1.0, 5.0, 0.0]);
        assert!(matches!(
            feature_vector(&sgs(vec![])),
            Err(Error::EmptySummary)
        ));
    }

    #[test]
    fn features_match_definition_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let s = random_sgs(&mut rng, 3, 25, 3);
            let f = feature_vector(&s).unwrap();
            let mut pop = 0.0;
            let mut core = 0.0;
            let mut conns = 0.0;
            for c in &s.cells {
                pop += c.population as f64;
                if c.status == CellStatus::Core {
                    core += 1.0;
                    conns += c.connections.len() as f64;
                }
            }
            assert_eq!(f.volume as usize, s.cells.len());
            assert_eq!(f.core_count as f64, core);
            assert!((f.avg_density - pop / s.cells.len() as f64).abs() < 1e-12);
            assert!((f.avg_connectivity - conns / core).abs() < 1e-12);
        }
    }

    #[test]
    fn mbr_bounds_cells() {
        // side 1 in this grid
        let s = sgs(vec![cell(-1, 1, true, 0), cell(2, 1, true, 0)]);
        let m = Mbr::of(&s).unwrap();
        assert_eq!(m.lo, vec![-1.0, 0.0]);
        assert_eq!(m.hi, vec![3.0, 1.0]);
        let other = Mbr::new(vec![3.0, 1.0], vec![4.0, 2.0]).unwrap();
        assert!(m.intersects(&other));
        let far = Mbr::new(vec![3.5, 0.0], vec![4.0, 2.0]).unwrap();
        assert!(!m.intersects(&far));
        assert!(Mbr::new(vec![1.0], vec![0.0]).is_err());
    }
}
