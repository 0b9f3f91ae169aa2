//! Seeded synthetic workloads: moving Gaussian blobs with uniform noise, and random
//! skeletal summaries.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{offset_space, CellCoord, CellStatus, ClusterParams, GridSpec};
use crate::sgs::{SgsCell, SgsSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobConfig {
    pub d: usize,
    pub blobs: usize,
    /// Coordinates live in `[0, extent)` per axis.
    pub extent: f64,
    pub sigma: f64,
    /// Distance a blob center travels per generated point.
    pub speed: f64,
    /// Fraction of uniform noise points.
    pub noise: f64,
    pub seed: u64,
}

impl Default for BlobConfig {
    fn default() -> Self {
        Self {
            d: 2,
            blobs: 5,
            extent: 1.0,
            sigma: 0.03,
            speed: 1e-5,
            noise: 0.05,
            seed: 7,
        }
    }
}

/// Infinite stream of points from `blobs` Gaussian blobs drifting around the unit box
/// (scaled by `extent`), bouncing off its walls.
#[derive(Debug, Clone)]
pub struct BlobStream {
    cfg: BlobConfig,
    rng: ChaCha8Rng,
    centers: Vec<Vec<f64>>,
    velocity: Vec<Vec<f64>>,
    normal: Normal<f64>,
}

impl BlobStream {
    pub fn new(cfg: BlobConfig) -> Result<Self> {
        if cfg.d == 0 || cfg.blobs == 0 {
            return Err(Error::InvalidParameter(
                "blob stream needs d >= 1 and blobs >= 1".into(),
            ));
        }
        if !(cfg.extent > 0.0 && cfg.sigma > 0.0 && (0.0..=1.0).contains(&cfg.noise)) {
            return Err(Error::InvalidParameter(
                "blob stream needs extent > 0, sigma > 0, noise in [0, 1]".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let margin = 0.15 * cfg.extent;
        let centers: Vec<Vec<f64>> = (0..cfg.blobs)
            .map(|_| {
                (0..cfg.d)
                    .map(|_| rng.random_range(margin..cfg.extent - margin))
                    .collect()
            })
            .collect();
        let velocity = (0..cfg.blobs)
            .map(|_| {
                let v: Vec<f64> = (0..cfg.d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                v.into_iter().map(|x| x / n * cfg.speed).collect()
            })
            .collect();
        let normal = Normal::new(0.0, cfg.sigma).expect("sigma checked");
        Ok(Self {
            cfg,
            rng,
            centers,
            velocity,
            normal,
        })
    }

    fn step(&mut self) {
        let hi = self.cfg.extent;
        for (c, v) in self.centers.iter_mut().zip(&mut self.velocity) {
            for (x, dx) in c.iter_mut().zip(v.iter_mut()) {
                *x += *dx;
                if *x < 0.0 || *x > hi {
                    *dx = -*dx;
                    *x = x.clamp(0.0, hi);
                }
            }
        }
    }
}

impl Iterator for BlobStream {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        self.step();
        let ext = self.cfg.extent;
        let p = if self.rng.random::<f64>() < self.cfg.noise {
            (0..self.cfg.d)
                .map(|_| self.rng.random_range(0.0..ext))
                .collect()
        } else {
            let b = self.rng.random_range(0..self.cfg.blobs);
            (0..self.cfg.d)
                .map(|axis| self.centers[b][axis] + self.normal.sample(&mut self.rng))
                .collect()
        };
        Some(p)
    }
}

/// `n` points drawn uniformly from `[0, extent)^d`.
pub fn uniform_points(rng: &mut impl Rng, n: usize, d: usize, extent: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(0.0..extent)).collect())
        .collect()
}

/// A random level-0 summary of `cells` cells grown by a random walk. Core cells connect
/// to random envelope neighbors: symmetrically to core cells, one-way to edge cells.
pub fn random_sgs(rng: &mut impl Rng, d: usize, cells: usize, rho: u32) -> SgsSummary {
    let grid = GridSpec::new(&ClusterParams::new(1.0, 5).unwrap(), d).unwrap();
    let origin: Vec<i32> = (0..d).map(|_| rng.random_range(-50..50)).collect();
    let mut map: BTreeMap<CellCoord, (CellStatus, u32)> = BTreeMap::new();
    let mut cur = origin;
    while map.len() < cells.max(1) {
        let status = if map.is_empty() || rng.random_bool(0.6) {
            CellStatus::Core
        } else {
            CellStatus::Edge
        };
        let pop = match status {
            CellStatus::Core => rng.random_range(1..60),
            _ => rng.random_range(1..5),
        };
        map.entry(CellCoord(cur.clone())).or_insert((status, pop));
        let axis = rng.random_range(0..d);
        cur[axis] += if rng.random_bool(0.5) { 1 } else { -1 };
    }
    let env = offset_space(d, 0, rho);
    let mut links: BTreeMap<CellCoord, Vec<CellCoord>> = BTreeMap::new();
    let locs: Vec<CellCoord> = map.keys().cloned().collect();
    for (i, a) in locs.iter().enumerate() {
        if map[a].0 != CellStatus::Core {
            continue;
        }
        for b in &locs[i + 1..] {
            let o = b.diff(a);
            if !env.contains(&o.0) || !rng.random_bool(0.5) {
                continue;
            }
            links.entry(a.clone()).or_default().push(o.clone());
            if map[b].0 == CellStatus::Core {
                links.entry(b.clone()).or_default().push(o.neg());
            }
        }
    }
    // core cells sorting after an edge cell were skipped above
    for (i, b) in locs.iter().enumerate() {
        if map[b].0 != CellStatus::Edge {
            continue;
        }
        for a in &locs[i + 1..] {
            let o = b.diff(a);
            if map[a].0 == CellStatus::Core && env.contains(&o.0) && rng.random_bool(0.5) {
                links.entry(a.clone()).or_default().push(o);
            }
        }
    }
    let mut s = SgsSummary {
        cluster_id: rng.random_range(0..1_000_000),
        level: 0,
        rho,
        grid,
        cells: map
            .into_iter()
            .map(|(location, (status, population))| SgsCell {
                connections: links.remove(&location).unwrap_or_default(),
                location,
                population,
                status,
            })
            .collect(),
    };
    s.normalize();
    s
}
