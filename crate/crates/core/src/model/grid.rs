use std::borrow::Borrow;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::{ClusterParams, StreamPoint};
use crate::error::{Error, Result};

/// Highest supported dimensionality. Neighbor envelopes grow as roughly `7^d`.
pub const MAX_DIM: usize = 6;

/// Integer cell indices, one per axis.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellCoord(pub Vec<i32>);

/// Difference between two cell coordinates.
pub type CellOffset = CellCoord;

impl CellCoord {
    pub fn new(v: Vec<i32>) -> Self {
        Self(v)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.0
    }

    pub fn offset(&self, o: &[i32]) -> CellCoord {
        CellCoord(self.0.iter().zip(o).map(|(a, b)| a + b).collect())
    }

    /// `self - base`.
    pub fn diff(&self, base: &CellCoord) -> CellOffset {
        CellCoord(self.0.iter().zip(&base.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> CellOffset {
        CellCoord(self.0.iter().map(|a| -a).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Coordinate of the enclosing cell `levels` rounds of `rho`-fold coarsening up.
    pub fn parent(&self, rho: u32, levels: u32) -> CellCoord {
        let f = (rho as i64).pow(levels);
        CellCoord(
            self.0
                .iter()
                .map(|&c| (c as i64).div_euclid(f) as i32)
                .collect(),
        )
    }
}

impl Borrow<[i32]> for CellCoord {
    fn borrow(&self) -> &[i32] {
        &self.0
    }
}

impl fmt::Debug for CellCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<i32>> for CellCoord {
    fn from(v: Vec<i32>) -> Self {
        Self(v)
    }
}

/// Uniform grid whose cell diagonal equals the range threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub side: f64,
    pub range_threshold: f64,
    pub origin: Vec<f64>,
}

impl GridSpec {
    pub fn new(params: &ClusterParams, d: usize) -> Result<Self> {
        let side = grid_side_length(params, d)?;
        Ok(Self {
            d,
            side,
            range_threshold: params.range_threshold,
            origin: vec![0.0; d],
        })
    }

    pub fn with_origin(mut self, origin: Vec<f64>) -> Result<Self> {
        if origin.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: origin.len(),
            });
        }
        self.origin = origin;
        Ok(self)
    }

    /// Side length of cells `level` rounds of `rho`-fold coarsening above this grid.
    pub fn side_at(&self, level: u8, rho: u32) -> f64 {
        self.side * (rho as f64).powi(level as i32)
    }

    pub fn cell_of(&self, coords: &[f64]) -> Result<CellCoord> {
        cell_index(self, coords, self.side)
    }

    /// Minimum corner of a cell at the given side length.
    pub fn min_corner(&self, c: &CellCoord, side: f64) -> Vec<f64> {
        c.0.iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + i as f64 * side)
            .collect()
    }
}

fn cell_index(g: &GridSpec, coords: &[f64], side: f64) -> Result<CellCoord> {
    if coords.len() != g.d {
        return Err(Error::DimensionMismatch {
            expected: g.d,
            actual: coords.len(),
        });
    }
    let mut out = Vec::with_capacity(g.d);
    for (axis, (&x, &o)) in coords.iter().zip(&g.origin).enumerate() {
        let v = ((x - o) / side).floor();
        if !(v >= i32::MIN as f64 && v <= i32::MAX as f64) {
            return Err(Error::CellOverflow { axis, value: x });
        }
        out.push(v as i32);
    }
    Ok(CellCoord(out))
}

pub fn grid_side_length(params: &ClusterParams, d: usize) -> Result<f64> {
    params.validate()?;
    if d == 0 || d > MAX_DIM {
        return Err(Error::InvalidParameter(format!(
            "dimension must be in 1..={MAX_DIM}, got {d}"
        )));
    }
    Ok(params.range_threshold / (d as f64).sqrt())
}

pub fn cell_of(p: &StreamPoint, g: &GridSpec) -> Result<CellCoord> {
    g.cell_of(&p.coords)
}

/// Minimum Euclidean distance between any point of cell `a` and any point of cell `b`.
pub fn min_cell_gap(a: &CellCoord, b: &CellCoord, g: &GridSpec) -> Result<f64> {
    if a.dim() != b.dim() || a.dim() != g.d {
        return Err(Error::DimensionMismatch {
            expected: g.d,
            actual: if a.dim() != g.d { a.dim() } else { b.dim() },
        });
    }
    let units: i64 = gap_units(&a.diff(b).0);
    Ok(g.side * (units as f64).sqrt())
}

/// Squared minimum gap between cells at offset `o`, in units of `side^2`.
fn gap_units(o: &[i32]) -> i64 {
    o.iter()
        .map(|&x| {
            let g = (x.unsigned_abs() as i64 - 1).max(0);
            g * g
        })
        .sum()
}

/// An ordered set of non-zero cell offsets with constant-time index lookup.
///
/// Offsets are kept in lexicographic order; that order defines bit positions in
/// connection bitmasks.
#[derive(Debug, Clone)]
pub struct OffsetSpace {
    d: usize,
    radius: i32,
    offsets: Vec<CellOffset>,
    table: Vec<u32>,
    neg: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl OffsetSpace {
    fn build(d: usize, radius: i32, keep: impl Fn(&[i32]) -> bool) -> Self {
        let width = (2 * radius + 1) as usize;
        let total = width.pow(d as u32);
        let mut table = vec![ABSENT; total];
        let mut offsets = Vec::new();
        let mut cur = vec![-radius; d];
        // odometer over the cube, last axis fastest => lexicographic order
        for slot in table.iter_mut() {
            if cur.iter().any(|&x| x != 0) && keep(&cur) {
                *slot = offsets.len() as u32;
                offsets.push(CellCoord(cur.clone()));
            }
            for axis in (0..d).rev() {
                cur[axis] += 1;
                if cur[axis] <= radius {
                    break;
                }
                cur[axis] = -radius;
            }
        }
        let mut space = Self {
            d,
            radius,
            offsets,
            table,
            neg: Vec::new(),
        };
        space.neg = space
            .offsets
            .iter()
            .map(|o| space.index_of(&o.neg().0).map_or(ABSENT, |i| i as u32))
            .collect();
        space
    }

    /// Offsets whose minimum cell gap is strictly below the range threshold.
    pub fn envelope(d: usize) -> Self {
        let r = envelope_radius(d, false);
        Self::build(d, r, |o| gap_units(o) < d as i64)
    }

    /// Offsets whose minimum cell gap is at most the range threshold. Used as the
    /// candidate set for range queries so that points sitting exactly on cell
    /// boundaries are never missed by floating-point cell assignment.
    pub fn search(d: usize) -> Self {
        let r = envelope_radius(d, true);
        Self::build(d, r, |o| gap_units(o) <= d as i64)
    }

    /// All non-zero offsets with max-norm at most `radius`.
    pub fn cube(d: usize, radius: i32) -> Self {
        Self::build(d, radius, |_| true)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> i32 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offsets(&self) -> &[CellOffset] {
        &self.offsets
    }

    pub fn get(&self, i: usize) -> &CellOffset {
        &self.offsets[i]
    }

    pub fn contains(&self, o: &[i32]) -> bool {
        self.index_of(o).is_some()
    }

    pub fn index_of(&self, o: &[i32]) -> Option<usize> {
        if o.len() != self.d {
            return None;
        }
        let width = (2 * self.radius + 1) as usize;
        let mut idx = 0usize;
        for &x in o {
            if x < -self.radius || x > self.radius {
                return None;
            }
            idx = idx * width + (x + self.radius) as usize;
        }
        match self.table[idx] {
            ABSENT => None,
            i => Some(i as usize),
        }
    }

    /// Index of the negated offset.
    pub fn neg_index(&self, i: usize) -> usize {
        self.neg[i] as usize
    }
}

fn envelope_radius(d: usize, inclusive: bool) -> i32 {
    // largest k with (k-1)^2 < d (or <= d)
    let mut k = 1i64;
    loop {
        let g = k * k; // gap units of offset k+1 on one axis
        let fits = if inclusive {
            g <= d as i64
        } else {
            g < d as i64
        };
        if !fits {
            return k as i32;
        }
        k += 1;
    }
}

/// Offsets `o` with `min_cell_gap(c, c + o) < range_threshold`, in lexicographic order.
pub fn neighbor_cell_envelope(g: &GridSpec) -> OffsetSpace {
    OffsetSpace::envelope(g.d)
}

/// Max-norm radius of the connection index space at a resolution level.
pub(crate) fn level_radius(d: usize, level: u8, rho: u32) -> i32 {
    let mut r = envelope_radius(d, false) as i64;
    for _ in 0..level {
        r = (r + rho as i64 - 1) / rho as i64;
    }
    r as i32
}

/// Connection index space of a level: the neighbor envelope at level 0, the cube of
/// coarsened envelope radius above it. Cached per `(d, level, rho)`.
pub fn offset_space(d: usize, level: u8, rho: u32) -> Arc<OffsetSpace> {
    type Cache = Mutex<HashMap<(usize, u8, u32), Arc<OffsetSpace>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let key = if level == 0 {
        (d, 0, 0)
    } else {
        (d, level, rho)
    };
    let cache = CACHE.get_or_init(Default::default);
    if let Some(s) = cache.lock().unwrap().get(&key) {
        return Arc::clone(s);
    }
    let space = Arc::new(if level == 0 {
        OffsetSpace::envelope(d)
    } else {
        OffsetSpace::cube(d, level_radius(d, level, rho))
    });
    cache.lock().unwrap().insert(key, Arc::clone(&space));
    space
}
