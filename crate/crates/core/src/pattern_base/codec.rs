//! Compact binary encoding of summaries.
//!
//! ```text
//! header  "SGSB" | version u16 | d u8 | level u8 | rho u32 | count u32      (16 bytes)
//! cell    location i32 x d | population u32 | status u8 | connection bitmask
//! ```
//!
//! All integers are little-endian. The bitmask has one bit per offset of the level's
//! connection space in lexicographic order (bit `i` is `byte[i / 8] >> (i % 8)`), so a
//! cell always takes [`cell_bytes`](crate::multires::cell_bytes) bytes.

use crate::error::{Error, Result};
use crate::model::{offset_space, CellCoord, CellStatus, GridSpec, StreamPoint, MAX_DIM};
use crate::multires::cell_bytes;
use crate::sgs::{SgsCell, SgsSummary};

pub const MAGIC: &[u8; 4] = b"SGSB";
pub const VERSION: u16 = 1;
pub const HEADER_BYTES: usize = 16;

fn status_byte(s: CellStatus) -> u8 {
    match s {
        CellStatus::Core => 0,
        CellStatus::Edge => 1,
        CellStatus::Noise => 2,
    }
}

fn byte_status(b: u8) -> Option<CellStatus> {
    match b {
        0 => Some(CellStatus::Core),
        1 => Some(CellStatus::Edge),
        2 => Some(CellStatus::Noise),
        _ => None,
    }
}

/// Encode one cell at `level` into `out`.
pub fn encode_cell(c: &SgsCell, d: usize, level: u8, rho: u32, out: &mut Vec<u8>) -> Result<()> {
    if c.location.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: c.location.dim(),
        });
    }
    let space = offset_space(d, level, rho);
    for &x in c.location.as_slice() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&c.population.to_le_bytes());
    out.push(status_byte(c.status));
    let start = out.len();
    out.resize(start + space.len().div_ceil(8), 0);
    for o in &c.connections {
        let i = space.index_of(o.as_slice()).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "connection offset {:?} of cell {:?} is outside the level-{level} space",
                o.0, c.location.0
            ))
        })?;
        out[start + i / 8] |= 1 << (i % 8);
    }
    Ok(())
}

/// Decode one cell from the front of `buf`; returns the cell and the bytes consumed.
pub fn decode_cell(buf: &[u8], d: usize, level: u8, rho: u32) -> Result<(SgsCell, usize)> {
    let size = cell_bytes(d, level, rho) as usize;
    if buf.len() < size {
        return Err(Error::InvalidParameter(format!(
            "truncated cell: need {size} bytes, have {}",
            buf.len()
        )));
    }
    let word = |at: usize| <[u8; 4]>::try_from(&buf[at..at + 4]).unwrap();
    let location: Vec<i32> = (0..d).map(|i| i32::from_le_bytes(word(4 * i))).collect();
    let population = u32::from_le_bytes(word(4 * d));
    let status = byte_status(buf[4 * d + 4])
        .ok_or_else(|| Error::InvalidParameter(format!("bad status byte {}", buf[4 * d + 4])))?;
    let space = offset_space(d, level, rho);
    let mask = &buf[4 * d + 5..size];
    let connections = (0..space.len())
        .filter(|i| mask[i / 8] >> (i % 8) & 1 == 1)
        .map(|i| space.get(i).clone())
        .collect();
    Ok((
        SgsCell {
            location: CellCoord(location),
            population,
            status,
            connections,
        },
        size,
    ))
}

pub fn encode_sgs(s: &SgsSummary) -> Result<Vec<u8>> {
    let d = s.dim();
    let mut out =
        Vec::with_capacity(HEADER_BYTES + s.cells.len() * cell_bytes(d, s.level, s.rho) as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(d as u8);
    out.push(s.level);
    out.extend_from_slice(&s.rho.to_le_bytes());
    out.extend_from_slice(&(s.cells.len() as u32).to_le_bytes());
    for c in &s.cells {
        encode_cell(c, d, s.level, s.rho, &mut out)?;
    }
    Ok(out)
}

/// Decoded cells plus the header's level and rho. The grid and cluster id live in
/// the JSON record, not the binary file.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedCells {
    pub d: usize,
    pub level: u8,
    pub rho: u32,
    pub cells: Vec<SgsCell>,
}

pub fn decode_sgs(buf: &[u8]) -> Result<DecodedCells> {
    let bad = |m: String| Error::InvalidParameter(m);
    if buf.len() < HEADER_BYTES || &buf[..4] != MAGIC {
        return Err(bad("missing SGSB header".into()));
    }
    let version = u16::from_le_bytes([buf[4], buf[5]]);
    if version != VERSION {
        return Err(bad(format!("unsupported encoding version {version}")));
    }
    let d = buf[6] as usize;
    if d == 0 || d > MAX_DIM {
        return Err(bad(format!("bad dimension {d}")));
    }
    let level = buf[7];
    let rho = u32::from_le_bytes(buf[8..12].try_into().unwrap());
    if rho < 2 {
        return Err(bad(format!("bad rho {rho}")));
    }
    let count = u32::from_le_bytes(buf[12..16].try_into().unwrap()) as usize;
    let size = cell_bytes(d, level, rho) as usize;
    if buf.len() != HEADER_BYTES + count * size {
        return Err(bad(format!(
            "expected {} bytes for {count} cells, found {}",
            HEADER_BYTES + count * size,
            buf.len()
        )));
    }
    let mut cells = Vec::with_capacity(count);
    let mut at = HEADER_BYTES;
    for _ in 0..count {
        let (c, n) = decode_cell(&buf[at..], d, level, rho)?;
        cells.push(c);
        at += n;
    }
    Ok(DecodedCells {
        d,
        level,
        rho,
        cells,
    })
}

/// Rebuild a summary from decoded cells and the metadata kept alongside them.
pub fn assemble(decoded: DecodedCells, cluster_id: u64, grid: GridSpec) -> Result<SgsSummary> {
    if grid.d != decoded.d {
        return Err(Error::DimensionMismatch {
            expected: grid.d,
            actual: decoded.d,
        });
    }
    Ok(SgsSummary {
        cluster_id,
        level: decoded.level,
        rho: decoded.rho,
        grid,
        cells: decoded.cells,
    })
}

/// Bytes of the full representation: id u64, stamp i64 and `d` f64 coordinates per point.
pub const fn point_bytes(d: usize) -> u64 {
    16 + 8 * d as u64
}

pub fn encode_points(points: &[StreamPoint]) -> Vec<u8> {
    let mut out = Vec::new();
    for p in points {
        out.extend_from_slice(&p.id.to_le_bytes());
        out.extend_from_slice(&p.t.to_le_bytes());
        for x in &p.coords {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}
