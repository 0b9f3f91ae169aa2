use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::debug;
use serde::{Deserialize, Serialize};

use super::codec::{self, decode_sgs, encode_sgs};
use super::feature_grid::{FeatureGrid, Interval};
use super::policy::{ArchivePolicy, Resolution};
use super::record::{feature_vector, Mbr, PatternRecord};
use super::rtree::RTree;
use crate::engine::EngineConfig;
use crate::error::{Error, Result};
use crate::model::{StreamPoint, WindowIndex};
use crate::multires::{compress_to, select_resolution};
use crate::sgs::SgsSummary;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";
pub const RECORDS_DIR: &str = "records";

/// Everything that determines how clusters enter the base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseConfig {
    pub engine: EngineConfig,
    /// Coarsest level a byte budget may select.
    pub max_level: u8,
    pub policy: ArchivePolicy,
    pub seed: u64,
}

impl BaseConfig {
    pub fn validate(&self) -> Result<()> {
        self.engine.validate()?;
        self.policy.validate()?;
        if let Resolution::Level(l) = self.policy.resolution {
            if l > self.max_level {
                return Err(Error::InvalidParameter(format!(
                    "archive level {l} exceeds max level {}",
                    self.max_level
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    #[serde(flatten)]
    config: BaseConfig,
    record_count: u64,
    /// Number of clusters offered so far, admitted or not.
    decisions: u64,
}

/// Archived clusters with a locational R-tree over all records and one feature grid
/// per resolution level. Record ids are dense, starting at 0.
#[derive(Debug, Clone)]
pub struct PatternBase {
    config: BaseConfig,
    records: Vec<PatternRecord>,
    decisions: u64,
    rtree: RTree,
    features: BTreeMap<u8, FeatureGrid>,
}

impl PatternBase {
    pub fn new(config: BaseConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            records: Vec::new(),
            decisions: 0,
            rtree: RTree::new(),
            features: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &BaseConfig {
        &self.config
    }

    /// The time-based stream origin is only known after the first record.
    pub fn set_origin(&mut self, origin: crate::model::Stamp) {
        self.config.engine.origin = origin;
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn decisions(&self) -> u64 {
        self.decisions
    }

    pub fn records(&self) -> &[PatternRecord] {
        &self.records
    }

    pub fn get(&self, id: u64) -> Result<&PatternRecord> {
        self.records.get(id as usize).ok_or(Error::NotFound(id))
    }

    /// Ids of records stored at `level`, ascending.
    pub fn ids_at(&self, level: u8) -> Vec<u64> {
        self.records
            .iter()
            .filter(|r| r.level() == level)
            .map(|r| r.id)
            .collect()
    }

    /// Levels that hold at least one record, finest first.
    pub fn levels(&self) -> impl Iterator<Item = u8> + '_ {
        self.features.keys().copied()
    }

    /// Offer a cluster to the archive. Returns the new id, or `None` when the policy
    /// skips it.
    pub fn archive(
        &mut self,
        sgs: &SgsSummary,
        window_index: WindowIndex,
        points: Option<Vec<StreamPoint>>,
    ) -> Result<Option<u64>> {
        let n = self.decisions;
        self.decisions += 1;
        if !self.config.policy.admits(sgs, self.config.seed, n) {
            debug!(
                "cluster {} of window {window_index} skipped",
                sgs.cluster_id
            );
            return Ok(None);
        }
        let level = match self.config.policy.resolution {
            Resolution::Level(l) => l,
            Resolution::Budget(b) => select_resolution(sgs, b, self.config.max_level)?,
        };
        let stored = compress_to(sgs, level)?;
        let mut rec = PatternRecord::new(0, window_index, stored)?;
        rec.points = points;
        Ok(Some(self.insert(rec)))
    }

    /// Add a record as is, assigning the next id.
    pub fn insert(&mut self, mut rec: PatternRecord) -> u64 {
        let id = self.records.len() as u64;
        rec.id = id;
        self.index(&rec);
        self.records.push(rec);
        id
    }

    fn index(&mut self, rec: &PatternRecord) {
        self.rtree.insert(rec.mbr.clone(), rec.id);
        self.features
            .entry(rec.level())
            .or_default()
            .insert(rec.id, rec.features.as_array());
    }

    /// Ids of records whose MBR intersects `q`, ascending.
    pub fn locate_overlapping(&self, q: &Mbr) -> Vec<u64> {
        let mut ids = self.rtree.query(q);
        ids.sort_unstable();
        ids
    }

    /// Ids of records at `level` whose features lie in `ranges` (volume, core count,
    /// density, connectivity), ascending.
    pub fn feature_range_search_at(&self, level: u8, ranges: &[Interval; 4]) -> Vec<u64> {
        self.features
            .get(&level)
            .map_or_else(Vec::new, |g| g.query(ranges))
    }

    /// As [`feature_range_search_at`](Self::feature_range_search_at) over every level.
    pub fn feature_range_search(&self, ranges: &[Interval; 4]) -> Vec<u64> {
        let mut ids: Vec<u64> = self
            .features
            .values()
            .flat_map(|g| g.query(ranges))
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Write the base under `dir`: `manifest.json` plus `records/NNNNNNNN.json` and
    /// `records/NNNNNNNN.sgsb` per record. Record files left from a larger base are removed.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let rdir = dir.join(RECORDS_DIR);
        fs::create_dir_all(&rdir).map_err(|e| Error::archive(&rdir, e))?;
        for entry in fs::read_dir(&rdir).map_err(|e| Error::archive(&rdir, e))? {
            let path = entry.map_err(|e| Error::archive(&rdir, e))?.path();
            let stale = record_file_id(&path).is_some_and(|id| id >= self.records.len() as u64);
            if stale {
                fs::remove_file(&path).map_err(|e| Error::archive(&path, e))?;
            }
        }
        for rec in &self.records {
            let path = rdir.join(format!("{:08}.json", rec.id));
            write_json(&path, rec)?;
            let bin = rdir.join(format!("{:08}.sgsb", rec.id));
            let bytes = encode_sgs(&rec.sgs).map_err(|e| Error::archive(&bin, e))?;
            fs::write(&bin, bytes).map_err(|e| Error::archive(&bin, e))?;
        }
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            record_count: self.records.len() as u64,
            decisions: self.decisions,
        };
        write_json(&dir.join(MANIFEST), &manifest)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let mpath = dir.join(MANIFEST);
        let raw = fs::read(&mpath).map_err(|e| Error::archive(&mpath, e))?;
        let probe: serde_json::Value =
            serde_json::from_slice(&raw).map_err(|e| Error::archive(&mpath, e))?;
        match probe.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == FORMAT_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::archive(
                    &mpath,
                    format!("format version {v} is not supported (expected {FORMAT_VERSION})"),
                ))
            }
            None => return Err(Error::archive(&mpath, "missing format_version")),
        }
        let m: Manifest = serde_json::from_value(probe).map_err(|e| Error::archive(&mpath, e))?;
        m.config.validate().map_err(|e| Error::archive(&mpath, e))?;
        let mut base = PatternBase::new(m.config)?;
        base.decisions = m.decisions;
        let rdir = dir.join(RECORDS_DIR);
        for id in 0..m.record_count {
            let rec = load_record(&rdir, id, &base.config)?;
            base.index(&rec);
            base.records.push(rec);
        }
        Ok(base)
    }
}

fn record_file_id(path: &Path) -> Option<u64> {
    let ext = path.extension()?.to_str()?;
    if ext != "json" && ext != "sgsb" {
        return None;
    }
    let stem = path.file_stem()?.to_str()?;
    if stem.len() != 8 || !stem.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    stem.parse().ok()
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::archive(path, e))?;
    s.push('\n');
    fs::write(path, s).map_err(|e| Error::archive(path, e))
}

fn load_record(rdir: &Path, id: u64, config: &BaseConfig) -> Result<PatternRecord> {
    let path = rdir.join(format!("{id:08}.json"));
    let raw = fs::read(&path).map_err(|e| Error::archive(&path, e))?;
    let rec: PatternRecord = serde_json::from_slice(&raw).map_err(|e| Error::archive(&path, e))?;
    let fail = |m: String| Error::archive(&path, m);
    if rec.id != id {
        return Err(fail(format!("holds record id {} instead of {id}", rec.id)));
    }
    if rec.sgs.is_empty() {
        return Err(fail("summary has no cells".into()));
    }
    if rec.sgs.grid != config.engine.grid || rec.sgs.rho != config.engine.rho {
        return Err(fail("grid or rho differs from the manifest".into()));
    }
    if rec
        .sgs
        .cells
        .iter()
        .any(|c| c.location.dim() != rec.sgs.dim())
    {
        return Err(fail("cell dimension differs from the grid".into()));
    }
    let mbr = Mbr::of(&rec.sgs).map_err(|e| fail(e.to_string()))?;
    let features = feature_vector(&rec.sgs).map_err(|e| fail(e.to_string()))?;
    if mbr != rec.mbr || features != rec.features {
        return Err(fail("stored mbr or features do not match the cells".into()));
    }
    let bin = rdir.join(format!("{id:08}.sgsb"));
    if bin.exists() {
        let bytes = fs::read(&bin).map_err(|e| Error::archive(&bin, e))?;
        let decoded = decode_sgs(&bytes).map_err(|e| Error::archive(&bin, e))?;
        let s = codec::assemble(decoded, rec.sgs.cluster_id, rec.sgs.grid.clone())
            .map_err(|e| Error::archive(&bin, e))?;
        if s != rec.sgs {
            return Err(Error::archive(&bin, "cells differ from the JSON record"));
        }
    }
    Ok(rec)
}
