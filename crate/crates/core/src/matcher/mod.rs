//! Cluster matching queries over a pattern base: a feature- or location-indexed filter
//! followed by a cell-level refinement.

mod align;
mod distance;

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use align::{search_alignment, start_alignment, Alignment};
pub use distance::{
    cell_difference, cell_level_distance, cell_weights, dist_feature, dist_location,
    feature_distance, feature_range_bounds, summary_distance_with,
};

use crate::error::{Error, Result};
use crate::multires::compress_to;
use crate::pattern_base::{
    feature_vector, FeatureVector, Interval, Mbr, PatternBase, PatternRecord,
};
use crate::sgs::SgsSummary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchQuery {
    pub target: SgsSummary,
    /// Whether the absolute position of the clusters matters.
    pub position_sensitive: bool,
    /// Weights of volume, core count, average density and average connectivity.
    pub weights: [f64; 4],
    pub threshold: f64,
    /// Maximum number of alignments tried per candidate when not position sensitive.
    pub align_budget: usize,
}

impl MatchQuery {
    pub fn new(
        target: SgsSummary,
        position_sensitive: bool,
        weights: [f64; 4],
        threshold: f64,
    ) -> Result<Self> {
        let q = Self {
            target,
            position_sensitive,
            weights,
            threshold,
            align_budget: 500,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn with_budget(mut self, budget: usize) -> Result<Self> {
        self.align_budget = budget;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "weights must be non-negative, got {:?}",
                self.weights
            )));
        }
        let s: f64 = self.weights.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {s}, expected 1"
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidParameter(format!(
                "threshold must be in [0, 1], got {}",
                self.threshold
            )));
        }
        if self.align_budget == 0 {
            return Err(Error::InvalidParameter(
                "alignment budget must be positive".into(),
            ));
        }
        if self.target.is_empty() {
            return Err(Error::EmptySummary);
        }
        Ok(())
    }

    /// Summary-level distance between the target (at `b`'s level) and `b`.
    pub fn summary_distance(&self, a: &SgsSummary, b: &SgsSummary) -> Result<f64> {
        summary_distance_with(
            a,
            &feature_vector(a)?,
            b,
            &feature_vector(b)?,
            self.position_sensitive,
            &self.weights,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub id: u64,
    pub summary_distance: f64,
    pub cell_distance: f64,
    /// Shift applied to the target's cells to line them up with the record's.
    pub alignment: Vec<i32>,
}

/// Target coarsened to one archive level.
struct LevelTarget {
    sgs: SgsSummary,
    features: FeatureVector,
}

impl LevelTarget {
    fn new(q: &MatchQuery, level: u8) -> Result<Self> {
        let sgs = compress_to(&q.target, level)?;
        let features = feature_vector(&sgs)?;
        Ok(Self { sgs, features })
    }
}

/// Run both stages against one record; `None` when either distance exceeds the threshold.
fn evaluate(q: &MatchQuery, t: &LevelTarget, rec: &PatternRecord) -> Result<Option<MatchResult>> {
    let sd = summary_distance_with(
        &t.sgs,
        &t.features,
        &rec.sgs,
        &rec.features,
        q.position_sensitive,
        &q.weights,
    )?;
    if sd > q.threshold {
        return Ok(None);
    }
    let (alignment, cd) = if q.position_sensitive {
        let zero = vec![0; t.sgs.dim()];
        let d = cell_level_distance(&t.sgs, &rec.sgs, &zero, &q.weights)?;
        (zero, d)
    } else {
        let a = search_alignment(&t.sgs, &rec.sgs, &q.weights, q.align_budget)?;
        (a.offset, a.distance)
    };
    if cd > q.threshold {
        return Ok(None);
    }
    Ok(Some(MatchResult {
        id: rec.id,
        summary_distance: sd,
        cell_distance: cd,
        alignment,
    }))
}

fn check_grid(q: &MatchQuery, base: &PatternBase) -> Result<()> {
    let cfg = &base.config().engine;
    if q.target.grid != cfg.grid || q.target.rho != cfg.rho {
        return Err(Error::InvalidParameter(
            "query target is not on the archive's grid".into(),
        ));
    }
    Ok(())
}

fn sort_results(out: &mut [MatchResult]) {
    out.sort_by(|a, b| {
        a.cell_distance
            .total_cmp(&b.cell_distance)
            .then(a.id.cmp(&b.id))
    });
}

/// Candidate ids at `level` that survive the index filter.
fn candidates(q: &MatchQuery, t: &LevelTarget, base: &PatternBase, level: u8) -> Result<Vec<u64>> {
    if q.position_sensitive {
        // at threshold 1 even disjoint records qualify with distance 1
        if q.threshold >= 1.0 {
            return Ok(base.ids_at(level));
        }
        let ids = base.locate_overlapping(&Mbr::of(&t.sgs)?);
        return Ok(ids
            .into_iter()
            .filter(|&id| base.records()[id as usize].level() == level)
            .collect());
    }
    let f = t.features.as_array();
    let ranges: [Interval; 4] =
        std::array::from_fn(|i| feature_range_bounds(f[i], q.weights[i], q.threshold, i < 2));
    Ok(base.feature_range_search_at(level, &ranges))
}

/// Records matching the query, ascending by cell distance then id. The target is
/// compared against records at its own level or coarser, after coarsening it to theirs.
pub fn execute_match(q: &MatchQuery, base: &PatternBase) -> Result<Vec<MatchResult>> {
    q.validate()?;
    if base.is_empty() {
        return Ok(Vec::new());
    }
    check_grid(q, base)?;
    let mut out = Vec::new();
    for level in base
        .levels()
        .filter(|&l| l >= q.target.level)
        .collect::<Vec<_>>()
    {
        let t = LevelTarget::new(q, level)?;
        for id in candidates(q, &t, base, level)? {
            if let Some(m) = evaluate(q, &t, base.get(id)?)? {
                out.push(m);
            }
        }
    }
    sort_results(&mut out);
    Ok(out)
}

/// Same criterion as [`execute_match`] applied to every record without index filtering.
pub fn exhaustive_match(q: &MatchQuery, base: &PatternBase) -> Result<Vec<MatchResult>> {
    q.validate()?;
    if base.is_empty() {
        return Ok(Vec::new());
    }
    check_grid(q, base)?;
    let mut targets: BTreeMap<u8, LevelTarget> = BTreeMap::new();
    let mut out = Vec::new();
    for rec in base.records() {
        if rec.level() < q.target.level {
            continue;
        }
        if let Entry::Vacant(e) = targets.entry(rec.level()) {
            e.insert(LevelTarget::new(q, rec.level())?);
        }
        if let Some(m) = evaluate(q, &targets[&rec.level()], rec)? {
            out.push(m);
        }
    }
    sort_results(&mut out);
    Ok(out)
}
