//! Groups a raw record stream into slides and feeds them to an [`Engine`].

use serde::{Deserialize, Serialize};

use crate::engine::{ClusterOutput, Engine, EngineConfig};
use crate::error::{Error, Result};
use crate::model::{PointId, Stamp, StreamPoint, WindowIndex, WindowKind};

/// What to do with a record whose stamp is older than the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutOfOrderPolicy {
    #[default]
    Reject,
    /// Buffer and sort by stamp when the slide closes. Records older than the open
    /// slide are still rejected.
    SortWithinSlide,
}

/// Clusters of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowOutput {
    pub window_index: WindowIndex,
    pub clusters: Vec<ClusterOutput>,
    /// All live points of the window, when capture is enabled.
    pub points: Option<Vec<StreamPoint>>,
}

impl WindowOutput {
    /// Member points of cluster `i`. Requires captured points.
    pub fn member_points(&self, i: usize) -> Option<Vec<StreamPoint>> {
        let pts = self.points.as_ref()?;
        let members = &self.clusters.get(i)?.members;
        Some(
            pts.iter()
                .filter(|p| members.binary_search(&p.id).is_ok())
                .cloned()
                .collect(),
        )
    }
}

#[derive(Debug)]
pub struct WindowDriver {
    config: EngineConfig,
    engine: Option<Engine>,
    policy: OutOfOrderPolicy,
    capture_points: bool,
    pending: Vec<StreamPoint>,
    last_t: Option<Stamp>,
    seq: u64,
}

impl WindowDriver {
    /// Count-based windows stamp records with their 1-based arrival index and ignore the
    /// input stamp. Time-based windows start just before the first record unless
    /// [`with_origin`](Self::with_origin) is used.
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        let count = config.window.kind == WindowKind::Count;
        let mut d = Self {
            config,
            engine: None,
            policy: OutOfOrderPolicy::Reject,
            capture_points: false,
            pending: Vec::new(),
            last_t: None,
            seq: 0,
        };
        if count {
            d.config.origin = 0;
            d.engine = Some(Engine::new(d.config.clone())?);
        }
        Ok(d)
    }

    pub fn with_origin(mut self, origin: Stamp) -> Result<Self> {
        if self
            .engine
            .as_ref()
            .is_some_and(|e| e.stats().points_ingested > 0)
        {
            return Err(Error::InvalidParameter(
                "origin must be set before any record".into(),
            ));
        }
        self.config.origin = origin;
        self.engine = Some(Engine::new(self.config.clone())?);
        Ok(self)
    }

    pub fn with_policy(mut self, policy: OutOfOrderPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn capture_points(mut self, on: bool) -> Self {
        self.capture_points = on;
        self
    }

    pub fn engine(&self) -> Option<&Engine> {
        self.engine.as_ref()
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Number of records accepted so far.
    pub fn records_seen(&self) -> u64 {
        self.seq
    }

    /// Feed one record; returns the windows it closes.
    pub fn push(
        &mut self,
        id: Option<PointId>,
        t: Stamp,
        coords: Vec<f64>,
    ) -> Result<Vec<WindowOutput>> {
        let count = self.config.window.kind == WindowKind::Count;
        let t = if count { self.seq as Stamp + 1 } else { t };
        let id = id.unwrap_or(self.seq + 1);
        if coords.len() != self.config.grid.d {
            return Err(Error::DimensionMismatch {
                expected: self.config.grid.d,
                actual: coords.len(),
            });
        }
        if self.engine.is_none() {
            self.config.origin = t - 1;
            self.engine = Some(Engine::new(self.config.clone())?);
        }
        let mut out = Vec::new();
        let (lo, _) = self.engine.as_ref().unwrap().fresh_interval();
        if t <= lo {
            return Err(Error::OutOfOrder {
                id,
                t,
                last: self.last_t.unwrap_or(lo),
            });
        }
        if let Some(last) = self.last_t {
            if t < last && self.policy == OutOfOrderPolicy::Reject {
                return Err(Error::OutOfOrder { id, t, last });
            }
        }
        loop {
            let (_, hi) = self.engine.as_ref().unwrap().fresh_interval();
            if t <= hi {
                break;
            }
            out.extend(self.flush()?);
        }
        self.pending.push(StreamPoint::new(id, t, coords));
        self.last_t = Some(self.last_t.map_or(t, |l| l.max(t)));
        self.seq += 1;
        let (_, hi) = self.engine.as_ref().unwrap().fresh_interval();
        if count && t == hi {
            out.extend(self.flush()?);
        }
        Ok(out)
    }

    /// Close the stream. A partial time-based slide is processed; a partial count-based
    /// slide is dropped.
    pub fn finish(&mut self) -> Result<Vec<WindowOutput>> {
        if self.config.window.kind == WindowKind::Count || self.pending.is_empty() {
            self.pending.clear();
            return Ok(Vec::new());
        }
        Ok(self.flush()?.into_iter().collect())
    }

    fn flush(&mut self) -> Result<Option<WindowOutput>> {
        let mut batch = std::mem::take(&mut self.pending);
        if self.policy == OutOfOrderPolicy::SortWithinSlide {
            batch.sort_by_key(|p| p.t);
        }
        let engine = self.engine.as_mut().unwrap();
        let Some(clusters) = engine.ingest_slide(batch)? else {
            return Ok(None);
        };
        let points = self
            .capture_points
            .then(|| engine.live_points().cloned().collect());
        Ok(Some(WindowOutput {
            window_index: engine.window_index(),
            clusters,
            points,
        }))
    }
}
