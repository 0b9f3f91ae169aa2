//! Career lifespans and the bucketed non-core-career neighbor list.

use std::collections::VecDeque;

use crate::model::{Lifespan, PointId, WindowIndex};

/// Windows in which a point with lifespan `p_ls` stays core, given the neighborship
/// lifespans of its current neighbors: capped by its own lifespan and by the
/// `count_threshold`-th largest neighborship lifespan.
pub fn core_lifespan(p_ls: Lifespan, neighbor_ls: &[Lifespan], count_threshold: usize) -> Lifespan {
    match kth_largest(neighbor_ls.iter().copied(), count_threshold) {
        Some(l) => p_ls.min(l),
        None => Lifespan::ZERO,
    }
}

/// Windows in which a point is an edge point: the windows right after its core career
/// during which some neighbor is still core.
pub fn edge_lifespan(
    p_ls: Lifespan,
    p_core_ls: Lifespan,
    neighbor_core_ls: &[Lifespan],
) -> Lifespan {
    let Some(best) = neighbor_core_ls.iter().copied().max() else {
        return Lifespan::ZERO;
    };
    Lifespan(p_ls.min(best).get().saturating_sub(p_core_ls.get()))
}

/// The `k`-th largest value (1-based), `None` when fewer than `k` values exist.
pub(crate) fn kth_largest<T: Ord + Copy>(
    values: impl IntoIterator<Item = T>,
    k: usize,
) -> Option<T> {
    if k == 0 {
        return None;
    }
    let mut v: Vec<T> = values.into_iter().collect();
    if v.len() < k {
        return None;
    }
    let idx = v.len() - k;
    let (_, kth, _) = v.select_nth_unstable(idx);
    Some(*kth)
}

/// Neighbors that outlive a point's core career, bucketed by the last window in which
/// the neighborship holds.
///
/// Bucket `i` holds neighbors whose neighborship ends at window `first + i`. Both window
/// advance (expired neighbors) and core-career extension (neighbors that are now only
/// relevant inside the core career) remove whole buckets from the front.
#[derive(Debug, Clone, Default)]
pub struct CareerList {
    first: WindowIndex,
    buckets: VecDeque<Vec<PointId>>,
}

impl CareerList {
    pub fn new(now: WindowIndex) -> Self {
        Self {
            first: now,
            buckets: VecDeque::new(),
        }
    }

    /// Drop buckets whose neighborship ended before `now`.
    pub fn prune(&mut self, now: WindowIndex) {
        self.drop_through(now - 1);
    }

    /// Drop every entry whose neighborship ends at or before `window`.
    pub fn drop_through(&mut self, window: WindowIndex) {
        while self.first <= window {
            if self.buckets.pop_front().is_none() {
                self.first = window + 1;
                return;
            }
            self.first += 1;
        }
    }

    /// Add `id`, a neighbor whose neighborship with the owner ends at window `until`.
    pub fn push(&mut self, id: PointId, until: WindowIndex) {
        debug_assert!(until >= self.first, "bucket {until} before {}", self.first);
        let idx = (until - self.first) as usize;
        if idx >= self.buckets.len() {
            self.buckets.resize_with(idx + 1, Vec::new);
        }
        self.buckets[idx].push(id);
    }

    /// Entries whose neighborship still holds at `now`, with their last window.
    pub fn live(&self, now: WindowIndex) -> impl Iterator<Item = (PointId, WindowIndex)> + '_ {
        let first = self.first;
        self.buckets
            .iter()
            .enumerate()
            .map(move |(i, b)| (first + i as WindowIndex, b))
            .filter(move |(w, _)| *w >= now)
            .flat_map(|(w, b)| b.iter().map(move |&id| (id, w)))
    }

    pub fn live_len(&self, now: WindowIndex) -> usize {
        let skip = (now - self.first).max(0) as usize;
        self.buckets.iter().skip(skip).map(Vec::len).sum()
    }
}
