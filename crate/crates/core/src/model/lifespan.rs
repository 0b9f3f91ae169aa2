use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Stamp, WindowSpec};
use crate::error::{Error, Result};

/// Zero-based index of a sliding window in a run.
pub type WindowIndex = i64;

/// Number of windows, counted from the current one inclusive, in which a property holds.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Lifespan(pub u32);

impl Lifespan {
    pub const ZERO: Lifespan = Lifespan(0);

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn is_live(self) -> bool {
        self.0 >= 1
    }

    /// Lifespan of something valid through window `until`, seen from window `now`.
    pub fn until(until: WindowIndex, now: WindowIndex) -> Self {
        Lifespan((until - now + 1).max(0) as u32)
    }
}

impl fmt::Display for Lifespan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    a.div_euclid(b) + i64::from(a.rem_euclid(b) != 0)
}

/// Index of the last window containing stamp `t` when window 0 starts (exclusively) at `origin`.
pub fn last_window(t: Stamp, origin: Stamp, slide: i64) -> WindowIndex {
    ceil_div(t - origin, slide) - 1
}

/// Windows, counted from the one starting at `window_start`, in which a point stamped `t` survives.
pub fn point_lifespan(t: Stamp, window_start: Stamp, w: &WindowSpec) -> Result<Lifespan> {
    if t <= window_start || t > window_start + w.win {
        return Err(Error::OutsideWindow {
            id: 0,
            t,
            lo: window_start,
            hi: window_start + w.win,
        });
    }
    Ok(Lifespan(ceil_div(t - window_start, w.slide) as u32))
}

pub fn neighborship_lifespan(a: Lifespan, b: Lifespan) -> Lifespan {
    a.min(b)
}
