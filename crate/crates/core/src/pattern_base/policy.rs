use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sgs::SgsSummary;

/// Which clusters get archived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Selection {
    All,
    /// Each cluster independently with probability `rate`.
    Sample {
        rate: f64,
    },
    Predicate {
        min_population: u64,
        min_volume: u64,
    },
}

impl Selection {
    pub fn validate(&self) -> Result<()> {
        if let Selection::Sample { rate } = self {
            if !(*rate > 0.0 && *rate <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "sample rate must be in (0, 1], got {rate}"
                )));
            }
        }
        Ok(())
    }
}

impl FromStr for Selection {
    type Err = Error;

    /// `all`, `sample:<rate>` or `predicate:min_pop=<n>,min_vol=<n>` (either key optional).
    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidParameter(format!("policy '{s}': {m}"));
        let sel = if s == "all" {
            Selection::All
        } else if let Some(r) = s.strip_prefix("sample:") {
            Selection::Sample {
                rate: r.parse().map_err(|_| bad("rate is not a number"))?,
            }
        } else if let Some(rest) = s.strip_prefix("predicate:") {
            let (mut min_population, mut min_volume) = (0, 0);
            for kv in rest.split(',').filter(|x| !x.is_empty()) {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| bad("expected key=value"))?;
                let v: u64 = v.parse().map_err(|_| bad("value is not an integer"))?;
                match k {
                    "min_pop" | "min_population" => min_population = v,
                    "min_vol" | "min_volume" => min_volume = v,
                    _ => return Err(bad("unknown key")),
                }
            }
            Selection::Predicate {
                min_population,
                min_volume,
            }
        } else {
            return Err(bad("expected all, sample:<rate> or predicate:..."));
        };
        sel.validate()?;
        Ok(sel)
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selection::All => write!(f, "all"),
            Selection::Sample { rate } => write!(f, "sample:{rate}"),
            Selection::Predicate {
                min_population,
                min_volume,
            } => write!(f, "predicate:min_pop={min_population},min_vol={min_volume}"),
        }
    }
}

/// Level at which admitted clusters are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Resolution {
    Level(u8),
    /// Finest level whose encoded cells fit into this many bytes.
    Budget(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchivePolicy {
    pub selection: Selection,
    pub resolution: Resolution,
}

impl Default for ArchivePolicy {
    fn default() -> Self {
        Self {
            selection: Selection::All,
            resolution: Resolution::Level(0),
        }
    }
}

impl ArchivePolicy {
    pub fn validate(&self) -> Result<()> {
        self.selection.validate()?;
        if self.resolution == Resolution::Budget(0) {
            return Err(Error::InvalidParameter(
                "byte budget must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Decision for the `n`-th cluster offered to the archive. Sampling draws from a
    /// position of the seeded stream that depends only on `n`, so replays agree.
    pub fn admits(&self, s: &SgsSummary, seed: u64, n: u64) -> bool {
        match self.selection {
            Selection::All => true,
            Selection::Sample { rate } => sample_draw(seed, n) < rate,
            Selection::Predicate {
                min_population,
                min_volume,
            } => s.total_population() >= min_population && s.volume() as u64 >= min_volume,
        }
    }
}

/// Uniform draw in `[0, 1)` for decision `n`.
pub fn sample_draw(seed: u64, n: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * n as u128);
    rng.random::<f64>()
}
