//! Bucket grid over 4-feature vectors. Each feature axis is cut into equal-width buckets
//! over a range that doubles whenever a value falls outside it.

use std::collections::HashMap;

const BUCKETS: usize = 32;

/// Inclusive interval; infinite ends are allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ALL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo.partial_cmp(&self.hi).is_none_or(|o| o.is_gt())
    }
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    min: f64,
    width: f64,
}

impl Axis {
    fn bucket(&self, v: f64) -> usize {
        if self.width <= 0.0 {
            return 0;
        }
        (((v - self.min) / self.width * BUCKETS as f64)
            .floor()
            .max(0.0) as usize)
            .min(BUCKETS - 1)
    }

    fn covers(&self, v: f64) -> bool {
        v >= self.min && v <= self.min + self.width
    }

    /// Smallest doubling of the range that includes `v`.
    fn grow(&mut self, v: f64) {
        let mut w = if self.width > 0.0 {
            self.width
        } else {
            (v - self.min).abs().max(1.0)
        };
        while !(v >= self.min && v <= self.min + w) {
            if v < self.min {
                self.min -= w;
            }
            w *= 2.0;
        }
        self.width = w;
    }
}

type Key = [u8; 4];

#[derive(Debug, Clone, Default)]
pub struct FeatureGrid {
    axes: Option<[Axis; 4]>,
    entries: Vec<(u64, [f64; 4])>,
    buckets: HashMap<Key, Vec<usize>>,
}

impl FeatureGrid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, id: u64, f: [f64; 4]) {
        let axes = self
            .axes
            .get_or_insert_with(|| f.map(|v| Axis { min: v, width: 0.0 }));
        let mut rebuild = false;
        for (a, &v) in axes.iter_mut().zip(&f) {
            if !a.covers(v) {
                a.grow(v);
                rebuild = true;
            }
        }
        self.entries.push((id, f));
        if rebuild {
            self.rebuild();
        } else {
            let k = self.key(&f);
            self.buckets
                .entry(k)
                .or_default()
                .push(self.entries.len() - 1);
        }
    }

    fn key(&self, f: &[f64; 4]) -> Key {
        let axes = self.axes.as_ref().unwrap();
        std::array::from_fn(|i| axes[i].bucket(f[i]) as u8)
    }

    fn rebuild(&mut self) {
        self.buckets.clear();
        for i in 0..self.entries.len() {
            let k = self.key(&self.entries[i].1);
            self.buckets.entry(k).or_default().push(i);
        }
    }

    /// Ids whose features lie in every interval, in insertion order.
    pub fn query(&self, ranges: &[Interval; 4]) -> Vec<u64> {
        let Some(axes) = &self.axes else {
            return Vec::new();
        };
        if ranges.iter().any(Interval::is_empty) {
            return Vec::new();
        }
        let mut span = [(0usize, 0usize); 4];
        let mut product = 1usize;
        for i in 0..4 {
            let a = &axes[i];
            let r = &ranges[i];
            if r.hi < a.min || r.lo > a.min + a.width {
                return Vec::new();
            }
            span[i] = (
                a.bucket(r.lo.max(a.min)),
                a.bucket(r.hi.min(a.min + a.width)),
            );
            product = product.saturating_mul(span[i].1 - span[i].0 + 1);
        }
        let in_span = |k: &Key| (0..4).all(|i| (span[i].0..=span[i].1).contains(&(k[i] as usize)));
        let mut hits: Vec<usize> = Vec::new();
        if product < self.buckets.len() {
            let mut k = span.map(|(lo, _)| lo);
            'outer: loop {
                let key: Key = k.map(|x| x as u8);
                if let Some(v) = self.buckets.get(&key) {
                    hits.extend(v);
                }
                for i in (0..4).rev() {
                    k[i] += 1;
                    if k[i] <= span[i].1 {
                        continue 'outer;
                    }
                    k[i] = span[i].0;
                }
                break;
            }
        } else {
            for (k, v) in &self.buckets {
                if in_span(k) {
                    hits.extend(v);
                }
            }
        }
        hits.sort_unstable();
        hits.into_iter()
            .filter(|&i| {
                let f = &self.entries[i].1;
                (0..4).all(|j| ranges[j].contains(f[j]))
            })
            .map(|i| self.entries[i].0)
            .collect()
    }
}
