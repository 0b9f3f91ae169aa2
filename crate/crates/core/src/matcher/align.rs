//! Anytime best-first search over integer alignments.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use super::distance::cell_level_distance;
use crate::error::Result;
use crate::sgs::SgsSummary;

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub offset: Vec<i32>,
    pub distance: f64,
    /// Cell-distance evaluations spent.
    pub evaluations: usize,
}

struct Node {
    distance: f64,
    offset: Vec<i32>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // reversed: the heap pops the smallest distance, then the smallest offset
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .distance
            .total_cmp(&self.distance)
            .then_with(|| other.offset.cmp(&self.offset))
    }
}

/// Alignment that puts the centers of the two location bounding boxes on top of each
/// other, rounded to whole cells.
pub fn start_alignment(a: &SgsSummary, b: &SgsSummary) -> Vec<i32> {
    match (a.location_bounds(), b.location_bounds()) {
        (Some((alo, ahi)), Some((blo, bhi))) => (0..a.dim())
            .map(|i| {
                let twice = (blo[i] as i64 + bhi[i] as i64) - (alo[i] as i64 + ahi[i] as i64);
                (twice as f64 / 2.0).round() as i32
            })
            .collect(),
        _ => vec![0; a.dim()],
    }
}

/// Search for the alignment of `b` against `a` with the smallest cell distance, using
/// at most `budget` evaluations (at least one). Expansion stops early at distance 0 or
/// once expanding the most promising alignment improves nothing.
pub fn search_alignment(
    a: &SgsSummary,
    b: &SgsSummary,
    weights: &[f64; 4],
    budget: usize,
) -> Result<Alignment> {
    let start = start_alignment(a, b);
    let d0 = cell_level_distance(a, b, &start, weights)?;
    let mut best = Alignment {
        offset: start.clone(),
        distance: d0,
        evaluations: 1,
    };
    let mut visited: HashSet<Vec<i32>> = HashSet::from([start.clone()]);
    let mut heap = BinaryHeap::from([Node {
        distance: d0,
        offset: start,
    }]);
    while let Some(node) = heap.pop() {
        if best.distance == 0.0 || best.evaluations >= budget {
            break;
        }
        let mut improved = false;
        'axes: for axis in 0..node.offset.len() {
            for step in [-1, 1] {
                let mut next = node.offset.clone();
                next[axis] += step;
                if !visited.insert(next.clone()) {
                    continue;
                }
                if best.evaluations >= budget {
                    break 'axes;
                }
                let d = cell_level_distance(a, b, &next, weights)?;
                best.evaluations += 1;
                if d < best.distance || (d == best.distance && next < best.offset) {
                    improved |= d < best.distance;
                    best.distance = d;
                    best.offset = next.clone();
                }
                heap.push(Node {
                    distance: d,
                    offset: next,
                });
                if d == 0.0 {
                    break 'axes;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::random_sgs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const W: [f64; 4] = [0.25; 4];

    /// Smallest distance over every alignment within the combined location span.
    fn exhaustive(a: &SgsSummary, b: &SgsSummary) -> (Vec<i32>, f64) {
        let (alo, ahi) = a.location_bounds().unwrap();
        let (blo, bhi) = b.location_bounds().unwrap();
        let ranges: Vec<(i32, i32)> = (0..a.dim())
            .map(|i| (blo[i] - ahi[i], bhi[i] - alo[i]))
            .collect();
        let mut best = (vec![], f64::INFINITY);
        let mut v: Vec<i32> = ranges.iter().map(|r| r.0).collect();
        loop {
            let d = cell_level_distance(a, b, &v, &W).unwrap();
            if d < best.1 {
                best = (v.clone(), d);
            }
            let mut i = 0;
            loop {
                if i == v.len() {
                    return best;
                }
                v[i] += 1;
                if v[i] <= ranges[i].1 {
                    break;
                }
                v[i] = ranges[i].0;
                i += 1;
            }
        }
    }

    #[test]
    fn recovers_known_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_sgs(&mut rng, 2, 12, 3);
        let b = a.shifted(&[2, 1]);
        let (v, d) = exhaustive(&a, &b);
        assert_eq!((v.as_slice(), d), (&[2, 1][..], 0.0));
        let got = search_alignment(&a, &b, &W, 500).unwrap();
        assert_eq!(got.offset, vec![2, 1]);
        assert_eq!(got.distance, 0.0);
    }

    #[test]
    fn budget_one_returns_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let a = random_sgs(&mut rng, 2, 10, 3);
            let b = random_sgs(&mut rng, 2, 10, 3);
            let start = start_alignment(&a, &b);
            let got = search_alignment(&a, &b, &W, 1).unwrap();
            assert_eq!(got.evaluations, 1);
            assert_eq!(got.offset, start);
            assert_eq!(
                got.distance,
                cell_level_distance(&a, &b, &start, &W).unwrap()
            );
        }
    }

    #[test]
    fn never_worse_than_start_and_dominated_by_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for i in 0..60 {
            let d = 1 + i % 3;
            let a = random_sgs(&mut rng, d, 15, 3);
            let mut b = a.shifted(&(0..d).map(|_| rng.random_range(-4..=4)).collect::<Vec<_>>());
            // perturb so that distance 0 is out of reach
            b.cells.truncate(b.cells.len() - 2);
            let b = b;
            let start = start_alignment(&a, &b);
            let d0 = cell_level_distance(&a, &b, &start, &W).unwrap();
            let mut prev = f64::INFINITY;
            for budget in [1, 2, 5, 10, 50, 500] {
                let got = search_alignment(&a, &b, &W, budget).unwrap();
                assert!(got.evaluations <= budget);
                assert!(got.distance <= d0);
                assert!(got.distance <= prev);
                prev = got.distance;
            }
        }
    }
}
