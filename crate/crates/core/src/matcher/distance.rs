use crate::error::{Error, Result};
use crate::pattern_base::{FeatureVector, Interval};
use crate::sgs::{SgsCell, SgsSummary};

fn check_compatible(a: &SgsSummary, b: &SgsSummary) -> Result<()> {
    if a.level != b.level {
        return Err(Error::LevelMismatch(a.level, b.level));
    }
    if a.rho != b.rho || a.grid != b.grid {
        return Err(Error::InvalidParameter(
            "summaries are on different grids".into(),
        ));
    }
    Ok(())
}

/// 0 when the footprints share at least one cell, 1 otherwise.
pub fn dist_location(a: &SgsSummary, b: &SgsSummary) -> Result<f64> {
    check_compatible(a, b)?;
    let (small, big) = if a.cells.len() <= b.cells.len() {
        (a, b)
    } else {
        (b, a)
    };
    let shared = small
        .cells
        .iter()
        .any(|c| big.cell(c.location.as_slice()).is_some());
    Ok(if shared { 0.0 } else { 1.0 })
}

/// Relative difference of two non-negative feature values, clamped to 1.
pub fn dist_feature(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = a.min(b);
    if m <= 0.0 {
        return 1.0;
    }
    ((a - b).abs() / m).min(1.0)
}

/// Weighted sum of per-feature distances.
pub fn feature_distance(a: &FeatureVector, b: &FeatureVector, weights: &[f64; 4]) -> f64 {
    let (fa, fb) = (a.as_array(), b.as_array());
    (0..4)
        .map(|i| weights[i] * dist_feature(fa[i], fb[i]))
        .sum()
}

/// Summary-level distance with precomputed features. With `position_sensitive` set,
/// non-overlapping footprints score 1 without looking at the features.
pub fn summary_distance_with(
    a: &SgsSummary,
    fa: &FeatureVector,
    b: &SgsSummary,
    fb: &FeatureVector,
    position_sensitive: bool,
    weights: &[f64; 4],
) -> Result<f64> {
    let mut total = 0.0;
    if position_sensitive {
        let loc = dist_location(a, b)?;
        if loc == 1.0 {
            return Ok(1.0);
        }
        total += loc;
    }
    Ok(total + feature_distance(fa, fb, weights))
}

/// Values `x` of one feature that can satisfy `w * dist_feature(q, x) <= tau`.
/// Integer-valued features get integral bounds.
pub fn feature_range_bounds(q: f64, w: f64, tau: f64, integer: bool) -> Interval {
    if w <= 0.0 || tau / w >= 1.0 {
        return Interval::ALL;
    }
    let r = tau / w;
    let (mut lo, mut hi) = (q / (1.0 + r), q * (1.0 + r));
    // slack for rounding in the distance computation itself
    lo *= 1.0 - 1e-12;
    hi *= 1.0 + 1e-12;
    if integer {
        lo = (lo - 1e-9).ceil();
        hi = (hi + 1e-9).floor();
    }
    Interval::new(lo, hi)
}

/// Per-cell weights for status, density and connectivity, from the query weights of
/// core count, density and connectivity.
pub fn cell_weights(weights: &[f64; 4]) -> [f64; 3] {
    let s: f64 = weights[1..].iter().sum();
    if s <= 0.0 {
        return [1.0 / 3.0; 3];
    }
    [weights[1] / s, weights[2] / s, weights[3] / s]
}

fn sorted_sym_diff<T: Ord>(a: &[T], b: &[T]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                n += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                n += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    n + (a.len() - i) + (b.len() - j)
}

/// Difference in `[0, 1]` between two cells occupying the same location.
pub fn cell_difference(a: &SgsCell, b: &SgsCell, w: &[f64; 3], space_len: usize) -> f64 {
    let status = if a.status == b.status { 0.0 } else { 1.0 };
    let (pa, pb) = (a.population as f64, b.population as f64);
    let density = if pa == pb {
        0.0
    } else {
        (pa - pb).abs() / pa.max(pb)
    };
    let conn = sorted_sym_diff(&a.connections, &b.connections) as f64 / space_len.max(1) as f64;
    w[0] * status + w[1] * density + w[2] * conn
}

/// Mean cell difference over the union of `a`'s footprint and `b`'s footprint, where
/// cell `x` of `a` is paired with cell `x + alignment` of `b`. Unpaired cells score 1.
pub fn cell_level_distance(
    a: &SgsSummary,
    b: &SgsSummary,
    alignment: &[i32],
    weights: &[f64; 4],
) -> Result<f64> {
    check_compatible(a, b)?;
    if alignment.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: alignment.len(),
        });
    }
    if a.is_empty() && b.is_empty() {
        return Ok(0.0);
    }
    let w = cell_weights(weights);
    let space_len = a.connection_space().len();
    let mut matched = 0usize;
    let mut sum = 0.0;
    let mut probe = vec![0i32; a.dim()];
    for c in &a.cells {
        for (p, (x, v)) in probe
            .iter_mut()
            .zip(c.location.as_slice().iter().zip(alignment))
        {
            *p = x + v;
        }
        if let Some(o) = b.cell(&probe) {
            matched += 1;
            sum += cell_difference(c, o, &w, space_len);
        }
    }
    let union = a.cells.len() + b.cells.len() - matched;
    let unmatched = union - matched;
    Ok(((unmatched as f64 + sum) / union as f64).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CellCoord, CellStatus, ClusterParams, GridSpec};
    use crate::pattern_base::feature_vector;
    use crate::synth::random_sgs;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    const EQUAL: [f64; 4] = [0.25; 4];

    fn grid() -> GridSpec {
        GridSpec::new(&ClusterParams::new(1.0, 3).unwrap(), 2).unwrap()
    }

    type CellSpec<'a> = ((i32, i32), u32, bool, &'a [(i32, i32)]);

    fn sgs(cells: &[CellSpec]) -> SgsSummary {
        let mut s = SgsSummary {
            cluster_id: 0,
            level: 0,
            rho: 3,
            grid: grid(),
            cells: cells
                .iter()
                .map(|&((x, y), pop, core, conns)| SgsCell {
                    location: CellCoord(vec![x, y]),
                    population: pop,
                    status: if core {
                        CellStatus::Core
                    } else {
                        CellStatus::Edge
                    },
                    connections: conns.iter().map(|&(a, b)| CellCoord(vec![a, b])).collect(),
                })
                .collect(),
        };
        s.normalize();
        s
    }

    fn l_shape() -> (SgsSummary, SgsSummary) {
        // a: L from (0,0) up to (0,2) and right to (2,0); b: the single cell (1,1)
        // inside a's bounding box but off its footprint
        let a = sgs(&[
            ((0, 0), 4, true, &[(0, 1), (1, 0)]),
            ((0, 1), 4, true, &[(0, -1)]),
            ((0, 2), 2, false, &[]),
            ((1, 0), 4, true, &[(-1, 0)]),
            ((2, 0), 2, false, &[]),
        ]);
        let b = sgs(&[((1, 1), 5, true, &[])]);
        (a, b)
    }

    #[test]
    fn location_examples() {
        let (a, b) = l_shape();
        assert_eq!(dist_location(&a, &a).unwrap(), 0.0);
        assert_eq!(dist_location(&a, &b).unwrap(), 1.0);
        let ma = crate::pattern_base::Mbr::of(&a).unwrap();
        let mb = crate::pattern_base::Mbr::of(&b).unwrap();
        assert!(ma.intersects(&mb));
        let far = a.shifted(&[10, 0]);
        assert_eq!(dist_location(&a, &far).unwrap(), 1.0);
        let mut coarse = a.clone();
        coarse.level = 1;
        assert!(matches!(
            dist_location(&a, &coarse),
            Err(Error::LevelMismatch(0, 1))
        ));
    }

    #[test]
    fn feature_examples() {
        assert_eq!(dist_feature(20.0, 20.0), 0.0);
        assert_eq!(dist_feature(20.0, 30.0), 0.5);
        assert_eq!(dist_feature(20.0, 80.0), 1.0);
        assert_eq!(dist_feature(0.0, 0.0), 0.0);
        assert_eq!(dist_feature(0.0, 3.0), 1.0);
    }

    #[test]
    fn summary_examples() {
        let (a, b) = l_shape();
        let (fa, fb) = (feature_vector(&a).unwrap(), feature_vector(&b).unwrap());
        for w in [EQUAL, [1.0, 0.0, 0.0, 0.0], [0.1, 0.2, 0.3, 0.4]] {
            assert_eq!(
                summary_distance_with(&a, &fa, &a, &fa, true, &w).unwrap(),
                0.0
            );
            assert_eq!(
                summary_distance_with(&a, &fa, &a, &fa, false, &w).unwrap(),
                0.0
            );
        }
        assert_eq!(
            summary_distance_with(&a, &fa, &b, &fb, true, &EQUAL).unwrap(),
            1.0
        );
        let x = FeatureVector {
            volume: 4,
            core_count: 2,
            avg_density: 2.5,
            avg_connectivity: 1.0,
        };
        let y = FeatureVector {
            avg_connectivity: 2.0,
            ..x
        };
        assert_eq!(feature_distance(&x, &y, &EQUAL), 0.25);
    }

    #[test]
    fn pruning_example() {
        let b = feature_range_bounds(20.0, 0.4, 0.2, true);
        assert_eq!((b.lo, b.hi), (14.0, 30.0));
        let b = feature_range_bounds(20.0, 0.4, 0.0, true);
        assert_eq!((b.lo, b.hi), (20.0, 20.0));
        let b = feature_range_bounds(2.5, 0.3, 0.0, false);
        assert!(b.contains(2.5) && !b.contains(2.5000001) && !b.contains(2.4999999));
        assert_eq!(feature_range_bounds(20.0, 0.0, 0.1, true), Interval::ALL);
        assert_eq!(feature_range_bounds(20.0, 0.2, 0.2, true), Interval::ALL);
    }

    proptest! {
        #[test]
        fn pruning_is_sound(
            q in prop_oneof![Just(0.0), 0.0f64..100.0, (0u32..100).prop_map(f64::from)],
            x in prop_oneof![Just(0.0), 0.0f64..100.0, (0u32..100).prop_map(f64::from)],
            w in 0.0f64..1.0,
            tau in 0.0f64..1.0,
            integer in any::<bool>(),
        ) {
            let (q, x) = if integer { (q.round(), x.round()) } else { (q, x) };
            if w * dist_feature(q, x) <= tau {
                prop_assert!(feature_range_bounds(q, w, tau, integer).contains(x));
            }
        }

        #[test]
        fn feature_distance_symmetric(a in 0.0f64..50.0, b in 0.0f64..50.0) {
            prop_assert_eq!(dist_feature(a, b), dist_feature(b, a));
            prop_assert!((0.0..=1.0).contains(&dist_feature(a, b)));
        }
    }

    /// Independent per-location evaluation of the cell distance.
    fn cell_oracle(a: &SgsSummary, b: &SgsSummary, v: &[i32], weights: &[f64; 4]) -> f64 {
        let w = cell_weights(weights);
        let n = a.connection_space().len() as f64;
        let mut slots: BTreeMap<Vec<i32>, (Option<&SgsCell>, Option<&SgsCell>)> = BTreeMap::new();
        for c in &a.cells {
            let key: Vec<i32> = c.location.0.iter().zip(v).map(|(x, s)| x + s).collect();
            slots.entry(key).or_default().0 = Some(c);
        }
        for c in &b.cells {
            slots.entry(c.location.0.clone()).or_default().1 = Some(c);
        }
        if slots.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        for (ca, cb) in slots.values() {
            total += match (ca, cb) {
                (Some(x), Some(y)) => {
                    let st = (x.status != y.status) as u8 as f64;
                    let (px, py) = (x.population as f64, y.population as f64);
                    let de = if px.max(py) == 0.0 {
                        0.0
                    } else {
                        (px - py).abs() / px.max(py)
                    };
                    let differing = x
                        .connections
                        .iter()
                        .filter(|o| !y.connections.contains(o))
                        .count()
                        + y.connections
                            .iter()
                            .filter(|o| !x.connections.contains(o))
                            .count();
                    w[0] * st + w[1] * de + w[2] * differing as f64 / n
                }
                _ => 1.0,
            };
        }
        total / slots.len() as f64
    }

    #[test]
    fn cell_distance_examples() {
        let a = sgs(&[
            ((0, 0), 6, true, &[(1, 0)]),
            ((1, 0), 3, true, &[(-1, 0)]),
            ((2, 0), 2, false, &[]),
        ]);
        assert_eq!(cell_level_distance(&a, &a, &[0, 0], &EQUAL).unwrap(), 0.0);
        let b = a.shifted(&[1, 0]);
        let d = cell_level_distance(&a, &b, &[0, 0], &EQUAL).unwrap();
        // union of 4 locations: (0,0) and (3,0) unmatched; (1,0) pairs 3 core with 6 core,
        // (2,0) pairs 2 edge with 3 core
        let w = cell_weights(&EQUAL);
        let c1 = w[1] * 0.5 + w[2] * 2.0 / 20.0;
        let c2 = w[0] + w[1] / 3.0 + w[2] * 1.0 / 20.0;
        let want = (2.0 + c1 + c2) / 4.0;
        assert!((d - want).abs() < 1e-12, "{d} vs {want}");
        assert!((d - cell_oracle(&a, &b, &[0, 0], &EQUAL)).abs() < 1e-12);
        assert_eq!(cell_level_distance(&a, &b, &[1, 0], &EQUAL).unwrap(), 0.0);
        let empty = sgs(&[]);
        assert_eq!(
            cell_level_distance(&a, &empty, &[0, 0], &EQUAL).unwrap(),
            1.0
        );
        assert_eq!(
            cell_level_distance(&empty, &a, &[0, 0], &EQUAL).unwrap(),
            1.0
        );
    }

    #[test]
    fn cell_distance_matches_oracle_and_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let weights = [
            [0.25; 4],
            [0.1, 0.6, 0.2, 0.1],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        for i in 0..300 {
            let d = 1 + i % 3;
            let a = random_sgs(&mut rng, d, 1 + i % 12, 3);
            let b = random_sgs(&mut rng, d, 1 + (i * 7) % 12, 3);
            let v: Vec<i32> = (0..d).map(|k| ((i + k) % 5) as i32 - 2).collect();
            let neg: Vec<i32> = v.iter().map(|x| -x).collect();
            let w = &weights[i % 4];
            let got = cell_level_distance(&a, &b, &v, w).unwrap();
            assert!((got - cell_oracle(&a, &b, &v, w)).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&got));
            let back = cell_level_distance(&b, &a, &neg, w).unwrap();
            assert!((got - back).abs() < 1e-12);
            let (fa, fb) = (feature_vector(&a).unwrap(), feature_vector(&b).unwrap());
            for ps in [false, true] {
                let x = summary_distance_with(&a, &fa, &b, &fb, ps, w).unwrap();
                let y = summary_distance_with(&b, &fb, &a, &fa, ps, w).unwrap();
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn zero_only_for_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let a = random_sgs(&mut rng, 2, 6, 3);
            let mut b = a.clone();
            let i = rand::Rng::random_range(&mut rng, 0..b.cells.len());
            b.cells[i].population += 1;
            assert!(cell_level_distance(&a, &b, &[0, 0], &EQUAL).unwrap() > 0.0);
            assert_eq!(cell_level_distance(&a, &a, &[0, 0], &EQUAL).unwrap(), 0.0);
        }
    }
}
