//! Pair score formulas. Each public function scores one neighbor pair of one
//! ego; the leg-level helpers are shared with the table builder so both paths
//! do identical arithmetic.

use crate::ego::{EgoNetwork, Leg};
use crate::events::{Channel, NodeId};

use super::calendar::{Calendar, Side, TimelinePartition};

/// Lower bound on the Fano factor, in seconds.
pub const DEFAULT_FANO_FLOOR: f64 = 1e-9;

fn legs(ego: &EgoNetwork, i: NodeId, j: NodeId) -> (&Leg, &Leg) {
    let leg = |n: NodeId| {
        ego.leg(n)
            .unwrap_or_else(|| panic!("node {n} is not a neighbor of ego {}", ego.ego()))
    };
    (leg(i), leg(j))
}

/// `[s1, s2, s3, s4, s5]` from total (call + text) weights.
pub fn benchmark_scores(ego: &EgoNetwork, i: NodeId, j: NodeId) -> [f64; 5] {
    let (li, lj) = legs(ego, i, j);
    benchmark_from_weights(
        li.total_weight(),
        lj.total_weight(),
        ego.degree(),
        ego.total_weight(),
    )
}

pub(crate) fn benchmark_from_weights(wi: u64, wj: u64, degree: usize, total: u64) -> [f64; 5] {
    let product = (wi * wj) as f64;
    [
        product,
        (wi + wj) as f64,
        wi.max(wj) as f64,
        product / degree as f64,
        product / total as f64,
    ]
}

/// Product of the two legs' call durations over the squared total call
/// duration of the ego. `None` when the ego has no call time at all.
pub fn duration_score(ego: &EgoNetwork, i: NodeId, j: NodeId) -> Option<f64> {
    let (li, lj) = legs(ego, i, j);
    let total: u64 = ego.legs().iter().map(Leg::total_duration).sum();
    duration_from_totals(li.total_duration(), lj.total_duration(), total)
}

pub(crate) fn duration_from_totals(di: u64, dj: u64, total: u64) -> Option<f64> {
    if total == 0 {
        return None;
    }
    let total = total as f64;
    Some(di as f64 * dj as f64 / (total * total))
}

/// Variance-to-mean ratio of the inter-event gaps (population variance).
///
/// Needs at least three events. `None` if there are fewer, or if all events
/// share one timestamp (zero mean gap).
pub fn fano_factor(times: &[i64]) -> Option<f64> {
    if times.len() < 3 {
        return None;
    }
    let gaps: Vec<f64> = times.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    let n = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return None;
    }
    let variance = gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / n;
    Some(variance / mean)
}

/// Leg regularity: channel weight divided by the (floored) Fano factor.
pub fn regularity(leg: &Leg, channel: Channel, fano_floor: f64) -> Option<f64> {
    let times = leg.times(channel);
    fano_factor(times).map(|f| times.len() as f64 / f.max(fano_floor))
}

/// Product of the two legs' regularities; `None` if either is undefined.
pub fn regularity_score(
    ego: &EgoNetwork,
    i: NodeId,
    j: NodeId,
    channel: Channel,
    fano_floor: f64,
) -> Option<f64> {
    let (li, lj) = legs(ego, i, j);
    Some(regularity(li, channel, fano_floor)? * regularity(lj, channel, fano_floor)?)
}

/// Counts of a leg's events on each side of a partition.
pub fn profile_counts(
    times: &[i64],
    partition: &TimelinePartition,
    calendar: &Calendar,
) -> [u64; 2] {
    let mut counts = [0u64; 2];
    for &t in times {
        match partition.side(calendar, t) {
            Side::A => counts[0] += 1,
            Side::B => counts[1] += 1,
        }
    }
    counts
}

pub(crate) fn profile_from_counts(a: [u64; 2], b: [u64; 2], total: u64) -> f64 {
    (a[0] * b[0] + a[1] * b[1]) as f64 / total as f64
}

/// Scalar product of the two legs' `(w_A, w_B)` vectors over `W(e)`.
pub fn profile_score(
    ego: &EgoNetwork,
    i: NodeId,
    j: NodeId,
    partition: &TimelinePartition,
    calendar: &Calendar,
    channel: Channel,
) -> f64 {
    let (li, lj) = legs(ego, i, j);
    profile_from_counts(
        profile_counts(li.times(channel), partition, calendar),
        profile_counts(lj.times(channel), partition, calendar),
        ego.total_weight(),
    )
}

/// Number of cross pairs `(x, y)`, `x` from `a` and `y` from `b`, with
/// `|x - y| <= window`. Both slices must be sorted.
///
/// Two pointers bracket the matches of each `x`; both only move forward, so
/// the cost is linear in `a.len() + b.len()`.
pub fn count_within(a: &[i64], b: &[i64], window: i64) -> u64 {
    debug_assert!(window >= 0);
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut count = 0u64;
    for &x in a {
        let from = x.saturating_sub(window);
        let to = x.saturating_add(window);
        while lo < b.len() && b[lo] < from {
            lo += 1;
        }
        if hi < lo {
            hi = lo;
        }
        while hi < b.len() && b[hi] <= to {
            hi += 1;
        }
        count += (hi - lo) as u64;
    }
    count
}

/// Cross pairs of channel events on the two legs at most `window` seconds
/// apart, over `W(e)`.
pub fn elapsed_time_score(
    ego: &EgoNetwork,
    i: NodeId,
    j: NodeId,
    window: i64,
    channel: Channel,
) -> f64 {
    let (li, lj) = legs(ego, i, j);
    count_within(li.times(channel), lj.times(channel), window) as f64 / ego.total_weight() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::calendar::HOURS_PER_WEEK;
    use proptest::prelude::*;

    fn n(id: u64) -> NodeId {
        NodeId(id)
    }

    /// Ego whose legs have the given numbers of texts.
    fn weighted(weights: &[u64]) -> EgoNetwork {
        let legs = weights
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                let texts: Vec<i64> = (0..w as i64).collect();
                Leg::new(n(k as u64 + 1)).with_texts(&texts)
            })
            .collect();
        EgoNetwork::new(n(0), legs, []).unwrap()
    }

    fn brute_force_count(a: &[i64], b: &[i64], window: i64) -> u64 {
        let mut count = 0;
        for &x in a {
            for &y in b {
                if (x - y).abs() <= window {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn benchmark_formulas() {
        // w = (2, 3, 5): k = 3, W = 10.
        let ego = weighted(&[2, 3, 5]);
        assert_eq!(benchmark_scores(&ego, n(1), n(2)), [6.0, 5.0, 3.0, 2.0, 0.6]);
        let minimal = weighted(&[1, 1]);
        assert_eq!(benchmark_scores(&minimal, n(1), n(2))[4], 0.5);
    }

    #[test]
    fn equal_weights_tie_everywhere() {
        let ego = weighted(&[4, 4, 4, 4]);
        let first = benchmark_scores(&ego, n(1), n(2));
        for p in ego.pairs() {
            assert_eq!(benchmark_scores(&ego, p.key.i, p.key.j), first);
        }
    }

    #[test]
    fn duration_formula() {
        let ego = EgoNetwork::new(
            n(0),
            vec![
                Leg::new(n(1)).with_calls(&[(0, 60)]),
                Leg::new(n(2)).with_calls(&[(0, 40)]),
                Leg::new(n(3)).with_calls(&[(0, 100)]),
                Leg::new(n(4)).with_texts(&[5]),
            ],
            [],
        )
        .unwrap();
        assert_eq!(duration_score(&ego, n(1), n(2)), Some(2400.0 / 40000.0));
        assert_eq!(duration_score(&ego, n(1), n(4)), Some(0.0));
        assert_eq!(duration_score(&weighted(&[1, 2]), n(1), n(2)), None);
    }

    #[test]
    fn duration_two_neighbors_peaks_when_balanced() {
        let score = |a: u64, b: u64| {
            let ego = EgoNetwork::new(
                n(0),
                vec![
                    Leg::new(n(1)).with_calls(&[(0, a)]),
                    Leg::new(n(2)).with_calls(&[(0, b)]),
                ],
                [],
            )
            .unwrap();
            duration_score(&ego, n(1), n(2)).unwrap()
        };
        assert_eq!(score(50, 50), 0.25);
        assert!(score(30, 70) < score(50, 50));
        assert_eq!(score(30, 70), 30.0 * 70.0 / 10_000.0);
    }

    #[test]
    fn fano_factor_of_two_gaps() {
        // gaps [2, 4]: mean 3, variance 1.
        assert_eq!(fano_factor(&[0, 2, 6]), Some(1.0 / 3.0));
        let leg = Leg::new(n(1)).with_calls(&[(0, 1), (2, 1), (6, 1)]);
        let gamma = regularity(&leg, Channel::Call, DEFAULT_FANO_FLOOR).unwrap();
        assert!((gamma - 9.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_series_hits_the_floor() {
        let leg = Leg::new(n(1)).with_texts(&[0, 10, 20, 30]);
        assert_eq!(fano_factor(leg.times(Channel::Text)), Some(0.0));
        let gamma = regularity(&leg, Channel::Text, DEFAULT_FANO_FLOOR).unwrap();
        assert_eq!(gamma, 4.0 / DEFAULT_FANO_FLOOR);
        assert!(gamma.is_finite());
    }

    #[test]
    fn regularity_needs_three_events() {
        let ego = EgoNetwork::new(
            n(0),
            vec![
                Leg::new(n(1)).with_texts(&[0, 5, 9]),
                Leg::new(n(2)).with_texts(&[0, 5]),
                Leg::new(n(3)).with_texts(&[1, 2, 4]),
            ],
            [],
        )
        .unwrap();
        assert!(regularity_score(&ego, n(1), n(2), Channel::Text, DEFAULT_FANO_FLOOR).is_none());
        assert!(regularity_score(&ego, n(2), n(3), Channel::Text, DEFAULT_FANO_FLOOR).is_none());
        assert!(regularity_score(&ego, n(1), n(3), Channel::Text, DEFAULT_FANO_FLOOR).is_some());
        assert!(fano_factor(&[7, 7, 7]).is_none());
    }

    #[test]
    fn profile_formula_and_orthogonality() {
        // Hours 0..2 of the week in A, the rest in B; UTC epoch starts on a Thursday,
        // so use Monday 2024-01-01.
        let monday = 1_704_067_200;
        let mut mask = [false; HOURS_PER_WEEK];
        mask[0] = true;
        let partition = TimelinePartition::custom("first-hour", mask);
        let a = |k: i64| monday + k;
        let b = |k: i64| monday + 7200 + k;
        let ego = EgoNetwork::new(
            n(0),
            vec![
                Leg::new(n(1)).with_texts(&[a(1), a(2), b(3)]),
                Leg::new(n(2)).with_texts(&[a(4), b(5), b(6), b(7)]),
                Leg::new(n(3)).with_texts(&[a(8), a(9), a(10)]),
            ],
            [],
        )
        .unwrap();
        let cal = Calendar::utc();
        // (2*1 + 1*3) / 10
        assert_eq!(profile_score(&ego, n(1), n(2), &partition, &cal, Channel::Text), 0.5);

        let orthogonal = EgoNetwork::new(
            n(0),
            vec![Leg::new(n(1)).with_texts(&[a(1)]), Leg::new(n(2)).with_texts(&[b(1)])],
            [],
        )
        .unwrap();
        assert_eq!(profile_score(&orthogonal, n(1), n(2), &partition, &cal, Channel::Text), 0.0);
    }

    #[test]
    fn whole_timeline_profile_is_s5() {
        let ego = weighted(&[2, 3, 5]);
        let cal = Calendar::utc();
        let whole = TimelinePartition::whole_timeline();
        for p in ego.pairs() {
            assert_eq!(
                profile_score(&ego, p.key.i, p.key.j, &whole, &cal, Channel::Text),
                benchmark_scores(&ego, p.key.i, p.key.j)[4]
            );
        }
    }

    #[test]
    fn elapsed_single_match() {
        let ego = EgoNetwork::new(
            n(0),
            vec![
                Leg::new(n(1)).with_calls(&[(0, 1)]),
                Leg::new(n(2)).with_calls(&[(1800, 1), (7200, 1)]),
                Leg::new(n(3)).with_texts(&[1, 2, 3, 4, 5, 6, 7]),
            ],
            [],
        )
        .unwrap();
        assert_eq!(elapsed_time_score(&ego, n(1), n(2), 3600, Channel::Call), 0.1);
        assert_eq!(elapsed_time_score(&ego, n(1), n(3), 3600, Channel::Call), 0.0);
    }

    #[test]
    fn identical_series_count_n_squared() {
        let series: Vec<i64> = (0..20).map(|k| k * 97).collect();
        assert_eq!(count_within(&series, &series, 1_000_000), 400);
        assert_eq!(brute_force_count(&series, &series, 1_000_000), 400);
    }

    #[test]
    fn count_handles_duplicates_and_extremes() {
        assert_eq!(count_within(&[5, 5, 5], &[5, 5], 0), 6);
        assert_eq!(count_within(&[], &[1, 2], 10), 0);
        // |MIN - 0| exceeds MAX, |MAX - 0| does not.
        assert_eq!(count_within(&[i64::MIN, i64::MAX], &[0], i64::MAX), 1);
    }

    fn sorted_series() -> impl Strategy<Value = Vec<i64>> {
        prop::collection::vec(-500i64..500, 0..=50).prop_map(|mut v| {
            v.sort_unstable();
            v
        })
    }

    proptest! {
        #[test]
        fn two_pointer_matches_brute_force(a in sorted_series(), b in sorted_series(), window in 0i64..300) {
            prop_assert_eq!(count_within(&a, &b, window), brute_force_count(&a, &b, window));
            prop_assert_eq!(count_within(&a, &b, window), count_within(&b, &a, window));
        }

        #[test]
        fn count_is_monotone_in_window(a in sorted_series(), b in sorted_series(), d1 in 0i64..400, extra in 0i64..400) {
            prop_assert!(count_within(&a, &b, d1) <= count_within(&a, &b, d1 + extra));
            prop_assert_eq!(count_within(&a, &b, 1000), (a.len() * b.len()) as u64);
        }
    }
}
