use crate::ranking::{Ranking, RankingId};

use super::{intern, universe_of, AggregationError};

/// Borda count.
///
/// A pair at 1-based position `r` of ranking `κ` earns `|κ| - r`, the number
/// of pairs ranked below it. Pairs absent from `κ` earn nothing from it. Output
/// is sorted by total, ties broken by pair key.
pub fn borda(rankings: &[&Ranking]) -> Result<Ranking, AggregationError> {
    if rankings.is_empty() {
        return Err(AggregationError::NoRankings);
    }
    let interned = intern(rankings);
    let mut totals = vec![0u64; interned.keys.len()];
    for list in &interned.lists {
        let len = list.len() as u64;
        for (pos, &p) in list.iter().enumerate() {
            totals[p as usize] += len - (pos as u64 + 1);
        }
    }
    let mut order: Vec<u32> = (0..interned.keys.len() as u32).collect();
    order.sort_by(|&a, &b| {
        totals[b as usize]
            .cmp(&totals[a as usize])
            .then_with(|| interned.keys[a as usize].cmp(&interned.keys[b as usize]))
    });
    let scores = order.iter().map(|&p| totals[p as usize] as f64).collect();
    let entries = order.iter().map(|&p| interned.keys[p as usize]).collect();
    Ok(Ranking::from_parts(
        RankingId::Borda,
        entries,
        Some(scores),
        universe_of(rankings),
    ))
}

/// Medrank: a top-down sweep over all rankings at once.
///
/// At depth `n` every ranking reveals its `n`-th entry. A pair is emitted as
/// soon as it has been seen in at least half (rounded up) of the rankings
/// that contain it. Pairs emitted at the same depth are ordered by how often
/// they have been seen, then by key.
pub fn medrank(rankings: &[&Ranking]) -> Result<Ranking, AggregationError> {
    if rankings.is_empty() {
        return Err(AggregationError::NoRankings);
    }
    let interned = intern(rankings);
    let n = interned.keys.len();
    let mut present = vec![0u32; n];
    for list in &interned.lists {
        for &p in list {
            present[p as usize] += 1;
        }
    }
    let mut seen = vec![0u32; n];
    let mut emitted = vec![false; n];
    let mut entries = Vec::with_capacity(n);
    let depth = interned.lists.iter().map(Vec::len).max().unwrap_or(0);
    let mut ready: Vec<u32> = Vec::new();
    for d in 0..depth {
        ready.clear();
        for list in &interned.lists {
            if let Some(&p) = list.get(d) {
                seen[p as usize] += 1;
                if !emitted[p as usize] && seen[p as usize] >= present[p as usize].div_ceil(2) {
                    emitted[p as usize] = true;
                    ready.push(p);
                }
            }
        }
        ready.sort_by(|&a, &b| {
            seen[b as usize]
                .cmp(&seen[a as usize])
                .then_with(|| interned.keys[a as usize].cmp(&interned.keys[b as usize]))
        });
        entries.extend(ready.iter().map(|&p| interned.keys[p as usize]));
    }
    Ok(Ranking::from_parts(
        RankingId::Medrank,
        entries,
        None,
        universe_of(rankings),
    ))
}
