use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use crate::ego::{DegreeClass, PairKey, PairLabels};
use crate::eval::ranking_auc;
use crate::ranking::{Ranking, RankingId};

use super::{ids_of, intern, universe_of, AggregationError};

pub const DEFAULT_G_GRID: [usize; 7] = [1, 2, 5, 10, 25, 50, 100];

const MAGIC: &str = "egolink-merge-model 1";
const ABSENT: u32 = u32::MAX;

/// The learned merge for one degree class: which input ranking supplied each
/// successive pair on the learning set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeModel {
    pub class_label: DegreeClass,
    pub g: usize,
    pub ranking_ids: Vec<RankingId>,
    pub selection_sequence: Vec<usize>,
}

impl MergeModel {
    /// Share of the whole sequence taken from each ranking.
    pub fn phi(&self) -> Vec<f64> {
        self.phi_at(self.selection_sequence.len())
    }

    /// Share of the first `n` steps taken from each ranking.
    pub fn phi_at(&self, n: usize) -> Vec<f64> {
        let n = n.min(self.selection_sequence.len());
        let mut counts = vec![0usize; self.ranking_ids.len()];
        for &k in &self.selection_sequence[..n] {
            counts[k] += 1;
        }
        counts
            .into_iter()
            .map(|c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
            .collect()
    }

    /// Line-oriented text form; runs in the sequence are written `idx*count`.
    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "class {}", self.class_label)?;
        writeln!(out, "g {}", self.g)?;
        let ids: Vec<String> = self.ranking_ids.iter().map(|id| id.to_string()).collect();
        writeln!(out, "rankings {}", ids.join(","))?;
        let mut seq = String::new();
        let mut iter = self.selection_sequence.iter().peekable();
        while let Some(&k) = iter.next() {
            let mut run = 1;
            while iter.next_if_eq(&&k).is_some() {
                run += 1;
            }
            if !seq.is_empty() {
                seq.push(' ');
            }
            if run == 1 {
                let _ = write!(seq, "{k}");
            } else {
                let _ = write!(seq, "{k}*{run}");
            }
        }
        writeln!(out, "sequence {seq}")?;
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self, AggregationError> {
        let lines: Vec<String> = input.lines().collect::<Result<_, _>>()?;
        let bad = |line: usize, reason: &str| AggregationError::ModelFormat {
            line,
            reason: reason.to_string(),
        };
        if lines.len() != 5 {
            return Err(bad(lines.len().min(5), "expected five lines"));
        }
        if lines[0] != MAGIC {
            return Err(bad(1, "unknown header"));
        }
        let field = |idx: usize, name: &str| -> Result<&str, AggregationError> {
            lines[idx]
                .strip_prefix(name)
                .and_then(|rest| rest.strip_prefix(' ').or((rest.is_empty()).then_some("")))
                .ok_or_else(|| bad(idx + 1, &format!("expected `{name}`")))
        };
        let class_label = field(1, "class")?
            .parse()
            .map_err(|_| bad(2, "bad class label"))?;
        let g: usize = field(2, "g")?.parse().map_err(|_| bad(3, "bad g"))?;
        if g == 0 {
            return Err(bad(3, "g must be at least 1"));
        }
        let ranking_ids = field(3, "rankings")?
            .split(',')
            .map(|s| s.parse::<RankingId>().map_err(|e| bad(4, &e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let mut selection_sequence = Vec::new();
        for token in field(4, "sequence")?.split_whitespace() {
            let (idx, run) = match token.split_once('*') {
                Some((idx, run)) => (idx, run.parse::<usize>().map_err(|_| bad(5, "bad run"))?),
                None => (token, 1),
            };
            let idx: usize = idx.parse().map_err(|_| bad(5, "bad index"))?;
            if idx >= ranking_ids.len() || run == 0 {
                return Err(bad(5, "index out of range"));
            }
            selection_sequence.extend(std::iter::repeat_n(idx, run));
        }
        Ok(Self {
            class_label,
            g,
            ranking_ids,
            selection_sequence,
        })
    }
}

/// A merged ranking plus, per position, the index of the input that supplied it.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedRanking {
    pub ranking: Ranking,
    pub sources: Vec<usize>,
}

struct Window {
    head: usize,
    front: usize,
    size: usize,
    tp: usize,
}

/// Greedy supervised merge on a labelled set.
///
/// Each step looks at the next `g` not-yet-merged pairs of every ranking,
/// picks the ranking with the most true positives there (lowest index on
/// ties) and takes its best unmerged pair. Runs until the union is merged.
pub fn rankmerge_learn(
    rankings: &[&Ranking],
    labels: &PairLabels,
    g: usize,
    class_label: DegreeClass,
) -> Result<MergeModel, AggregationError> {
    if rankings.is_empty() {
        return Err(AggregationError::NoRankings);
    }
    if g == 0 {
        return Err(AggregationError::ZeroWindow);
    }
    let interned = intern(rankings);
    let alpha = interned.lists.len();
    let n = interned.keys.len();
    let positive: Vec<bool> = interned.keys.iter().map(|k| labels.is_positive(k)).collect();
    let mut position = vec![ABSENT; n * alpha];
    for (k, list) in interned.lists.iter().enumerate() {
        for (pos, &p) in list.iter().enumerate() {
            position[p as usize * alpha + k] = pos as u32;
        }
    }
    let mut merged = vec![false; n];
    let mut windows: Vec<Window> = (0..alpha)
        .map(|_| Window {
            head: 0,
            front: 0,
            size: 0,
            tp: 0,
        })
        .collect();
    let refill = |w: &mut Window, list: &[u32], merged: &[bool]| {
        while w.size < g && w.front < list.len() {
            let p = list[w.front] as usize;
            if !merged[p] {
                w.size += 1;
                w.tp += positive[p] as usize;
            }
            w.front += 1;
        }
    };
    for (w, list) in windows.iter_mut().zip(&interned.lists) {
        refill(w, list, &merged);
    }
    let mut sequence = Vec::with_capacity(n);
    loop {
        let mut best: Option<usize> = None;
        for (k, w) in windows.iter().enumerate() {
            if w.size > 0 && best.is_none_or(|b| w.tp > windows[b].tp) {
                best = Some(k);
            }
        }
        let Some(k) = best else { break };
        let list = &interned.lists[k];
        let w = &mut windows[k];
        while merged[list[w.head] as usize] {
            w.head += 1;
        }
        let p = list[w.head] as usize;
        merged[p] = true;
        sequence.push(k);
        for (kk, w) in windows.iter_mut().enumerate() {
            let q = position[p * alpha + kk];
            if q != ABSENT && (q as usize) < w.front {
                w.size -= 1;
                w.tp -= positive[p] as usize;
                refill(w, &interned.lists[kk], &merged);
            }
        }
    }
    Ok(MergeModel {
        class_label,
        g,
        ranking_ids: ids_of(rankings),
        selection_sequence: sequence,
    })
}

/// How a learned sequence is laid over a set of a different size.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Replay {
    /// Output position `n` follows step `n`; the output has
    /// `min(|union|, |sequence|)` pairs.
    Stepwise,
    /// Output position `n` follows step `n * |sequence| / |union|`, so a
    /// smaller evaluation set sees the whole sequence at the same relative
    /// depths. The output covers the union. Identical to `Stepwise` when the
    /// sizes match.
    #[default]
    Proportional,
}

impl std::fmt::Display for Replay {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Replay::Stepwise => "stepwise",
            Replay::Proportional => "proportional",
        })
    }
}

impl std::str::FromStr for Replay {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stepwise" => Ok(Replay::Stepwise),
            "proportional" => Ok(Replay::Proportional),
            other => Err(format!("unknown replay mode `{other}`")),
        }
    }
}

/// Replays a model's selection sequence on new rankings of the same inputs.
///
/// When the chosen ranking has nothing left, the next step in the sequence
/// naming a ranking that still has pairs is used instead, and failing that
/// the first such ranking.
pub fn rankmerge_apply(
    model: &MergeModel,
    rankings: &[&Ranking],
    replay: Replay,
) -> Result<MergedRanking, AggregationError> {
    let mismatch = || AggregationError::IdMismatch {
        expected: model.ranking_ids.iter().map(|id| id.to_string()).collect(),
        got: rankings.iter().map(|r| r.id().to_string()).collect(),
    };
    if rankings.len() != model.ranking_ids.len() {
        return Err(mismatch());
    }
    let ordered: Vec<&Ranking> = model
        .ranking_ids
        .iter()
        .map(|id| rankings.iter().copied().find(|r| r.id() == *id).ok_or_else(mismatch))
        .collect::<Result<_, _>>()?;
    let interned = intern(&ordered);
    let alpha = ordered.len();
    let seq = &model.selection_sequence;
    let target = interned.keys.len().min(seq.len());

    let mut occurrences: Vec<Vec<usize>> = vec![Vec::new(); alpha];
    for (step, &k) in seq.iter().enumerate() {
        occurrences[k].push(step);
    }
    let mut merged = vec![false; interned.keys.len()];
    let mut heads = vec![0usize; alpha];
    let mut entries: Vec<PairKey> = Vec::with_capacity(target);
    let mut sources = Vec::with_capacity(target);

    let advance = |k: usize, heads: &mut [usize], merged: &[bool]| -> bool {
        let list = &interned.lists[k];
        while heads[k] < list.len() && merged[list[heads[k]] as usize] {
            heads[k] += 1;
        }
        heads[k] < list.len()
    };
    let union = interned.keys.len();
    let proportional = replay == Replay::Proportional && !seq.is_empty();
    let target = if proportional { union } else { target };
    for slot in 0..target {
        let step = if proportional {
            slot * seq.len() / union
        } else {
            slot
        };
        let mut chosen = seq[step];
        if !advance(chosen, &mut heads, &merged) {
            let mut next: Option<(usize, usize)> = None;
            for (k, occ) in occurrences.iter().enumerate() {
                if !advance(k, &mut heads, &merged) {
                    continue;
                }
                let at = occ.partition_point(|&s| s <= step);
                let key = occ.get(at).copied().unwrap_or(usize::MAX);
                if next.is_none_or(|(best, _)| key < best) {
                    next = Some((key, k));
                }
            }
            match next {
                Some((_, k)) => chosen = k,
                None => break,
            }
        }
        let p = interned.lists[chosen][heads[chosen]] as usize;
        merged[p] = true;
        entries.push(interned.keys[p]);
        sources.push(chosen);
    }
    Ok(MergedRanking {
        ranking: Ranking::from_parts(RankingId::RankMerge, entries, None, universe_of(&ordered)),
        sources,
    })
}

/// Result of choosing `g` on a validation set.
#[derive(Debug, Clone, PartialEq)]
pub struct Tuning {
    pub g: usize,
    /// Validation AUC-PR for every candidate, in grid order.
    pub scores: Vec<(usize, f64)>,
    pub model: MergeModel,
}

/// Learns a model per `g` on the learning set and keeps the one with the best
/// validation AUC-PR; ties go to the smaller `g`.
pub fn tune_g(
    learning: &[&Ranking],
    learning_labels: &PairLabels,
    validation: &[&Ranking],
    validation_labels: &PairLabels,
    grid: &[usize],
    class_label: DegreeClass,
    replay: Replay,
) -> Result<Tuning, AggregationError> {
    if grid.is_empty() {
        return Err(AggregationError::EmptyGrid);
    }
    let mut sorted = grid.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut best: Option<(f64, MergeModel)> = None;
    let mut scores = Vec::with_capacity(sorted.len());
    for &g in &sorted {
        let model = rankmerge_learn(learning, learning_labels, g, class_label)?;
        let merged = rankmerge_apply(&model, validation, replay)?;
        let auc = ranking_auc(&merged.ranking, validation_labels)?;
        scores.push((g, auc));
        if best.as_ref().is_none_or(|(b, _)| auc > *b) {
            best = Some((auc, model));
        }
    }
    let (_, model) = best.expect("grid is not empty");
    Ok(Tuning {
        g: model.g,
        scores,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ego::CandidatePair;
    use crate::events::NodeId;
    use crate::features::ScoreId;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    const CLASS: DegreeClass = DegreeClass::Exact(8);

    fn key(j: u64) -> PairKey {
        PairKey::new(NodeId(0), NodeId(0), NodeId(j))
    }

    fn ranking(id: RankingId, order: &[u64]) -> Ranking {
        Ranking::new(id, order.iter().map(|&j| key(j)).collect(), None, 64).unwrap()
    }

    fn rankings(lists: &[Vec<u64>]) -> Vec<Ranking> {
        lists
            .iter()
            .enumerate()
            .map(|(k, l)| ranking(RankingId::Score(ScoreId::Benchmark(k as u8 + 1)), l))
            .collect()
    }

    fn labels(positive: &[u64]) -> PairLabels {
        let pairs: Vec<CandidatePair> = (1..=40)
            .map(|j| CandidatePair {
                key: key(j),
                label: positive.contains(&j),
            })
            .collect();
        PairLabels::from_pairs(&pairs)
    }

    /// Straightforward greedy: recompute every window from scratch each step.
    fn naive_learn(lists: &[Vec<u64>], positive: &[u64], g: usize) -> (Vec<usize>, Vec<u64>) {
        let mut merged: BTreeSet<u64> = BTreeSet::new();
        let mut seq = Vec::new();
        let mut out = Vec::new();
        loop {
            let mut best: Option<(usize, usize)> = None;
            for (k, l) in lists.iter().enumerate() {
                let window: Vec<u64> = l.iter().copied().filter(|x| !merged.contains(x)).take(g).collect();
                if window.is_empty() {
                    continue;
                }
                let q = window.iter().filter(|x| positive.contains(x)).count();
                if best.is_none_or(|(bq, _)| q > bq) {
                    best = Some((q, k));
                }
            }
            let Some((_, k)) = best else { break };
            let p = *lists[k].iter().find(|x| !merged.contains(x)).unwrap();
            merged.insert(p);
            seq.push(k);
            out.push(p);
        }
        (seq, out)
    }

    fn js(r: &Ranking) -> Vec<u64> {
        r.entries().iter().map(|k| k.j.0).collect()
    }

    #[test]
    fn picks_the_ranking_with_more_hits() {
        let rs = rankings(&[vec![1, 2, 3, 4], vec![3, 4, 1, 2]]);
        let refs: Vec<&Ranking> = rs.iter().collect();
        let model = rankmerge_learn(&refs, &labels(&[3, 4]), 2, CLASS).unwrap();
        assert_eq!(model.selection_sequence[..2], [1, 1]);
        let merged = rankmerge_apply(&model, &refs, Replay::Stepwise).unwrap();
        assert_eq!(js(&merged.ranking)[..2], [3, 4]);
        assert_eq!(merged.ranking.len(), 4);
    }

    #[test]
    fn apply_falls_forward_when_exhausted() {
        let model = MergeModel {
            class_label: CLASS,
            g: 1,
            ranking_ids: rankings(&[vec![], vec![]]).iter().map(|r| r.id()).collect(),
            selection_sequence: vec![0, 0, 1, 0, 1],
        };
        let rs = rankings(&[vec![1], vec![2, 3, 4]]);
        let refs: Vec<&Ranking> = rs.iter().collect();
        let merged = rankmerge_apply(&model, &refs, Replay::Stepwise).unwrap();
        assert_eq!(js(&merged.ranking), vec![1, 2, 3, 4]);
        assert_eq!(merged.sources, vec![0, 1, 1, 1]);
        // Sequence shorter than the union.
        let short = MergeModel {
            selection_sequence: vec![1, 1],
            ..model.clone()
        };
        assert_eq!(rankmerge_apply(&short, &refs, Replay::Stepwise).unwrap().ranking.len(), 2);
    }

    #[test]
    fn proportional_replay_spreads_the_sequence() {
        // Sequence learned on eight pairs, replayed on four: every other step.
        let model = MergeModel {
            class_label: CLASS,
            g: 1,
            ranking_ids: rankings(&[vec![], vec![]]).iter().map(|r| r.id()).collect(),
            selection_sequence: vec![0, 1, 0, 1, 1, 0, 1, 0],
        };
        let rs = rankings(&[vec![1, 2, 3, 4], vec![4, 3, 2, 1]]);
        let refs: Vec<&Ranking> = rs.iter().collect();
        let merged = rankmerge_apply(&model, &refs, Replay::Proportional).unwrap();
        assert_eq!(merged.sources, vec![0, 0, 1, 1]);
        assert_eq!(js(&merged.ranking), vec![1, 2, 4, 3]);
        assert_eq!("stepwise".parse::<Replay>().unwrap(), Replay::Stepwise);
        assert_eq!(Replay::default().to_string(), "proportional");
    }

    #[test]
    fn apply_rejects_other_rankings() {
        let rs = rankings(&[vec![1], vec![2]]);
        let refs: Vec<&Ranking> = rs.iter().collect();
        let model = rankmerge_learn(&refs, &labels(&[1]), 1, CLASS).unwrap();
        let other = ranking(RankingId::Borda, &[1, 2]);
        assert!(matches!(
            rankmerge_apply(&model, &[refs[0], &other], Replay::Stepwise),
            Err(AggregationError::IdMismatch { .. })
        ));
        assert!(rankmerge_apply(&model, &refs[..1], Replay::Stepwise).is_err());
        // Order does not matter, identity does.
        let swapped = rankmerge_apply(&model, &[refs[1], refs[0]], Replay::Stepwise).unwrap();
        assert_eq!(swapped, rankmerge_apply(&model, &refs, Replay::Stepwise).unwrap());
    }

    #[test]
    fn errors() {
        let rs = rankings(&[vec![1]]);
        let refs: Vec<&Ranking> = rs.iter().collect();
        assert!(matches!(rankmerge_learn(&[], &labels(&[]), 1, CLASS), Err(AggregationError::NoRankings)));
        assert!(matches!(rankmerge_learn(&refs, &labels(&[]), 0, CLASS), Err(AggregationError::ZeroWindow)));
        assert!(matches!(
            tune_g(&refs, &labels(&[1]), &refs, &labels(&[1]), &[], CLASS, Replay::Stepwise),
            Err(AggregationError::EmptyGrid)
        ));
    }

    #[test]
    fn model_text_round_trip() {
        let model = MergeModel {
            class_label: DegreeClass::AtLeast(15),
            g: 25,
            ranking_ids: vec![
                RankingId::Score(ScoreId::S5),
                RankingId::Borda,
                RankingId::Medrank,
            ],
            selection_sequence: vec![0, 0, 0, 2, 1, 1, 0],
        };
        let mut buf = Vec::new();
        model.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.ends_with("sequence 0*3 2 1*2 0\n"));
        let back = MergeModel::read(&buf[..]).unwrap();
        assert_eq!(back, model);
        let mut again = Vec::new();
        back.write(&mut again).unwrap();
        assert_eq!(again, buf);
        assert!(MergeModel::read(&b"nonsense\n"[..]).is_err());
        let broken = text.replace("sequence 0*3", "sequence 7*3");
        assert!(MergeModel::read(broken.as_bytes()).is_err());
    }

    #[test]
    fn phi_shares() {
        let model = MergeModel {
            class_label: CLASS,
            g: 1,
            ranking_ids: vec![RankingId::Borda, RankingId::Medrank],
            selection_sequence: vec![0, 0, 1, 0],
        };
        assert_eq!(model.phi(), vec![0.75, 0.25]);
        assert_eq!(model.phi_at(2), vec![1.0, 0.0]);
        assert_eq!(model.phi_at(0), vec![0.0, 0.0]);
    }

    #[test]
    fn tuning_prefers_smaller_g_on_ties() {
        let rs = rankings(&[vec![1, 2, 3], vec![1, 2, 3]]);
        let refs: Vec<&Ranking> = rs.iter().collect();
        let t = tune_g(&refs, &labels(&[1]), &refs, &labels(&[1]), &[10, 2, 5], CLASS, Replay::Stepwise).unwrap();
        assert_eq!(t.g, 2);
        assert_eq!(t.scores.iter().map(|s| s.0).collect::<Vec<_>>(), vec![2, 5, 10]);
    }

    fn arb_lists() -> impl Strategy<Value = (Vec<Vec<u64>>, Vec<u64>, usize)> {
        (
            prop::collection::vec(
                Just((1u64..=30).collect::<Vec<_>>())
                    .prop_shuffle()
                    .prop_flat_map(|v| (Just(v), 0usize..=30))
                    .prop_map(|(v, n)| v[..n].to_vec()),
                1..6,
            ),
            prop::collection::vec(1u64..=30, 0..15),
            1usize..8,
        )
    }

    proptest! {
        #[test]
        fn incremental_matches_naive((lists, positive, g) in arb_lists()) {
            let rs = rankings(&lists);
            let refs: Vec<&Ranking> = rs.iter().collect();
            let model = rankmerge_learn(&refs, &labels(&positive), g, CLASS).unwrap();
            let (seq, order) = naive_learn(&lists, &positive, g);
            prop_assert_eq!(&model.selection_sequence, &seq);
            // Replaying on the learning rankings reproduces the greedy merge.
            let merged = rankmerge_apply(&model, &refs, Replay::Stepwise).unwrap();
            prop_assert_eq!(js(&merged.ranking), order);
            prop_assert_eq!(merged.sources, seq);
        }

        #[test]
        fn apply_length_and_uniqueness(
            (lists, _, _) in arb_lists(),
            seq in prop::collection::vec(0usize..5, 0..40),
        ) {
            let rs = rankings(&lists);
            let refs: Vec<&Ranking> = rs.iter().collect();
            let seq: Vec<usize> = seq.into_iter().map(|k| k % lists.len()).collect();
            let model = MergeModel {
                class_label: CLASS,
                g: 1,
                ranking_ids: rs.iter().map(|r| r.id()).collect(),
                selection_sequence: seq.clone(),
            };
            let union: BTreeSet<u64> = lists.iter().flatten().copied().collect();
            let merged = rankmerge_apply(&model, &refs, Replay::Stepwise).unwrap();
            prop_assert_eq!(merged.ranking.len(), union.len().min(seq.len()));
            let distinct: BTreeSet<u64> = js(&merged.ranking).into_iter().collect();
            prop_assert_eq!(distinct.len(), merged.ranking.len());

            let spread = rankmerge_apply(&model, &refs, Replay::Proportional).unwrap();
            let expected = if seq.is_empty() { 0 } else { union.len() };
            prop_assert_eq!(spread.ranking.len(), expected);
            let distinct: BTreeSet<u64> = js(&spread.ranking).into_iter().collect();
            prop_assert_eq!(distinct.len(), expected);
            if seq.len() == union.len() {
                prop_assert_eq!(spread, merged);
            }
        }
    }
}
