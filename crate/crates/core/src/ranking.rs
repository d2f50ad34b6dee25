//! Rankings of candidate pairs and their pairwise Spearman correlation.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::ego::PairKey;
use crate::events::NodeId;
use crate::features::{FeatureError, ScoreId, ScoreTable};

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("duplicate pair {0} in ranking")]
    Duplicate(PairKey),
    #[error("scores increase at position {0}")]
    Unsorted(usize),
    #[error("{entries} entries but universe of {universe}")]
    Universe { entries: usize, universe: usize },
    #[error("scores and entries differ in length")]
    ScoreLength,
    #[error("unknown ranking id `{0}`")]
    UnknownId(String),
    #[error("score `{0}` is not in the table")]
    MissingScore(ScoreId),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("ranking line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// What produced a ranking: one score or one aggregator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RankingId {
    Score(ScoreId),
    Borda,
    Medrank,
    RankMerge,
}

impl fmt::Display for RankingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankingId::Score(id) => id.fmt(f),
            RankingId::Borda => f.write_str("borda"),
            RankingId::Medrank => f.write_str("medrank"),
            RankingId::RankMerge => f.write_str("rankmerge"),
        }
    }
}

impl FromStr for RankingId {
    type Err = RankingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "borda" => Ok(RankingId::Borda),
            "medrank" => Ok(RankingId::Medrank),
            "rankmerge" => Ok(RankingId::RankMerge),
            other => other
                .parse::<ScoreId>()
                .map(RankingId::Score)
                .map_err(|_| RankingError::UnknownId(other.to_string())),
        }
    }
}

impl From<ScoreId> for RankingId {
    fn from(id: ScoreId) -> Self {
        RankingId::Score(id)
    }
}

/// Candidate pairs ordered best first.
///
/// Pairs without a defined score are absent, so `entries` may be shorter
/// than the universe of candidate pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    id: RankingId,
    entries: Vec<PairKey>,
    scores: Option<Vec<f64>>,
    universe_size: usize,
}

impl Ranking {
    pub fn new(
        id: RankingId,
        entries: Vec<PairKey>,
        scores: Option<Vec<f64>>,
        universe_size: usize,
    ) -> Result<Self, RankingError> {
        if entries.len() > universe_size {
            return Err(RankingError::Universe {
                entries: entries.len(),
                universe: universe_size,
            });
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for key in &entries {
            if !seen.insert(*key) {
                return Err(RankingError::Duplicate(*key));
            }
        }
        if let Some(values) = &scores {
            if values.len() != entries.len() {
                return Err(RankingError::ScoreLength);
            }
            if let Some(pos) = values.windows(2).position(|w| w[1] > w[0]) {
                return Err(RankingError::Unsorted(pos + 1));
            }
        }
        Ok(Self {
            id,
            entries,
            scores,
            universe_size,
        })
    }

    /// Constructor for callers that uphold the invariants themselves.
    pub(crate) fn from_parts(
        id: RankingId,
        entries: Vec<PairKey>,
        scores: Option<Vec<f64>>,
        universe_size: usize,
    ) -> Self {
        debug_assert!(entries.len() <= universe_size);
        Self {
            id,
            entries,
            scores,
            universe_size,
        }
    }

    pub fn id(&self) -> RankingId {
        self.id
    }

    pub fn entries(&self) -> &[PairKey] {
        &self.entries
    }

    pub fn scores(&self) -> Option<&[f64]> {
        self.scores.as_deref()
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The entries belonging to one ego, in ranking order.
    pub fn restricted_to_ego(&self, ego: NodeId) -> Vec<PairKey> {
        self.entries.iter().copied().filter(|k| k.ego == ego).collect()
    }

    /// CSV with header `rank,ego,i,j,score`; rank is 1-based and the score
    /// cell is empty for rankings without scores.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "rank,ego,i,j,score")?;
        for (pos, key) in self.entries.iter().enumerate() {
            match &self.scores {
                Some(s) => writeln!(out, "{},{key},{}", pos + 1, s[pos])?,
                None => writeln!(out, "{},{key},", pos + 1)?,
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(
        input: R,
        id: RankingId,
        universe_size: usize,
    ) -> Result<Self, RankingError> {
        let mut entries = Vec::new();
        let mut scores = Vec::new();
        let mut has_scores = None;
        for (index, line) in input.lines().enumerate() {
            let line = line?;
            if index == 0 || line.is_empty() {
                continue;
            }
            let bad = |reason: String| RankingError::Parse {
                line: index + 1,
                reason,
            };
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 5 {
                return Err(bad("expected 5 cells".into()));
            }
            if cells[0].parse::<usize>().ok() != Some(entries.len() + 1) {
                return Err(bad(format!("rank `{}` out of sequence", cells[0])));
            }
            let node = |s: &str| s.parse::<NodeId>().map_err(|e| bad(e.to_string()));
            entries.push(PairKey {
                ego: node(cells[1])?,
                i: node(cells[2])?,
                j: node(cells[3])?,
            });
            let scored = !cells[4].is_empty();
            if *has_scores.get_or_insert(scored) != scored {
                return Err(bad("score column partially filled".into()));
            }
            if scored {
                scores.push(cells[4].parse::<f64>().map_err(|e| bad(e.to_string()))?);
            }
        }
        let scores = has_scores.unwrap_or(false).then_some(scores);
        Ranking::new(id, entries, scores, universe_size)
    }
}

/// Ranks the pairs of a score table by one score, best first.
///
/// Ties are broken by pair key `(ego, i, j)`; undefined values are left out.
pub fn build_ranking(table: &ScoreTable, id: ScoreId) -> Result<Ranking, RankingError> {
    let column = table.column(id).ok_or(RankingError::MissingScore(id))?;
    let mut scored: Vec<(f64, PairKey)> = table
        .pairs()
        .iter()
        .zip(column)
        .filter_map(|(pair, value)| value.map(|v| (v, pair.key)))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let (scores, entries) = scored.into_iter().unzip();
    Ok(Ranking::from_parts(
        RankingId::Score(id),
        entries,
        Some(scores),
        table.len(),
    ))
}

/// Symmetric matrix of Spearman coefficients; `None` where undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub ids: Vec<RankingId>,
    pub rho: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.rho[a][b]
    }

    /// Square CSV with a header row of ids; empty cells for undefined values.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "id")?;
        for id in &self.ids {
            write!(out, ",{id}")?;
        }
        writeln!(out)?;
        for (id, row) in self.ids.iter().zip(&self.rho) {
            write!(out, "{id}")?;
            for cell in row {
                match cell {
                    Some(v) => write!(out, ",{v}")?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Spearman correlation of two rankings over the union of their entries.
///
/// Positions are 1-based ranks; a pair missing from a ranking gets the tied
/// rank `len + 1` there. The coefficient is the Pearson correlation of the
/// two rank vectors, which accounts for the tied block. `None` when either
/// ranking has fewer than two entries or a rank vector is constant.
pub fn spearman(a: &Ranking, b: &Ranking) -> Option<f64> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let rank_b: HashMap<PairKey, usize> = b
        .entries
        .iter()
        .enumerate()
        .map(|(pos, k)| (*k, pos + 1))
        .collect();
    let missing_a = (a.len() + 1) as f64;
    let missing_b = (b.len() + 1) as f64;

    let mut xs = Vec::with_capacity(a.len() + b.len());
    let mut ys = Vec::with_capacity(a.len() + b.len());
    let mut in_a = HashSet::with_capacity(a.len());
    for (pos, key) in a.entries.iter().enumerate() {
        in_a.insert(*key);
        xs.push((pos + 1) as f64);
        ys.push(rank_b.get(key).map_or(missing_b, |&r| r as f64));
    }
    for (pos, key) in b.entries.iter().enumerate() {
        if !in_a.contains(key) {
            xs.push(missing_a);
            ys.push((pos + 1) as f64);
        }
    }
    pearson(&xs, &ys)
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman coefficients between every pair of rankings. Cells are computed
/// in parallel; the diagonal is exactly 1 for rankings with two or more
/// entries.
pub fn spearman_matrix(rankings: &[Ranking]) -> CorrelationMatrix {
    let n = rankings.len();
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let values: Vec<Option<f64>> = cells
        .par_iter()
        .map(|&(a, b)| spearman(&rankings[a], &rankings[b]))
        .collect();
    let mut rho = vec![vec![None; n]; n];
    for (a, ranking) in rankings.iter().enumerate() {
        if ranking.len() >= 2 {
            rho[a][a] = Some(1.0);
        }
    }
    for (&(a, b), value) in cells.iter().zip(values) {
        rho[a][b] = value;
        rho[b][a] = value;
    }
    CorrelationMatrix {
        ids: rankings.iter().map(Ranking::id).collect(),
        rho,
    }
}

impl From<FeatureError> for RankingError {
    fn from(e: FeatureError) -> Self {
        RankingError::UnknownId(e.to_string())
    }
}
