//! Combining rankings: unsupervised consensus and supervised merging.

mod consensus;
mod merge;

use std::collections::HashMap;

use thiserror::Error;

use crate::ego::PairKey;
use crate::ranking::{Ranking, RankingError, RankingId};

pub use consensus::{borda, medrank};
pub use merge::{
    rankmerge_apply, rankmerge_learn, tune_g, MergeModel, MergedRanking, Replay, Tuning,
    DEFAULT_G_GRID,
};

#[derive(Debug, Error)]
pub enum AggregationError {
    #[error("no input rankings")]
    NoRankings,
    #[error("window g must be at least 1")]
    ZeroWindow,
    #[error("empty g grid")]
    EmptyGrid,
    #[error("ranking ids do not match the model: expected {expected:?}, got {got:?}")]
    IdMismatch {
        expected: Vec<String>,
        got: Vec<String>,
    },
    #[error("model file line {line}: {reason}")]
    ModelFormat { line: usize, reason: String },
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dense `u32` handles for the pairs appearing in a set of rankings.
pub(crate) struct Interned {
    pub keys: Vec<PairKey>,
    pub lists: Vec<Vec<u32>>,
}

pub(crate) fn intern(rankings: &[&Ranking]) -> Interned {
    let mut index: HashMap<PairKey, u32> = HashMap::new();
    let mut keys = Vec::new();
    let lists = rankings
        .iter()
        .map(|r| {
            r.entries()
                .iter()
                .map(|key| {
                    *index.entry(*key).or_insert_with(|| {
                        keys.push(*key);
                        (keys.len() - 1) as u32
                    })
                })
                .collect()
        })
        .collect();
    Interned { keys, lists }
}

pub(crate) fn universe_of(rankings: &[&Ranking]) -> usize {
    rankings.iter().map(|r| r.universe_size()).max().unwrap_or(0)
}

pub(crate) fn ids_of(rankings: &[&Ranking]) -> Vec<RankingId> {
    rankings.iter().map(|r| r.id()).collect()
}
