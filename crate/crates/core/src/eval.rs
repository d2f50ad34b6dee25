//! Precision-recall evaluation of rankings against ground truth.

use std::io::{self, Write};

use thiserror::Error;

use crate::ego::{PairKey, PairLabels};
use crate::ranking::{Ranking, RankingId};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no positive pairs in the evaluation set")]
    NoPositives,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One prefix of a ranking: the top `n` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    pub tp: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

/// Precision, recall and F-score at every prefix length `1..=len`.
pub fn pr_curve(entries: &[PairKey], labels: &PairLabels) -> Result<Vec<CurvePoint>, EvalError> {
    let positives = labels.positives();
    if positives == 0 {
        return Err(EvalError::NoPositives);
    }
    let mut tp = 0usize;
    Ok(entries
        .iter()
        .enumerate()
        .map(|(idx, key)| {
            if labels.is_positive(key) {
                tp += 1;
            }
            let n = idx + 1;
            let precision = tp as f64 / n as f64;
            let recall = tp as f64 / positives as f64;
            let f_score = if tp == 0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            CurvePoint {
                n,
                tp,
                precision,
                recall,
                f_score,
            }
        })
        .collect())
}

/// Area under the precision-recall curve.
///
/// The segment from recall 0 to the first point is a rectangle at the first
/// point's precision; consecutive points are joined by trapezoids. The curve
/// stops where the ranking stops, so truncated rankings lose the tail area.
pub fn auc_pr(curve: &[CurvePoint]) -> f64 {
    let Some(first) = curve.first() else {
        return 0.0;
    };
    let mut area = first.recall * first.precision;
    for w in curve.windows(2) {
        area += (w[1].recall - w[0].recall) * (w[1].precision + w[0].precision) / 2.0;
    }
    area
}

pub fn ranking_auc(ranking: &Ranking, labels: &PairLabels) -> Result<f64, EvalError> {
    Ok(auc_pr(&pr_curve(ranking.entries(), labels)?))
}

/// Relative gain over a baseline; `None` when the baseline is zero.
pub fn improvement(value: f64, baseline: f64) -> Option<f64> {
    (baseline != 0.0).then(|| (value - baseline) / baseline)
}

/// Relative precision gain at each prefix length both curves reach.
pub fn precision_improvement(curve: &[CurvePoint], baseline: &[CurvePoint]) -> Vec<Option<f64>> {
    curve
        .iter()
        .zip(baseline)
        .map(|(c, b)| improvement(c.precision, b.precision))
        .collect()
}

/// Cumulative number of merged pairs taken from each input ranking.
///
/// Row `n - 1` holds the counts over the first `n` pairs, so every row sums
/// to its `n`.
pub fn contribution_trace(sources: &[usize], rankings: usize) -> Vec<Vec<u64>> {
    let mut counts = vec![0u64; rankings];
    sources
        .iter()
        .map(|&k| {
            counts[k] += 1;
            counts.clone()
        })
        .collect()
}

/// Headline numbers for one ranking on one evaluation set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub id: RankingId,
    pub length: usize,
    pub auc_pr: f64,
    /// Relative to the baseline ranking of the same report.
    pub improvement: Option<f64>,
}

pub fn summarize(
    rankings: &[&Ranking],
    labels: &PairLabels,
    baseline: RankingId,
) -> Result<Vec<EvalSummary>, EvalError> {
    let aucs = rankings
        .iter()
        .map(|r| ranking_auc(r, labels))
        .collect::<Result<Vec<_>, _>>()?;
    let base = rankings
        .iter()
        .position(|r| r.id() == baseline)
        .map(|idx| aucs[idx]);
    Ok(rankings
        .iter()
        .zip(aucs)
        .map(|(r, auc)| EvalSummary {
            id: r.id(),
            length: r.len(),
            auc_pr: auc,
            improvement: base.and_then(|b| improvement(auc, b)),
        })
        .collect())
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_curve_csv<W: Write>(mut out: W, curve: &[CurvePoint]) -> io::Result<()> {
    writeln!(out, "n,tp,precision,recall,fscore")?;
    for p in curve {
        writeln!(out, "{},{},{},{},{}", p.n, p.tp, p.precision, p.recall, p.f_score)?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(mut out: W, rows: &[EvalSummary]) -> io::Result<()> {
    writeln!(out, "ranking,length,auc_pr,improvement")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{}",
            row.id,
            row.length,
            row.auc_pr,
            opt(row.improvement)
        )?;
    }
    Ok(())
}

pub fn write_precision_improvement_csv<W: Write>(
    mut out: W,
    series: &[Option<f64>],
) -> io::Result<()> {
    writeln!(out, "n,precision_improvement")?;
    for (idx, value) in series.iter().enumerate() {
        writeln!(out, "{},{}", idx + 1, opt(*value))?;
    }
    Ok(())
}

pub fn write_contribution_csv<W: Write>(
    mut out: W,
    ids: &[RankingId],
    trace: &[Vec<u64>],
) -> io::Result<()> {
    writeln!(out, "n,ranking,cumulative")?;
    for (idx, row) in trace.iter().enumerate() {
        for (id, count) in ids.iter().zip(row) {
            writeln!(out, "{},{},{}", idx + 1, id, count)?;
        }
    }
    Ok(())
}
