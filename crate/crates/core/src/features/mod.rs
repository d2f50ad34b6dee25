//! Per-pair scores and score tables.

mod calendar;
mod scores;

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::ego::{CandidatePair, EgoNetwork, Leg, PairKey};
use crate::events::{Channel, NodeId};

pub use calendar::{builtin_partitions, BuiltinPartition, Calendar, Side, TimelinePartition, HOURS_PER_WEEK};
pub use scores::{
    benchmark_scores, count_within, duration_score, elapsed_time_score, fano_factor, profile_counts,
    profile_score, regularity, regularity_score, DEFAULT_FANO_FLOOR,
};

const HOUR: i64 = 3600;

/// Elapsed-time windows used by the standard catalogue.
pub const DEFAULT_ELAPSED_WINDOWS: [i64; 4] = [HOUR, 3 * HOUR, 24 * HOUR, 168 * HOUR];

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("unknown score id `{0}`")]
    UnknownScore(String),
    #[error("invalid duration `{0}`")]
    BadDuration(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("score table line {line}: {reason}")]
    Table { line: usize, reason: String },
}

/// Identifier of one pair score.
///
/// String forms: `s1`..`s5`, `dur_call`, `reg_call`, `pr1_text`,
/// `d24h_call`, `d90s_text`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScoreId {
    /// Static weight benchmark `s1`..`s5`.
    Benchmark(u8),
    /// Call duration score.
    Duration,
    Regularity(Channel),
    Profile(BuiltinPartition, Channel),
    /// Elapsed-time score with the window in seconds.
    Elapsed(i64, Channel),
}

impl ScoreId {
    pub const S5: ScoreId = ScoreId::Benchmark(5);

    pub fn channel(&self) -> Option<Channel> {
        match *self {
            ScoreId::Benchmark(_) => None,
            ScoreId::Duration => Some(Channel::Call),
            ScoreId::Regularity(c) | ScoreId::Profile(_, c) | ScoreId::Elapsed(_, c) => Some(c),
        }
    }

    /// Elapsed-time and profile scores.
    pub fn is_temporal_pattern(&self) -> bool {
        matches!(self, ScoreId::Profile(..) | ScoreId::Elapsed(..))
    }
}

/// Formats a duration in seconds as `Nh` when it is whole hours, else `Ns`.
pub fn format_duration(seconds: i64) -> String {
    if seconds > 0 && seconds % HOUR == 0 {
        format!("{}h", seconds / HOUR)
    } else {
        format!("{seconds}s")
    }
}

/// Parses `90s`, `30m`, `3h`, `7d` or a bare number of seconds.
pub fn parse_duration(s: &str) -> Result<i64, FeatureError> {
    let bad = || FeatureError::BadDuration(s.to_string());
    let s = s.trim();
    let (digits, unit) = match s.char_indices().last() {
        Some((idx, c)) if c.is_ascii_alphabetic() => (&s[..idx], c),
        _ => (s, 's'),
    };
    let value: i64 = digits.parse().map_err(|_| bad())?;
    let scale = match unit {
        's' => 1,
        'm' => 60,
        'h' => HOUR,
        'd' => 24 * HOUR,
        _ => return Err(bad()),
    };
    let seconds = value.checked_mul(scale).ok_or_else(bad)?;
    if seconds <= 0 {
        return Err(bad());
    }
    Ok(seconds)
}

impl fmt::Display for ScoreId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ScoreId::Benchmark(n) => write!(f, "s{n}"),
            ScoreId::Duration => f.write_str("dur_call"),
            ScoreId::Regularity(c) => write!(f, "reg_{c}"),
            ScoreId::Profile(p, c) => write!(f, "pr{}_{c}", p.number()),
            ScoreId::Elapsed(d, c) => write!(f, "d{}_{c}", format_duration(d)),
        }
    }
}

impl FromStr for ScoreId {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || FeatureError::UnknownScore(s.to_string());
        if let Some(n) = s.strip_prefix('s') {
            return match n.parse::<u8>() {
                Ok(n @ 1..=5) => Ok(ScoreId::Benchmark(n)),
                _ => Err(unknown()),
            };
        }
        let (head, channel) = s.rsplit_once('_').ok_or_else(unknown)?;
        let channel: Channel = channel.parse().map_err(|_| unknown())?;
        if head == "dur" {
            return match channel {
                Channel::Call => Ok(ScoreId::Duration),
                Channel::Text => Err(unknown()),
            };
        }
        if head == "reg" {
            return Ok(ScoreId::Regularity(channel));
        }
        if let Some(n) = head.strip_prefix("pr") {
            let partition = n
                .parse()
                .ok()
                .and_then(BuiltinPartition::from_number)
                .ok_or_else(unknown)?;
            return Ok(ScoreId::Profile(partition, channel));
        }
        if let Some(d) = head.strip_prefix('d') {
            let window = parse_duration(d).map_err(|_| unknown())?;
            return Ok(ScoreId::Elapsed(window, channel));
        }
        Err(unknown())
    }
}

/// The eighteen-score catalogue: `s5`, duration, two regularities, eight
/// elapsed-time scores and six profile scores.
pub fn standard_catalogue() -> Vec<ScoreId> {
    catalogue_with_windows(&DEFAULT_ELAPSED_WINDOWS)
}

pub fn catalogue_with_windows(windows: &[i64]) -> Vec<ScoreId> {
    let mut ids = vec![
        ScoreId::S5,
        ScoreId::Duration,
        ScoreId::Regularity(Channel::Call),
        ScoreId::Regularity(Channel::Text),
    ];
    for channel in Channel::ALL {
        ids.extend(windows.iter().map(|&d| ScoreId::Elapsed(d, channel)));
    }
    for channel in Channel::ALL {
        ids.extend(BuiltinPartition::ALL.iter().map(|&p| ScoreId::Profile(p, channel)));
    }
    ids
}

/// What to score and how.
#[derive(Debug, Clone)]
pub struct ScoringConfig {
    pub scores: Vec<ScoreId>,
    pub fano_floor: f64,
    pub calendar: Calendar,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            scores: standard_catalogue(),
            fano_floor: DEFAULT_FANO_FLOOR,
            calendar: Calendar::utc(),
        }
    }
}

/// Scores of every candidate pair of a set of egos, one column per score.
/// `None` marks an undefined value.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    ids: Vec<ScoreId>,
    pairs: Vec<CandidatePair>,
    columns: Vec<Vec<Option<f64>>>,
}

impl ScoreTable {
    pub fn empty(ids: Vec<ScoreId>) -> Self {
        let columns = vec![Vec::new(); ids.len()];
        Self {
            ids,
            pairs: Vec::new(),
            columns,
        }
    }

    pub fn ids(&self) -> &[ScoreId] {
        &self.ids
    }

    pub fn pairs(&self) -> &[CandidatePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn column(&self, id: ScoreId) -> Option<&[Option<f64>]> {
        self.ids
            .iter()
            .position(|&x| x == id)
            .map(|c| self.columns[c].as_slice())
    }

    pub fn value(&self, row: usize, id: ScoreId) -> Option<f64> {
        self.column(id).and_then(|c| c[row])
    }

    /// Appends the rows of `other`; both tables must have the same columns.
    pub fn append(&mut self, other: ScoreTable) {
        assert_eq!(self.ids, other.ids, "score tables with different columns");
        self.pairs.extend(other.pairs);
        for (mine, theirs) in self.columns.iter_mut().zip(other.columns) {
            mine.extend(theirs);
        }
    }

    /// Wide CSV: `ego,i,j,label,<score ids...>`, empty cells for undefined.
    pub fn write_wide_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "ego,i,j,label")?;
        for id in &self.ids {
            write!(out, ",{id}")?;
        }
        writeln!(out)?;
        for (row, pair) in self.pairs.iter().enumerate() {
            write!(out, "{},{}", pair.key, u8::from(pair.label))?;
            for column in &self.columns {
                match column[row] {
                    Some(v) => write!(out, ",{v}")?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Long CSV: `ego,i,j,label,score_id,value`; undefined values are omitted.
    pub fn write_long_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "ego,i,j,label,score_id,value")?;
        for (row, pair) in self.pairs.iter().enumerate() {
            for (id, column) in self.ids.iter().zip(&self.columns) {
                if let Some(v) = column[row] {
                    writeln!(out, "{},{},{id},{v}", pair.key, u8::from(pair.label))?;
                }
            }
        }
        Ok(())
    }

    pub fn read_wide_csv<R: BufRead>(input: R) -> Result<Self, FeatureError> {
        let mut lines = input.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => {
                return Err(FeatureError::Table {
                    line: 1,
                    reason: "missing header".into(),
                })
            }
        };
        let fields: Vec<&str> = header.split(',').collect();
        if fields.len() < 4 || fields[..4] != ["ego", "i", "j", "label"] {
            return Err(FeatureError::Table {
                line: 1,
                reason: "header must start with ego,i,j,label".into(),
            });
        }
        let ids = fields[4..]
            .iter()
            .map(|f| f.parse())
            .collect::<Result<Vec<ScoreId>, _>>()?;
        let mut table = ScoreTable::empty(ids);
        for (index, line) in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| FeatureError::Table {
                line: index + 1,
                reason,
            };
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 4 + table.ids.len() {
                return Err(bad(format!("expected {} cells", 4 + table.ids.len())));
            }
            let node = |s: &str| s.parse::<NodeId>().map_err(|e| bad(e.to_string()));
            let key = PairKey {
                ego: node(cells[0])?,
                i: node(cells[1])?,
                j: node(cells[2])?,
            };
            let label = match cells[3] {
                "0" => false,
                "1" => true,
                other => return Err(bad(format!("bad label `{other}`"))),
            };
            table.pairs.push(CandidatePair { key, label });
            for (column, cell) in table.columns.iter_mut().zip(&cells[4..]) {
                let value = if cell.is_empty() {
                    None
                } else {
                    Some(cell.parse::<f64>().map_err(|e| bad(e.to_string()))?)
                };
                column.push(value);
            }
        }
        Ok(table)
    }
}

/// Per-leg quantities reused across the leg's pairs.
struct LegSummary {
    weight: [u64; 2],
    total: u64,
    duration: u64,
    regularity: [Option<f64>; 2],
    /// `[channel][partition] -> (w_A, w_B)`.
    profiles: [Vec<[u64; 2]>; 2],
}

fn channel_index(c: Channel) -> usize {
    match c {
        Channel::Call => 0,
        Channel::Text => 1,
    }
}

fn summarize(leg: &Leg, partitions: &[TimelinePartition], config: &ScoringConfig) -> LegSummary {
    let per_channel = |f: &dyn Fn(Channel) -> Vec<[u64; 2]>| [f(Channel::Call), f(Channel::Text)];
    LegSummary {
        weight: Channel::ALL.map(|c| leg.weight(c)),
        total: leg.total_weight(),
        duration: leg.total_duration(),
        regularity: Channel::ALL.map(|c| regularity(leg, c, config.fano_floor)),
        profiles: per_channel(&|c| {
            partitions
                .iter()
                .map(|p| profile_counts(leg.times(c), p, &config.calendar))
                .collect()
        }),
    }
}

/// Scores every pair of one ego.
///
/// Profile and elapsed-time scores of a channel are undefined when neither
/// leg has events on that channel.
pub fn score_ego(ego: &EgoNetwork, config: &ScoringConfig) -> ScoreTable {
    let partitions: Vec<TimelinePartition> = BuiltinPartition::ALL
        .iter()
        .map(|&p| TimelinePartition::builtin(p))
        .collect();
    let needs_profiles = config.scores.iter().any(|s| matches!(s, ScoreId::Profile(..)));
    let used: &[TimelinePartition] = if needs_profiles { &partitions } else { &[] };
    let summaries: Vec<LegSummary> = ego.legs().iter().map(|l| summarize(l, used, config)).collect();
    let total_duration: u64 = summaries.iter().map(|s| s.duration).sum();

    let mut table = ScoreTable::empty(config.scores.clone());
    let legs = ego.legs();
    for a in 0..legs.len() {
        for b in a + 1..legs.len() {
            let (li, lj) = (&legs[a], &legs[b]);
            let (si, sj) = (&summaries[a], &summaries[b]);
            table.pairs.push(CandidatePair {
                key: PairKey {
                    ego: ego.ego(),
                    i: li.neighbor(),
                    j: lj.neighbor(),
                },
                label: ego.is_linked(li.neighbor(), lj.neighbor()),
            });
            let benchmarks =
                scores::benchmark_from_weights(si.total, sj.total, ego.degree(), ego.total_weight());
            for (column, id) in table.columns.iter_mut().zip(&config.scores) {
                let silent = |c: Channel| {
                    let ch = channel_index(c);
                    si.weight[ch] == 0 && sj.weight[ch] == 0
                };
                let value = match *id {
                    ScoreId::Benchmark(n) => Some(benchmarks[usize::from(n) - 1]),
                    ScoreId::Duration => {
                        scores::duration_from_totals(si.duration, sj.duration, total_duration)
                    }
                    ScoreId::Regularity(c) => {
                        let ch = channel_index(c);
                        si.regularity[ch].zip(sj.regularity[ch]).map(|(x, y)| x * y)
                    }
                    ScoreId::Profile(_, c) if silent(c) => None,
                    ScoreId::Profile(p, c) => {
                        let ch = channel_index(c);
                        let idx = BuiltinPartition::ALL.iter().position(|&q| q == p).unwrap();
                        Some(scores::profile_from_counts(
                            si.profiles[ch][idx],
                            sj.profiles[ch][idx],
                            ego.total_weight(),
                        ))
                    }
                    ScoreId::Elapsed(_, c) if silent(c) => None,
                    ScoreId::Elapsed(d, c) => Some(
                        count_within(li.times(c), lj.times(c), d) as f64 / ego.total_weight() as f64,
                    ),
                };
                column.push(value);
            }
        }
    }
    table
}

/// Scores all pairs of the given egos, in ego order. Egos are scored in
/// parallel and concatenated.
pub fn compute_scores(egos: &[&EgoNetwork], config: &ScoringConfig) -> ScoreTable {
    let parts: Vec<ScoreTable> = egos.par_iter().map(|ego| score_ego(ego, config)).collect();
    let mut table = ScoreTable::empty(config.scores.clone());
    for part in parts {
        table.append(part);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(id: u64) -> NodeId {
        NodeId(id)
    }

    fn sample_ego() -> EgoNetwork {
        EgoNetwork::new(
            n(0),
            vec![
                Leg::new(n(1))
                    .with_calls(&[(1_704_067_200, 60), (1_704_070_000, 30), (1_704_500_000, 10)])
                    .with_texts(&[1_704_100_000]),
                Leg::new(n(2)).with_calls(&[(1_704_068_000, 40)]),
                Leg::new(n(3)).with_texts(&[1_704_069_000, 1_704_169_000, 1_704_269_000]),
            ],
            [(n(1), n(2))],
        )
        .unwrap()
    }

    #[test]
    fn score_ids_round_trip() {
        for id in standard_catalogue() {
            assert_eq!(id.to_string().parse::<ScoreId>().unwrap(), id);
        }
        for s in ["s1", "s4", "d90s_text", "d7h_call"] {
            assert_eq!(s.parse::<ScoreId>().unwrap().to_string(), s);
        }
        assert_eq!("d30m_call".parse::<ScoreId>().unwrap(), ScoreId::Elapsed(1800, Channel::Call));
        for bad in ["s0", "s6", "dur_text", "pr4_call", "d0h_call", "x_call", "reg_fax"] {
            assert!(bad.parse::<ScoreId>().is_err(), "{bad}");
        }
    }

    #[test]
    fn catalogue_has_eighteen_distinct_scores() {
        let ids = standard_catalogue();
        assert_eq!(ids.len(), 18);
        let names: Vec<String> = ids.iter().map(ToString::to_string).collect();
        assert_eq!(
            names,
            [
                "s5", "dur_call", "reg_call", "reg_text", "d1h_call", "d3h_call", "d24h_call",
                "d168h_call", "d1h_text", "d3h_text", "d24h_text", "d168h_text", "pr1_call",
                "pr2_call", "pr3_call", "pr1_text", "pr2_text", "pr3_text"
            ]
        );
    }

    #[test]
    fn parse_durations() {
        assert_eq!(parse_duration("1h").unwrap(), 3600);
        assert_eq!(parse_duration("168h").unwrap(), 604_800);
        assert_eq!(parse_duration("45").unwrap(), 45);
        assert_eq!(parse_duration("2d").unwrap(), 172_800);
        assert!(parse_duration("-1h").is_err());
        assert!(parse_duration("h").is_err());
    }

    #[test]
    fn table_matches_per_pair_functions() {
        let ego = sample_ego();
        let config = ScoringConfig {
            scores: {
                let mut ids = standard_catalogue();
                ids.extend([1, 2, 3, 4].map(ScoreId::Benchmark));
                ids
            },
            ..ScoringConfig::default()
        };
        let table = score_ego(&ego, &config);
        let cal = Calendar::utc();
        assert_eq!(table.len(), 3);
        for (row, pair) in table.pairs().iter().enumerate() {
            let (i, j) = (pair.key.i, pair.key.j);
            for &id in table.ids() {
                let got = table.value(row, id);
                let expected = match id {
                    ScoreId::Benchmark(k) => Some(benchmark_scores(&ego, i, j)[usize::from(k) - 1]),
                    ScoreId::Duration => duration_score(&ego, i, j),
                    ScoreId::Regularity(c) => regularity_score(&ego, i, j, c, DEFAULT_FANO_FLOOR),
                    ScoreId::Profile(p, c) => {
                        Some(profile_score(&ego, i, j, &TimelinePartition::builtin(p), &cal, c))
                    }
                    ScoreId::Elapsed(d, c) => Some(elapsed_time_score(&ego, i, j, d, c)),
                };
                let silent = id.is_temporal_pattern() && {
                    let c = id.channel().unwrap();
                    ego.leg(i).unwrap().weight(c) == 0 && ego.leg(j).unwrap().weight(c) == 0
                };
                if silent {
                    assert_eq!(got, None, "{id} on {}", pair.key);
                } else {
                    assert_eq!(got, expected, "{id} on {}", pair.key);
                }
            }
        }
        assert!(table.pairs()[0].label);
        // Legs 2 and 3 share no channel-specific events on texts? Leg 2 has no
        // texts, leg 3 has three, so text scores are defined (zero).
        assert_eq!(table.value(2, ScoreId::Elapsed(3600, Channel::Text)), Some(0.0));
        // Leg 3 has no calls and leg 2 has one, so call scores are defined too.
        assert_eq!(table.value(2, ScoreId::Elapsed(3600, Channel::Call)), Some(0.0));
    }

    #[test]
    fn silent_channel_is_undefined() {
        let ego = EgoNetwork::new(
            n(0),
            vec![
                Leg::new(n(1)).with_calls(&[(0, 5)]),
                Leg::new(n(2)).with_calls(&[(10, 5)]),
            ],
            [],
        )
        .unwrap();
        let table = score_ego(&ego, &ScoringConfig::default());
        assert_eq!(table.value(0, ScoreId::Elapsed(3600, Channel::Text)), None);
        assert_eq!(table.value(0, ScoreId::Profile(BuiltinPartition::Weekdays, Channel::Text)), None);
        assert_eq!(table.value(0, ScoreId::Elapsed(3600, Channel::Call)), Some(0.5));
    }

    #[test]
    fn wide_csv_round_trips() {
        let ego = sample_ego();
        let egos = [&ego, &ego];
        let table = compute_scores(&egos, &ScoringConfig::default());
        assert_eq!(table.len(), 6);
        let mut buf = Vec::new();
        table.write_wide_csv(&mut buf).unwrap();
        let back = ScoreTable::read_wide_csv(buf.as_slice()).unwrap();
        assert_eq!(back, table);

        let mut long = Vec::new();
        table.write_long_csv(&mut long).unwrap();
        let text = String::from_utf8(long).unwrap();
        assert!(text.starts_with("ego,i,j,label,score_id,value\n0,1,2,1,s5,"));
    }

    #[test]
    fn malformed_table_is_rejected() {
        assert!(ScoreTable::read_wide_csv("a,b\n".as_bytes()).is_err());
        assert!(ScoreTable::read_wide_csv("ego,i,j,label,s5\n1,2,3,7,0.5\n".as_bytes()).is_err());
        assert!(ScoreTable::read_wide_csv("ego,i,j,label,s9\n".as_bytes()).is_err());
    }
}
