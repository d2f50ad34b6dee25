//! Ego-networks, candidate neighbor pairs, degree classes and splits.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{Channel, CleanInteractionSet, NodeId};
use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum EgoError {
    #[error("ego {0} has fewer than two neighbors")]
    TooFewNeighbors(NodeId),
    #[error("ego {ego}: neighbor {neighbor} has no interactions")]
    EmptyLeg { ego: NodeId, neighbor: NodeId },
    #[error("ego {ego}: duplicate neighbor {neighbor}")]
    DuplicateNeighbor { ego: NodeId, neighbor: NodeId },
    #[error("ego {ego}: truth pair ({i}, {j}) is not a pair of neighbors")]
    ForeignTruth { ego: NodeId, i: NodeId, j: NodeId },
    #[error("invalid split proportions: {0}")]
    Proportions(String),
    #[error("invalid degree class `{0}`")]
    ClassLabel(String),
}

/// Interactions between the ego and one neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    neighbor: NodeId,
    call_times: Vec<i64>,
    call_durations: Vec<u64>,
    text_times: Vec<i64>,
}

impl Leg {
    pub fn new(neighbor: NodeId) -> Self {
        Self {
            neighbor,
            call_times: Vec::new(),
            call_durations: Vec::new(),
            text_times: Vec::new(),
        }
    }

    pub fn with_calls(mut self, calls: &[(i64, u64)]) -> Self {
        for &(t, d) in calls {
            self.push_call(t, d);
        }
        self
    }

    pub fn with_texts(mut self, texts: &[i64]) -> Self {
        for &t in texts {
            self.push_text(t);
        }
        self
    }

    pub fn push_call(&mut self, timestamp: i64, duration: u64) {
        self.call_times.push(timestamp);
        self.call_durations.push(duration);
    }

    pub fn push_text(&mut self, timestamp: i64) {
        self.text_times.push(timestamp);
    }

    fn sort(&mut self) {
        if !self.call_times.windows(2).all(|w| w[0] <= w[1]) {
            let mut calls: Vec<(i64, u64)> = self
                .call_times
                .iter()
                .copied()
                .zip(self.call_durations.iter().copied())
                .collect();
            calls.sort_by_key(|&(t, _)| t);
            (self.call_times, self.call_durations) = calls.into_iter().unzip();
        }
        self.text_times.sort_unstable();
    }

    pub fn neighbor(&self) -> NodeId {
        self.neighbor
    }

    /// Sorted timestamps of the given channel.
    pub fn times(&self, channel: Channel) -> &[i64] {
        match channel {
            Channel::Call => &self.call_times,
            Channel::Text => &self.text_times,
        }
    }

    pub fn call_durations(&self) -> &[u64] {
        &self.call_durations
    }

    pub fn weight(&self, channel: Channel) -> u64 {
        self.times(channel).len() as u64
    }

    pub fn total_weight(&self) -> u64 {
        (self.call_times.len() + self.text_times.len()) as u64
    }

    pub fn total_duration(&self) -> u64 {
        self.call_durations.iter().sum()
    }
}

/// An ego, its neighbors' interaction series, and the neighbor-neighbor links
/// that exist in the full network.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoNetwork {
    ego: NodeId,
    legs: Vec<Leg>,
    truth: BTreeSet<(NodeId, NodeId)>,
    total_weight: u64,
}

impl EgoNetwork {
    /// Validates and normalises an ego-network: legs are sorted by neighbor
    /// id, series by time, and truth pairs are stored as `(min, max)`.
    pub fn new(
        ego: NodeId,
        mut legs: Vec<Leg>,
        truth: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, EgoError> {
        if legs.len() < 2 {
            return Err(EgoError::TooFewNeighbors(ego));
        }
        legs.sort_by_key(|l| l.neighbor);
        for w in legs.windows(2) {
            if w[0].neighbor == w[1].neighbor {
                return Err(EgoError::DuplicateNeighbor {
                    ego,
                    neighbor: w[0].neighbor,
                });
            }
        }
        for leg in &mut legs {
            if leg.total_weight() == 0 {
                return Err(EgoError::EmptyLeg {
                    ego,
                    neighbor: leg.neighbor,
                });
            }
            leg.sort();
        }
        let mut pairs = BTreeSet::new();
        for (a, b) in truth {
            let (i, j) = if a <= b { (a, b) } else { (b, a) };
            let known = |n: NodeId| legs.binary_search_by_key(&n, |l| l.neighbor).is_ok();
            if i == j || !known(i) || !known(j) {
                return Err(EgoError::ForeignTruth { ego, i, j });
            }
            pairs.insert((i, j));
        }
        let total_weight = legs.iter().map(Leg::total_weight).sum();
        Ok(Self {
            ego,
            legs,
            truth: pairs,
            total_weight,
        })
    }

    pub fn ego(&self) -> NodeId {
        self.ego
    }

    /// Legs sorted by neighbor id.
    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn degree(&self) -> usize {
        self.legs.len()
    }

    /// `W(e)`: all interactions of the ego, both channels.
    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn truth(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.truth
    }

    pub fn leg(&self, neighbor: NodeId) -> Option<&Leg> {
        self.legs
            .binary_search_by_key(&neighbor, |l| l.neighbor)
            .ok()
            .map(|i| &self.legs[i])
    }

    pub fn is_linked(&self, i: NodeId, j: NodeId) -> bool {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.truth.contains(&key)
    }

    pub fn pair_count(&self) -> usize {
        let k = self.degree();
        k * (k - 1) / 2
    }

    /// Candidate pairs of this ego, ordered by `(i, j)`.
    pub fn pairs(&self) -> impl Iterator<Item = CandidatePair> + '_ {
        self.legs.iter().enumerate().flat_map(move |(a, li)| {
            self.legs[a + 1..].iter().map(move |lj| CandidatePair {
                key: PairKey {
                    ego: self.ego,
                    i: li.neighbor,
                    j: lj.neighbor,
                },
                label: self.is_linked(li.neighbor, lj.neighbor),
            })
        })
    }
}

/// Builds one ego-network per node with at least two neighbors.
///
/// When `only` is given, ego-networks are built for those nodes alone. The
/// truth of a neighbor pair is whether the two neighbors are linked in the
/// clean network. Output is sorted by ego id.
pub fn build_ego_networks(
    clean: &CleanInteractionSet,
    only: Option<&BTreeSet<NodeId>>,
) -> Vec<EgoNetwork> {
    let wanted = |n: NodeId| only.is_none_or(|set| set.contains(&n));
    let mut legs: BTreeMap<NodeId, BTreeMap<NodeId, Leg>> = BTreeMap::new();
    for event in clean.events() {
        for (ego, other) in [
            (event.source, event.destination),
            (event.destination, event.source),
        ] {
            if !wanted(ego) {
                continue;
            }
            let leg = legs
                .entry(ego)
                .or_default()
                .entry(other)
                .or_insert_with(|| Leg::new(other));
            match event.duration() {
                Some(duration) => leg.push_call(event.timestamp, duration),
                None => leg.push_text(event.timestamp),
            }
        }
    }

    let candidates: Vec<(NodeId, Vec<Leg>)> = legs
        .into_iter()
        .filter(|(_, l)| l.len() >= 2)
        .map(|(ego, l)| (ego, l.into_values().collect()))
        .collect();

    candidates
        .into_par_iter()
        .map(|(ego, legs)| {
            let mut truth = Vec::new();
            for (a, li) in legs.iter().enumerate() {
                for lj in &legs[a + 1..] {
                    if clean.is_linked(li.neighbor, lj.neighbor) {
                        truth.push((li.neighbor, lj.neighbor));
                    }
                }
            }
            EgoNetwork::new(ego, legs, truth).expect("legs built from clean events are valid")
        })
        .collect()
}

/// `(ego, i, j)` with `i < j`; the same neighbor pair under two egos is two keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairKey {
    pub ego: NodeId,
    pub i: NodeId,
    pub j: NodeId,
}

impl PairKey {
    pub fn new(ego: NodeId, a: NodeId, b: NodeId) -> Self {
        let (i, j) = if a <= b { (a, b) } else { (b, a) };
        Self { ego, i, j }
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.ego, self.i, self.j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidatePair {
    pub key: PairKey,
    pub label: bool,
}

/// All neighbor pairs of the given egos, in ego order.
pub fn enumerate_pairs<'a, I>(egos: I) -> Vec<CandidatePair>
where
    I: IntoIterator<Item = &'a EgoNetwork>,
{
    egos.into_iter().flat_map(EgoNetwork::pairs).collect()
}

/// Ground truth over a universe of candidate pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairLabels {
    positives: HashSet<PairKey>,
    universe: usize,
}

impl PairLabels {
    pub fn from_pairs(pairs: &[CandidatePair]) -> Self {
        Self {
            positives: pairs.iter().filter(|p| p.label).map(|p| p.key).collect(),
            universe: pairs.len(),
        }
    }

    pub fn is_positive(&self, key: &PairKey) -> bool {
        self.positives.contains(key)
    }

    pub fn positives(&self) -> usize {
        self.positives.len()
    }

    pub fn universe(&self) -> usize {
        self.universe
    }
}

/// Egos grouped by degree; degrees at or above the pooling threshold share a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DegreeClass {
    Exact(usize),
    AtLeast(usize),
}

impl DegreeClass {
    pub fn contains(&self, degree: usize) -> bool {
        match *self {
            DegreeClass::Exact(k) => degree == k,
            DegreeClass::AtLeast(k) => degree >= k,
        }
    }
}

impl fmt::Display for DegreeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegreeClass::Exact(k) => write!(f, "k={k}"),
            DegreeClass::AtLeast(k) => write!(f, "k>={k}"),
        }
    }
}

impl FromStr for DegreeClass {
    type Err = EgoError;

    /// Accepts `8`, `k=8`, `15+`, `>=15` and `k>=15`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EgoError::ClassLabel(s.to_string());
        let body = s.trim().trim_start_matches('k');
        if let Some(rest) = body.strip_prefix(">=") {
            return rest.parse().map(DegreeClass::AtLeast).map_err(|_| bad());
        }
        if let Some(rest) = body.strip_suffix('+') {
            return rest.parse().map(DegreeClass::AtLeast).map_err(|_| bad());
        }
        body.trim_start_matches('=')
            .parse()
            .map(DegreeClass::Exact)
            .map_err(|_| bad())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeClassScheme {
    /// Smallest degree of the pooled top class.
    pub pooled_from: usize,
}

impl Default for DegreeClassScheme {
    fn default() -> Self {
        Self { pooled_from: 15 }
    }
}

impl DegreeClassScheme {
    pub fn classify(&self, degree: usize) -> DegreeClass {
        if degree >= self.pooled_from {
            DegreeClass::AtLeast(self.pooled_from)
        } else {
            DegreeClass::Exact(degree)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SplitSet {
    Learning,
    Validation,
    Test,
}

impl SplitSet {
    pub const ALL: [SplitSet; 3] = [SplitSet::Learning, SplitSet::Validation, SplitSet::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitSet::Learning => "learn",
            SplitSet::Validation => "valid",
            SplitSet::Test => "test",
        }
    }
}

impl fmt::Display for SplitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "learn" => Ok(SplitSet::Learning),
            "valid" => Ok(SplitSet::Validation),
            "test" => Ok(SplitSet::Test),
            other => Err(format!("unknown split set `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitProportions {
    pub learning: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitProportions {
    fn default() -> Self {
        Self {
            learning: 0.6,
            validation: 0.2,
            test: 0.2,
        }
    }
}

impl SplitProportions {
    pub fn validate(&self) -> Result<(), EgoError> {
        let parts = [self.learning, self.validation, self.test];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(EgoError::Proportions(format!("{parts:?} outside [0, 1]")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(EgoError::Proportions(format!("{parts:?} sum to {sum}")));
        }
        Ok(())
    }

    /// Learning and validation sizes are floored; the remainder goes to test.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let floor = |p: f64| ((p * n as f64) + 1e-9).floor() as usize;
        let learning = floor(self.learning).min(n);
        let validation = floor(self.validation).min(n - learning);
        (learning, validation, n - learning - validation)
    }
}

/// Ego ids of one degree class, partitioned into the three sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeClassSplit {
    pub class: DegreeClass,
    pub learning: Vec<NodeId>,
    pub validation: Vec<NodeId>,
    pub test: Vec<NodeId>,
}

impl DegreeClassSplit {
    pub fn set(&self, set: SplitSet) -> &[NodeId] {
        match set {
            SplitSet::Learning => &self.learning,
            SplitSet::Validation => &self.validation,
            SplitSet::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.learning.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default)]
pub struct SplitOutcome {
    pub splits: BTreeMap<DegreeClass, DegreeClassSplit>,
    pub warnings: Vec<String>,
}

fn class_stream(class: DegreeClass) -> u64 {
    match class {
        DegreeClass::Exact(k) => k as u64,
        DegreeClass::AtLeast(k) => (1 << 32) | k as u64,
    }
}

/// Groups egos by degree class and splits each class with a seeded shuffle.
///
/// Classes smaller than `min_class_size` go entirely to learning, with a
/// warning. Each set lists ego ids in shuffled order.
pub fn split_degree_classes(
    egos: &[EgoNetwork],
    scheme: DegreeClassScheme,
    proportions: SplitProportions,
    seed: u64,
    min_class_size: usize,
) -> Result<SplitOutcome, EgoError> {
    proportions.validate()?;
    let mut grouped: BTreeMap<DegreeClass, Vec<NodeId>> = BTreeMap::new();
    for ego in egos {
        grouped
            .entry(scheme.classify(ego.degree()))
            .or_default()
            .push(ego.ego());
    }

    let mut outcome = SplitOutcome::default();
    for (class, mut ids) in grouped {
        ids.sort_unstable();
        if ids.len() < min_class_size {
            outcome.warnings.push(format!(
                "class {class} has {} egos (< {min_class_size}); all assigned to learning",
                ids.len()
            ));
            outcome.splits.insert(
                class,
                DegreeClassSplit {
                    class,
                    learning: ids,
                    validation: Vec::new(),
                    test: Vec::new(),
                },
            );
            continue;
        }
        let mut rng = seed::derived_rng(seed, 0x5e1f, class_stream(class));
        ids.shuffle(&mut rng);
        let (n_learn, n_valid, _) = proportions.sizes(ids.len());
        let test = ids.split_off(n_learn + n_valid);
        let validation = ids.split_off(n_learn);
        outcome.splits.insert(
            class,
            DegreeClassSplit {
                class,
                learning: ids,
                validation,
                test,
            },
        );
    }
    Ok(outcome)
}

/// Keeps at most `n` ids, chosen by a seeded shuffle; order is preserved.
pub fn sample_egos(ids: &[NodeId], n: usize, seed: u64) -> Vec<NodeId> {
    if ids.len() <= n {
        return ids.to_vec();
    }
    let mut picked: Vec<usize> = (0..ids.len()).collect();
    picked.shuffle(&mut seed::derived_rng(seed, 0x5a3b, ids.len() as u64));
    picked.truncate(n);
    picked.sort_unstable();
    picked.into_iter().map(|i| ids[i]).collect()
}

/// Writes `ego,k,neighbor:w,...` lines, with total weights.
pub fn write_ego_dump<W: Write>(mut out: W, egos: &[EgoNetwork]) -> io::Result<()> {
    for ego in egos {
        write!(out, "{},{}", ego.ego(), ego.degree())?;
        for leg in ego.legs() {
            write!(out, ",{}:{}", leg.neighbor(), leg.total_weight())?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes the split manifest as `ego,class,set` rows.
pub fn write_split_manifest<W: Write>(
    mut out: W,
    splits: &BTreeMap<DegreeClass, DegreeClassSplit>,
) -> io::Result<()> {
    writeln!(out, "ego,class,set")?;
    for split in splits.values() {
        for set in SplitSet::ALL {
            for ego in split.set(set) {
                writeln!(out, "{ego},{},{set}", split.class)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{preprocess, InteractionEvent, ObservationWindow};
    use proptest::prelude::*;

    fn linked(pairs: &[(u64, u64)]) -> CleanInteractionSet {
        let mut raw = Vec::new();
        for (t, &(a, b)) in pairs.iter().enumerate() {
            raw.push(InteractionEvent::call(a, b, t as i64 * 10, 30));
            raw.push(InteractionEvent::call(b, a, t as i64 * 10 + 1, 30));
        }
        preprocess(&raw, ObservationWindow::unbounded())
    }

    fn ego_of_degree(id: u64, k: usize) -> EgoNetwork {
        let legs = (0..k)
            .map(|n| Leg::new(NodeId(id * 100 + n as u64 + 1)).with_texts(&[n as i64]))
            .collect();
        EgoNetwork::new(NodeId(id), legs, []).unwrap()
    }

    #[test]
    fn triangle_gives_three_egos_with_opposite_pair() {
        let egos = build_ego_networks(&linked(&[(1, 2), (2, 3), (1, 3)]), None);
        assert_eq!(egos.len(), 3);
        for ego in &egos {
            assert_eq!(ego.degree(), 2);
            assert_eq!(ego.truth().len(), 1);
            let others: Vec<NodeId> = ego.legs().iter().map(Leg::neighbor).collect();
            assert!(ego.is_linked(others[0], others[1]));
        }
    }

    #[test]
    fn star_keeps_only_the_center() {
        let egos = build_ego_networks(&linked(&[(0, 1), (0, 2), (0, 3)]), None);
        assert_eq!(egos.len(), 1);
        assert_eq!(egos[0].ego(), NodeId(0));
        assert_eq!(egos[0].degree(), 3);
        assert!(egos[0].truth().is_empty());
    }

    #[test]
    fn path_middle_has_no_truth() {
        let egos = build_ego_networks(&linked(&[(1, 2), (2, 3)]), None);
        assert_eq!(egos.len(), 1);
        assert_eq!(egos[0].ego(), NodeId(2));
        assert!(egos[0].truth().is_empty());
    }

    #[test]
    fn ego_selection_restricts_output() {
        let only: BTreeSet<NodeId> = [NodeId(2)].into();
        let egos = build_ego_networks(&linked(&[(1, 2), (2, 3), (1, 3)]), Some(&only));
        assert_eq!(egos.len(), 1);
        assert_eq!(egos[0].ego(), NodeId(2));
    }

    #[test]
    fn legs_collect_series_and_weights() {
        let clean = preprocess(
            &[
                InteractionEvent::call(1, 2, 50, 30),
                InteractionEvent::call(2, 1, 10, 20),
                InteractionEvent::text(3, 1, 5),
            ],
            ObservationWindow::unbounded(),
        );
        let egos = build_ego_networks(&clean, None);
        let leg = egos[0].leg(NodeId(2)).unwrap();
        assert_eq!(leg.times(Channel::Call), &[10, 50]);
        assert_eq!(leg.call_durations(), &[20, 30]);
        assert_eq!(egos[0].total_weight(), 3);
    }

    #[test]
    fn constructor_validates() {
        let l = |n| Leg::new(NodeId(n)).with_texts(&[1]);
        assert_eq!(
            EgoNetwork::new(NodeId(0), vec![l(1)], []),
            Err(EgoError::TooFewNeighbors(NodeId(0)))
        );
        assert!(matches!(
            EgoNetwork::new(NodeId(0), vec![l(1), Leg::new(NodeId(2))], []),
            Err(EgoError::EmptyLeg { .. })
        ));
        assert!(matches!(
            EgoNetwork::new(NodeId(0), vec![l(1), l(2)], [(NodeId(1), NodeId(9))]),
            Err(EgoError::ForeignTruth { .. })
        ));
    }

    #[test]
    fn pair_counts() {
        assert_eq!(enumerate_pairs(&[ego_of_degree(1, 3)]).len(), 3);
        let many: Vec<EgoNetwork> = (0..1000).map(|e| ego_of_degree(e, 10)).collect();
        assert_eq!(enumerate_pairs(&many).len(), 45_000);
        assert!(enumerate_pairs(&[] as &[EgoNetwork]).is_empty());
    }

    #[test]
    fn split_proportions_on_ten_egos() {
        let egos: Vec<EgoNetwork> = (0..10).map(|e| ego_of_degree(e, 4)).collect();
        let outcome = split_degree_classes(
            &egos,
            DegreeClassScheme::default(),
            SplitProportions::default(),
            7,
            5,
        )
        .unwrap();
        let split = &outcome.splits[&DegreeClass::Exact(4)];
        assert_eq!(
            (split.learning.len(), split.validation.len(), split.test.len()),
            (6, 2, 2)
        );
    }

    #[test]
    fn high_degrees_are_pooled() {
        let egos: Vec<EgoNetwork> = [15, 17, 20].iter().enumerate().map(|(e, &k)| ego_of_degree(e as u64, k)).collect();
        let outcome = split_degree_classes(
            &egos,
            DegreeClassScheme::default(),
            SplitProportions::default(),
            1,
            5,
        )
        .unwrap();
        assert_eq!(outcome.splits.len(), 1);
        let split = &outcome.splits[&DegreeClass::AtLeast(15)];
        assert_eq!(split.learning.len(), 3);
        assert_eq!(outcome.warnings.len(), 1);
    }

    #[test]
    fn splits_are_deterministic() {
        let egos: Vec<EgoNetwork> = (0..40).map(|e| ego_of_degree(e, 3)).collect();
        let run = |seed| {
            split_degree_classes(&egos, DegreeClassScheme::default(), SplitProportions::default(), seed, 5)
                .unwrap()
                .splits
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn class_labels_round_trip() {
        for class in [DegreeClass::Exact(8), DegreeClass::AtLeast(15)] {
            assert_eq!(class.to_string().parse::<DegreeClass>().unwrap(), class);
        }
        assert_eq!("8".parse::<DegreeClass>().unwrap(), DegreeClass::Exact(8));
        assert_eq!("15+".parse::<DegreeClass>().unwrap(), DegreeClass::AtLeast(15));
        assert!("k=x".parse::<DegreeClass>().is_err());
    }

    #[test]
    fn sample_is_stable_subset() {
        let ids: Vec<NodeId> = (0..50).map(NodeId).collect();
        let a = sample_egos(&ids, 10, 9);
        assert_eq!(a.len(), 10);
        assert_eq!(a, sample_egos(&ids, 10, 9));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn ego_dump_format() {
        let ego = EgoNetwork::new(
            NodeId(7),
            vec![
                Leg::new(NodeId(2)).with_texts(&[1, 2]),
                Leg::new(NodeId(1)).with_calls(&[(3, 10)]),
            ],
            [],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_ego_dump(&mut buf, &[ego]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "7,2,1:1,2:2\n");
    }

    proptest! {
        #[test]
        fn split_partitions_each_class(degrees in prop::collection::vec(2usize..20, 0..80), seed in any::<u64>()) {
            let egos: Vec<EgoNetwork> = degrees.iter().enumerate().map(|(e, &k)| ego_of_degree(e as u64, k)).collect();
            let outcome = split_degree_classes(&egos, DegreeClassScheme::default(), SplitProportions::default(), seed, 5).unwrap();
            let mut seen = BTreeSet::new();
            for split in outcome.splits.values() {
                for set in SplitSet::ALL {
                    for id in split.set(set) {
                        prop_assert!(seen.insert(*id));
                        let ego = &egos[id.0 as usize];
                        prop_assert!(split.class.contains(ego.degree()));
                    }
                }
            }
            prop_assert_eq!(seen.len(), egos.len());
        }

        #[test]
        fn pair_count_identity(edges in prop::collection::vec((0u64..12, 0u64..12), 1..60)) {
            let edges: Vec<(u64, u64)> = edges.into_iter().filter(|(a, b)| a != b).collect();
            let egos = build_ego_networks(&linked(&edges), None);
            let expected: usize = egos.iter().map(|e| e.degree() * (e.degree() - 1) / 2).sum();
            let pairs = enumerate_pairs(&egos);
            prop_assert_eq!(pairs.len(), expected);
            for ego in &egos {
                let k = ego.degree();
                prop_assert!(ego.truth().len() <= k * (k - 1) / 2);
            }
            for p in &pairs {
                prop_assert!(p.key.i < p.key.j);
            }
        }
    }
}
