//! Synthetic interaction logs with planted social circles.
//!
//! Each ego's neighbors are split into circles. Neighbor pairs inside a
//! circle are linked with probability `p_in`, other pairs with `p_out`.
//! Ego-neighbor events follow a Poisson process restricted to the circle's
//! activity hours, and every event may echo onto another leg of the same
//! circle shortly afterwards. Every planted link is emitted as a reciprocated
//! call pair between the two neighbors, so the truth survives preprocessing.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{InteractionEvent, NodeId, ObservationWindow};
use crate::features::HOURS_PER_WEEK;
use crate::seed::derived_rng;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    Invalid(String),
}

/// How circles map to weekly activity hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileMode {
    /// Circles cycle through weekday office hours, weekend days and weekday
    /// evenings.
    Distinct,
    /// Every circle is active around the clock.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Number of egos per degree. Keys are strings in TOML (`{ 8 = 100 }`).
    #[serde(with = "degree_keys")]
    pub degrees: BTreeMap<usize, usize>,
    pub circles_per_ego: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Expected events per leg per day before cascades.
    pub base_rate: f64,
    pub cascade_prob: f64,
    /// Seconds.
    pub cascade_window: i64,
    pub profiles: ProfileMode,
    /// Log-normal spread of per-ego activity.
    pub activity_sigma: f64,
    /// Log-normal spread of per-leg tie strength.
    pub tie_strength_sigma: f64,
    /// In `[0, 1]`: how strongly link probability follows tie strength.
    /// Pair `(i, j)` is linked with `p * (1 - c + c * q_i * q_j)`, where `q`
    /// is tie strength relative to the ego's strongest leg.
    pub tie_link_coupling: f64,
    /// Log-normal parameters of call durations in seconds.
    pub duration_mu: f64,
    pub duration_sigma: f64,
    pub text_fraction: f64,
    pub window_start: i64,
    pub window_days: i64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            degrees: BTreeMap::from([(8, 100)]),
            circles_per_ego: 2,
            p_in: 0.8,
            p_out: 0.05,
            base_rate: 1.0,
            cascade_prob: 0.5,
            cascade_window: 1800,
            profiles: ProfileMode::Distinct,
            activity_sigma: 0.0,
            tie_strength_sigma: 0.0,
            tie_link_coupling: 0.0,
            duration_mu: 4.5,
            duration_sigma: 1.0,
            text_fraction: 0.3,
            // 2024-01-01 00:00 UTC, a Monday.
            window_start: 1_704_067_200,
            window_days: 28,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn n_egos(&self) -> usize {
        self.degrees.values().sum()
    }

    pub fn window(&self) -> ObservationWindow {
        ObservationWindow::new(self.window_start, self.window_start + self.window_days * 86_400)
            .expect("validated window")
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::Invalid(msg));
        for (name, p) in [
            ("p_in", self.p_in),
            ("p_out", self.p_out),
            ("cascade_prob", self.cascade_prob),
            ("text_fraction", self.text_fraction),
            ("tie_link_coupling", self.tie_link_coupling),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if !(self.base_rate > 0.0 && self.base_rate.is_finite()) {
            return bad(format!("base_rate = {} must be positive", self.base_rate));
        }
        if self.cascade_window <= 0 {
            return bad("cascade_window must be positive".into());
        }
        if self.window_days <= 0 {
            return bad("window_days must be positive".into());
        }
        for (name, s) in [
            ("activity_sigma", self.activity_sigma),
            ("tie_strength_sigma", self.tie_strength_sigma),
            ("duration_sigma", self.duration_sigma),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return bad(format!("{name} must be a finite non-negative number"));
            }
        }
        if self.circles_per_ego == 0 {
            return bad("circles_per_ego must be at least 1".into());
        }
        for (&k, &count) in &self.degrees {
            if count == 0 {
                continue;
            }
            if k < 2 {
                return bad(format!("degree {k} is below 2"));
            }
            if self.circles_per_ego > k {
                return bad(format!(
                    "{} circles cannot be formed from {k} neighbors",
                    self.circles_per_ego
                ));
            }
        }
        if self.n_egos() == 0 {
            return bad("no egos requested".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub events: Vec<InteractionEvent>,
    /// Planted neighbor-neighbor links as `(ego, i, j)` with `i < j`.
    pub truth: Vec<(NodeId, NodeId, NodeId)>,
    pub egos: Vec<NodeId>,
    pub window: ObservationWindow,
}

impl SyntheticDataset {
    pub fn write_truth<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "ego,i,j")?;
        for (e, i, j) in &self.truth {
            writeln!(out, "{e},{i},{j}")?;
        }
        Ok(())
    }

    pub fn write_egos<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.egos {
            writeln!(out, "{e}")?;
        }
        Ok(())
    }
}

fn profile_mask(mode: ProfileMode, circle: usize) -> [bool; HOURS_PER_WEEK] {
    let mut mask = [false; HOURS_PER_WEEK];
    for (how, slot) in mask.iter_mut().enumerate() {
        let (day, hour) = (how / 24, how % 24);
        let weekday = day < 5;
        *slot = match mode {
            ProfileMode::Uniform => true,
            ProfileMode::Distinct => match circle % 3 {
                0 => weekday && (8..18).contains(&hour),
                1 => !weekday && (9..23).contains(&hour),
                _ => weekday && hour >= 18,
            },
        };
    }
    mask
}

/// Start times of the active hours of a profile inside the window.
fn active_slots(config: &SynthConfig, mask: &[bool; HOURS_PER_WEEK]) -> Vec<i64> {
    let start = config.window_start;
    let hours = config.window_days * 24;
    let first_how = (start.div_euclid(3600) + 72).rem_euclid(HOURS_PER_WEEK as i64);
    (0..hours)
        .filter(|h| mask[((first_how + h) % HOURS_PER_WEEK as i64) as usize])
        .map(|h| start.div_euclid(3600) * 3600 + h * 3600)
        .filter(|&t| t >= start)
        .collect()
}

/// Log-normal multiplier with mean 1.
fn multiplier(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    LogNormal::new(-sigma * sigma / 2.0, sigma)
        .expect("finite sigma")
        .sample(rng)
}

struct Draft {
    t: i64,
    text: bool,
}

struct EgoPlan {
    ego: u64,
    first_neighbor: u64,
    degree: usize,
}

/// Generates the log and the planted truth. Deterministic in `config.seed`.
pub fn generate(config: &SynthConfig) -> Result<SyntheticDataset, SynthError> {
    config.validate()?;
    let n_egos = config.n_egos() as u64;
    let mut plans = Vec::new();
    let mut next_neighbor = n_egos + 1;
    let mut ego = 1u64;
    for (&k, &count) in &config.degrees {
        for _ in 0..count {
            plans.push(EgoPlan {
                ego,
                first_neighbor: next_neighbor,
                degree: k,
            });
            ego += 1;
            next_neighbor += k as u64;
        }
    }
    let profiles: Vec<Vec<i64>> = (0..config.circles_per_ego.min(3))
        .map(|c| active_slots(config, &profile_mask(config.profiles, c)))
        .collect();
    if profiles.iter().any(Vec::is_empty) {
        return Err(SynthError::Invalid(
            "observation window misses a circle's active hours".into(),
        ));
    }
    let parts: Vec<_> = plans
        .par_iter()
        .map(|plan| generate_ego(config, plan, &profiles))
        .collect();
    let mut events = Vec::new();
    let mut truth = Vec::new();
    for (ev, tr) in parts {
        events.extend(ev);
        truth.extend(tr);
    }
    Ok(SyntheticDataset {
        events,
        truth,
        egos: plans.iter().map(|p| NodeId(p.ego)).collect(),
        window: config.window(),
    })
}

fn generate_ego(
    config: &SynthConfig,
    plan: &EgoPlan,
    profiles: &[Vec<i64>],
) -> (Vec<InteractionEvent>, Vec<(NodeId, NodeId, NodeId)>) {
    let mut rng = derived_rng(config.seed, 0x5917, plan.ego);
    let k = plan.degree;
    let c = config.circles_per_ego;
    let window = config.window();
    let end = window.end();

    // Circle sizes are as equal as possible; ids are shuffled against circles.
    let mut circle_of: Vec<usize> = (0..k).map(|m| m % c).collect();
    circle_of.shuffle(&mut rng);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (m, &circle) in circle_of.iter().enumerate() {
        members[circle].push(m);
    }
    let activity = multiplier(&mut rng, config.activity_sigma);
    let strength: Vec<f64> = (0..k)
        .map(|_| multiplier(&mut rng, config.tie_strength_sigma))
        .collect();
    let strongest = strength.iter().cloned().fold(f64::MIN, f64::max);

    let id = |m: usize| plan.first_neighbor + m as u64;
    let mut truth = Vec::new();
    let mut events = Vec::new();
    let span_secs = config.window_days * 86_400;
    for a in 0..k {
        for b in a + 1..k {
            let base = if circle_of[a] == circle_of[b] {
                config.p_in
            } else {
                config.p_out
            };
            let coupling = config.tie_link_coupling;
            let q = strength[a] * strength[b] / (strongest * strongest);
            let p = base * (1.0 - coupling + coupling * q);
            if rng.random::<f64>() < p {
                truth.push((NodeId(plan.ego), NodeId(id(a)), NodeId(id(b))));
                let t1 = config.window_start + rng.random_range(0..span_secs);
                let t2 = config.window_start + rng.random_range(0..span_secs);
                events.push(InteractionEvent::call(id(a), id(b), t1, 60));
                events.push(InteractionEvent::call(id(b), id(a), t2, 60));
            }
        }
    }

    let sample_time = |rng: &mut ChaCha8Rng, circle: usize| -> i64 {
        let slots = &profiles[circle % profiles.len()];
        slots[rng.random_range(0..slots.len())] + rng.random_range(0..3600)
    };
    let mut drafts: Vec<Vec<Draft>> = (0..k).map(|_| Vec::new()).collect();
    for m in 0..k {
        let lambda = config.base_rate * config.window_days as f64 * activity * strength[m];
        let count = if lambda > 0.0 {
            Poisson::new(lambda).expect("positive rate").sample(&mut rng) as usize
        } else {
            0
        };
        for _ in 0..count {
            let t = sample_time(&mut rng, circle_of[m]);
            let text = rng.random::<f64>() < config.text_fraction;
            drafts[m].push(Draft { t, text });
        }
    }
    // One level of cascades, from the primary events only.
    let mut echoes: Vec<(usize, Draft)> = Vec::new();
    for m in 0..k {
        let peers = &members[circle_of[m]];
        if peers.len() < 2 {
            continue;
        }
        for d in &drafts[m] {
            if rng.random::<f64>() >= config.cascade_prob {
                continue;
            }
            let mut target = peers[rng.random_range(0..peers.len() - 1)];
            if target == m {
                target = peers[peers.len() - 1];
            }
            let t = d.t + rng.random_range(0..config.cascade_window);
            if t < end {
                echoes.push((target, Draft { t, text: d.text }));
            }
        }
    }
    for (m, d) in echoes {
        drafts[m].push(d);
    }
    let durations = LogNormal::new(config.duration_mu, config.duration_sigma).expect("valid");
    for m in 0..k {
        let leg = &mut drafts[m];
        if leg.is_empty() {
            let t = sample_time(&mut rng, circle_of[m]);
            leg.push(Draft { t, text: true });
        }
        leg.sort_by_key(|d| d.t);
        // Calls survive preprocessing only if both directions occur; a lone
        // call becomes a text.
        let calls = leg.iter().filter(|d| !d.text).count();
        if calls == 1 {
            leg.iter_mut().for_each(|d| d.text = true);
        }
        let mut nth_call = 0;
        for d in leg.iter() {
            let outgoing = match (d.text, nth_call) {
                (false, 0) => true,
                (false, 1) => false,
                _ => rng.random::<bool>(),
            };
            let (src, dst) = if outgoing {
                (plan.ego, id(m))
            } else {
                (id(m), plan.ego)
            };
            if d.text {
                events.push(InteractionEvent::text(src, dst, d.t));
            } else {
                nth_call += 1;
                let secs = durations.sample(&mut rng).round().max(1.0) as u64;
                events.push(InteractionEvent::call(src, dst, d.t, secs));
            }
        }
    }
    events.sort_by_key(|e| e.timestamp);
    (events, truth)
}

mod degree_keys {
    use std::collections::BTreeMap;

    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<usize, usize>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(map.iter().map(|(k, v)| (k.to_string(), v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<usize, usize>, D::Error> {
        BTreeMap::<String, usize>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                k.trim()
                    .parse()
                    .map(|k| (k, v))
                    .map_err(|_| D::Error::custom(format!("degree `{k}` is not an integer")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ego::build_ego_networks;
    use crate::events::preprocess;
    use crate::features::Calendar;
    use std::collections::BTreeSet;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            degrees: BTreeMap::from([(6, 20), (9, 10)]),
            circles_per_ego: 2,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate(&small(3)).unwrap();
        let b = generate(&small(3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.events, generate(&small(4)).unwrap().events);
    }

    #[test]
    fn cliques_when_circles_are_exclusive() {
        let cfg = SynthConfig {
            p_in: 1.0,
            p_out: 0.0,
            ..small(1)
        };
        let data = generate(&cfg).unwrap();
        let per_ego: BTreeMap<NodeId, usize> =
            data.truth.iter().fold(BTreeMap::new(), |mut acc, (e, _, _)| {
                *acc.entry(*e).or_default() += 1;
                acc
            });
        // Two cliques of 3 for k=6, cliques of 5 and 4 for k=9.
        for (e, count) in per_ego {
            let expected = if e.0 <= 20 { 3 + 3 } else { 10 + 6 };
            assert_eq!(count, expected);
        }
    }

    #[test]
    fn survives_preprocessing_with_planted_degrees() {
        let cfg = small(9);
        let data = generate(&cfg).unwrap();
        let clean = preprocess(&data.events, data.window);
        let calls_in = data.events.iter().filter(|e| e.duration().is_some()).count();
        let calls_out = clean.events().iter().filter(|e| e.duration().is_some()).count();
        assert_eq!(calls_in, calls_out);
        assert_eq!(clean.events().len(), data.events.len());
        let only: BTreeSet<NodeId> = data.egos.iter().copied().collect();
        let egos = build_ego_networks(&clean, Some(&only));
        assert_eq!(egos.len(), 30);
        let truth: BTreeSet<_> = data.truth.iter().copied().collect();
        for ego in &egos {
            assert_eq!(ego.degree(), if ego.ego().0 <= 20 { 6 } else { 9 });
            for pair in ego.pairs() {
                assert_eq!(pair.label, truth.contains(&(pair.key.ego, pair.key.i, pair.key.j)));
            }
        }
    }

    #[test]
    fn distinct_profiles_stay_in_their_hours() {
        let cfg = SynthConfig {
            cascade_prob: 0.0,
            ..small(5)
        };
        let data = generate(&cfg).unwrap();
        let cal = Calendar::utc();
        let egos: BTreeSet<u64> = data.egos.iter().map(|e| e.0).collect();
        for e in &data.events {
            if !egos.contains(&e.source.0) && !egos.contains(&e.destination.0) {
                continue;
            }
            let how = cal.hour_of_week(e.timestamp);
            let any = (0..3).any(|c| profile_mask(ProfileMode::Distinct, c)[how]);
            assert!(any, "event at hour {how} outside every profile");
        }
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = small(0);
        cfg.circles_per_ego = 7;
        cfg.degrees = BTreeMap::from([(6, 1)]);
        assert!(generate(&cfg).is_err());
        for tweak in [
            |c: &mut SynthConfig| c.p_in = 1.5,
            |c: &mut SynthConfig| c.cascade_window = 0,
            |c: &mut SynthConfig| c.base_rate = 0.0,
            |c: &mut SynthConfig| c.circles_per_ego = 0,
            |c: &mut SynthConfig| c.degrees = BTreeMap::new(),
        ] {
            let mut cfg = small(0);
            tweak(&mut cfg);
            assert!(generate(&cfg).is_err());
        }
    }

    #[test]
    fn masks_cover_expected_hours() {
        let count = |c| profile_mask(ProfileMode::Distinct, c).iter().filter(|&&b| b).count();
        assert_eq!(count(0), 50);
        assert_eq!(count(1), 28);
        assert_eq!(count(2), 30);
        let slots = active_slots(&SynthConfig::default(), &profile_mask(ProfileMode::Distinct, 0));
        assert_eq!(slots.len(), 4 * 50);
        assert_eq!(slots[0], 1_704_067_200 + 8 * 3600);
    }
}
