//! Link prediction inside ego-networks from interaction timing.
//!
//! The crate is organised as a batch pipeline:
//!
//! - [`events`]: parse call/text logs and apply the reciprocity filters.
//! - [`ego`]: build ego-networks, enumerate candidate neighbor pairs, split
//!   egos into degree classes and learning/validation/test sets.
//! - [`features`]: per-pair scores (static weight benchmarks, call duration,
//!   regularity, temporal profiles, elapsed time between contacts).
//! - [`ranking`]: rankings over candidate pairs and Spearman correlation.
//! - [`aggregation`]: Borda, Medrank and the supervised rank merge.
//! - [`eval`]: precision/recall curves, AUC-PR, improvement and
//!   contribution traces.
//! - [`synth`]: synthetic interaction logs with planted social circles.

pub mod aggregation;
pub mod ego;
pub mod eval;
pub mod events;
pub mod features;
pub mod ranking;
mod seed;
pub mod synth;

pub use ego::{CandidatePair, DegreeClass, EgoNetwork, PairKey, PairLabels};
pub use events::{Channel, CleanInteractionSet, InteractionEvent, NodeId, ObservationWindow};
pub use ranking::{Ranking, RankingId};
