//! Evidence-grounding laboratory.
//!
//! The crate is split along the lines of the questions it answers:
//!
//! - [`infodyn`]: exact mutual-information dynamics of closed, open and
//!   vote-aggregating reasoning chains over finite alphabets.
//! - [`faithfulness`]: claim-level supported-faithfulness scoring (decompose,
//!   gate, aggregate) and its diagnostics.
//! - [`protocols`]: condition configs, agent backends and the runners for
//!   single-shot, debate and evidence-grounded Socratic protocols.
//! - [`stats`]: nonparametric tests, effect sizes, multiple-comparison control
//!   and inter-rater reliability.
//! - [`corpus`]: claim corpora, rating files, run artifacts and reports.

pub mod corpus;
pub mod faithfulness;
pub mod fixtures;
pub mod infodyn;
pub mod protocols;
pub mod rng;
pub mod stats;
pub mod text;

pub use faithfulness::{SfsEngine, SfsReport};
pub use infodyn::{DiscreteJoint, ProbVector};
pub use protocols::{ProtocolConfig, RunArtifact};
