//! Engine for a grounded-dialogue text adventure.
//!
//! * [`world`]: the typed entity graph every other module reads and mutates.
//! * [`action`]: command parsing, precondition rows, effects and the
//!   valid-action set.
//! * [`episode`]: two-character turn taking, episode logs and context
//!   serialization for the speech, action and emote tasks.
//! * [`agents`]: random, TF-IDF and bag-of-embeddings rankers.
//! * [`eval`]: R@1/20, accuracy, unigram F1, dataset statistics and
//!   action/emote co-occurrence.
//! * [`data`]: manifests, dataset loading with replay validation, splits and
//!   the external release importer.

pub mod action;
pub mod agents;
pub mod data;
pub mod episode;
pub mod eval;
pub mod exec;
pub mod fixtures;
pub mod synth;
pub mod text;
pub mod world;
