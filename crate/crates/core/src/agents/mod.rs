//! Candidate rankers and in-process players.

mod embed;
mod model_file;
mod player;
mod tfidf;

pub use embed::{
    embed_rank, gradient_check, interleave_uniform, nearest_neighbors, train_embedding, CandidateCache, EmbedRanker,
    EmbeddingModel, Hyperparams, PhraseKind, TrainReport, GRADIENT_CHECK_STEP,
};
pub use model_file::MODEL_MAGIC;
pub use player::{Player, RankingPlayer, ScriptedPlayer, TurnView};
pub use tfidf::{IrRanker, TfIdf};

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::episode::TaskKind;
use crate::text::candidate_key;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("duplicate candidate `{0}`")]
    DuplicateCandidate(String),
    #[error("corpus has no tokens")]
    EmptyVocabulary,
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("no training pairs")]
    EmptyBatch,
    #[error("unknown phrase kind `{0}`")]
    UnknownKind(String),
    #[error("batch sits on a margin kink (|margin term| = {distance:e}); resample")]
    KinkDetected { distance: f64 },
    #[error("bad model file: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered, duplicate-free candidates for one prediction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSet {
    items: Vec<String>,
    kind: TaskKind,
}

impl CandidateSet {
    pub fn new(items: Vec<String>, kind: TaskKind) -> Result<Self, AgentError> {
        if items.is_empty() {
            return Err(AgentError::EmptyCandidates);
        }
        let mut seen = HashSet::new();
        for it in &items {
            if !seen.insert(candidate_key(it)) {
                return Err(AgentError::DuplicateCandidate(it.clone()));
            }
        }
        Ok(CandidateSet { items, kind })
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredCandidates {
    pub scores: Vec<f64>,
    pub argmax_index: usize,
}

impl ScoredCandidates {
    /// Highest score wins; equal scores go to the lexicographically
    /// smallest text.
    pub fn new(scores: Vec<f64>, candidates: &CandidateSet) -> Self {
        assert_eq!(scores.len(), candidates.len());
        let items = candidates.items();
        let mut best = 0;
        for i in 1..scores.len() {
            if scores[i] > scores[best] || (scores[i] == scores[best] && items[i] < items[best]) {
                best = i;
            }
        }
        ScoredCandidates { scores, argmax_index: best }
    }
}

/// Scores every candidate for a context. Implementations are immutable and
/// shareable across threads; randomness comes only from `rng`.
pub trait Ranker: Send + Sync {
    fn name(&self) -> &str;

    fn rank(&self, context: &str, candidates: &CandidateSet, rng: &mut ChaCha8Rng) -> Result<ScoredCandidates, AgentError>;
}

/// Picks a uniformly random candidate.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomRanker;

impl Ranker for RandomRanker {
    fn name(&self) -> &str {
        "random"
    }

    fn rank(&self, _context: &str, candidates: &CandidateSet, rng: &mut ChaCha8Rng) -> Result<ScoredCandidates, AgentError> {
        let pick = rng.gen_range(0..candidates.len());
        let scores = (0..candidates.len()).map(|i| if i == pick { 1.0 } else { 0.0 }).collect();
        Ok(ScoredCandidates::new(scores, candidates))
    }
}
