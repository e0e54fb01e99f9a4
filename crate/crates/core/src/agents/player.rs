use std::collections::VecDeque;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CandidateSet, Ranker};
use crate::episode::{TaskKind, TurnInput};

/// Everything a seat is shown when it is asked to move.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnView {
    /// Speech-task context for this turn.
    pub context: String,
    /// Action-task context for this turn.
    pub action_context: String,
    /// Canonical texts of the currently valid physical actions.
    pub valid_actions: Vec<String>,
    /// Utterance candidates offered by the host.
    pub candidates: Vec<String>,
}

/// An in-process seat occupant.
pub trait Player: Send {
    /// `None` ends the player's participation.
    fn choose(&mut self, view: &TurnView) -> Option<TurnInput>;
}

/// Replays fixed inputs in order.
#[derive(Clone, Debug, Default)]
pub struct ScriptedPlayer {
    turns: VecDeque<TurnInput>,
}

impl ScriptedPlayer {
    pub fn new(turns: impl IntoIterator<Item = TurnInput>) -> Self {
        ScriptedPlayer { turns: turns.into_iter().collect() }
    }
}

impl Player for ScriptedPlayer {
    fn choose(&mut self, _view: &TurnView) -> Option<TurnInput> {
        self.turns.pop_front()
    }
}

/// Picks the best-ranked utterance candidate and, when `acts`, the
/// best-ranked valid action.
pub struct RankingPlayer {
    ranker: Arc<dyn Ranker>,
    rng: ChaCha8Rng,
    acts: bool,
}

impl RankingPlayer {
    pub fn new(ranker: Arc<dyn Ranker>, seed: u64, acts: bool) -> Self {
        RankingPlayer { ranker, rng: ChaCha8Rng::seed_from_u64(seed), acts }
    }

    fn best(&mut self, context: &str, items: &[String], kind: TaskKind) -> Option<String> {
        let mut unique: Vec<String> = Vec::new();
        for it in items {
            if !unique.iter().any(|u| crate::text::candidate_key(u) == crate::text::candidate_key(it)) {
                unique.push(it.clone());
            }
        }
        let set = CandidateSet::new(unique, kind).ok()?;
        let scored = self.ranker.rank(context, &set, &mut self.rng).ok()?;
        Some(set.items()[scored.argmax_index].clone())
    }
}

impl Player for RankingPlayer {
    fn choose(&mut self, view: &TurnView) -> Option<TurnInput> {
        let utterance = self.best(&view.context, &view.candidates, TaskKind::Speech);
        let act = if self.acts { self.best(&view.action_context, &view.valid_actions, TaskKind::Action) } else { None };
        let input = TurnInput { utterance, act, emote: None };
        // an agent with nothing to offer still takes its turn
        Some(if input.is_empty() { TurnInput::default().with_emote("ponder") } else { input })
    }
}
