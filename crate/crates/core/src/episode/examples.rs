use serde::{Deserialize, Serialize};

use super::{serialize_context, ContextBundle, EpisodeLog, Split, TaskKind};
use crate::action::enumerate_valid_texts;
use crate::world::EntityId;

/// Where an example's ranking candidates come from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidatePool {
    /// Gold utterances of the named split; distractors are sampled at
    /// evaluation time.
    SplitUtterances { split: Split },
    /// The valid-action set at the example's state, in canonical text.
    ValidActions { actions: Vec<String> },
    /// The fixed 22 emotes.
    Emotes,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub episode_id: String,
    pub split: Split,
    pub turn: usize,
    pub viewpoint: EntityId,
    pub context: ContextBundle,
    pub label: String,
    pub pool: CandidatePool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExampleOptions {
    /// Treat the opening utterance as context only.
    pub first_turn_is_context: bool,
}

impl Default for ExampleOptions {
    fn default() -> Self {
        ExampleOptions { first_turn_is_context: true }
    }
}

/// One example per eligible turn, predicted from the speaker's viewpoint.
///
/// Speech: every utterance except (by default) the episode's first. Action:
/// every executed physical action. Emote: every emote.
pub fn make_examples(episodes: &[EpisodeLog], task: TaskKind, opts: ExampleOptions) -> Vec<Example> {
    let mut out = Vec::new();
    for log in episodes {
        let pools: Vec<Option<Vec<String>>> = if task == TaskKind::Action {
            let mut pools = vec![None; log.turns.len()];
            // a log that no longer replays yields action examples only up to the break
            let _ = log.replay_with(|i, g| {
                if log.turns[i].act.is_some() {
                    pools[i] = enumerate_valid_texts(g, &log.turns[i].speaker)
                        .ok()
                        .map(|v| v.into_iter().map(|(_, t)| t).collect());
                }
            });
            pools
        } else {
            Vec::new()
        };
        for turn in &log.turns {
            let (label, pool) = match task {
                TaskKind::Speech => match &turn.utterance {
                    Some(u) if !(opts.first_turn_is_context && turn.index == 0) => {
                        (u.clone(), CandidatePool::SplitUtterances { split: log.split })
                    }
                    _ => continue,
                },
                TaskKind::Action => match (&turn.act_text, &pools[turn.index]) {
                    (Some(text), Some(actions)) => {
                        (text.clone(), CandidatePool::ValidActions { actions: actions.clone() })
                    }
                    _ => continue,
                },
                TaskKind::Emote => match turn.emote {
                    Some(e) => (e.as_str().to_owned(), CandidatePool::Emotes),
                    None => continue,
                },
            };
            let Ok(context) = serialize_context(log, &turn.speaker, task, turn.index) else {
                continue;
            };
            out.push(Example {
                episode_id: log.id.clone(),
                split: log.split,
                turn: turn.index,
                viewpoint: turn.speaker.clone(),
                context,
                label,
                pool,
            });
        }
    }
    out
}
