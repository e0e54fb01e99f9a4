//! Two-character episodes: turn taking, logs, replay and context rendering.

mod context;
mod examples;
mod file;

pub use context::{objects_in_scope, serialize_context, ContextBundle, ContextLine, Token};
pub use examples::{make_examples, CandidatePool, Example, ExampleOptions};
pub use file::{EpisodeFile, EpisodeHeader, TurnLine, EPISODE_FORMAT_VERSION};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{canonical_text, execute, parse_command, ActionError, Command, Emote, EventKind, GameEvent, PhysicalAction};
use crate::world::{EntityId, EntityKind, WorldError, WorldGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Speech,
    Action,
    Emote,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Speech, TaskKind::Action, TaskKind::Emote];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Speech => "speech",
            TaskKind::Action => "action",
            TaskKind::Emote => "emote",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskKind::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| format!("unknown task `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Valid,
    TestSeen,
    TestUnseen,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Valid, Split::TestSeen, Split::TestUnseen];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::TestSeen => "test_seen",
            Split::TestUnseen => "test_unseen",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Split::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| format!("unknown split `{s}`"))
    }
}

/// What a speaker submits for one turn. Blank fields count as absent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub act: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emote: Option<String>,
}

impl TurnInput {
    pub fn say(text: impl Into<String>) -> Self {
        TurnInput { utterance: Some(text.into()), ..Default::default() }
    }

    pub fn with_act(mut self, text: impl Into<String>) -> Self {
        self.act = Some(text.into());
        self
    }

    pub fn with_emote(mut self, text: impl Into<String>) -> Self {
        self.emote = Some(text.into());
        self
    }

    fn normalized(&self) -> TurnInput {
        let clean = |f: &Option<String>| f.as_ref().filter(|s| !s.trim().is_empty()).cloned();
        TurnInput { utterance: clean(&self.utterance), act: clean(&self.act), emote: clean(&self.emote) }
    }

    pub fn is_empty(&self) -> bool {
        let n = self.normalized();
        n.utterance.is_none() && n.act.is_none() && n.emote.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TurnRecord {
    pub index: usize,
    pub speaker: EntityId,
    /// Stored verbatim.
    pub utterance: Option<String>,
    pub act: Option<PhysicalAction>,
    /// Canonical text of `act` at the time it was executed.
    pub act_text: Option<String>,
    pub emote: Option<Emote>,
    pub events: Vec<GameEvent>,
}

impl TurnRecord {
    pub fn input(&self) -> TurnInput {
        TurnInput {
            utterance: self.utterance.clone(),
            act: self.act_text.clone(),
            emote: self.emote.map(|e| e.as_str().to_owned()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EpisodeLog {
    pub id: String,
    /// World at the start of the episode.
    pub world: WorldGraph,
    /// `participants[0]` takes the first turn.
    pub participants: [EntityId; 2],
    pub turns: Vec<TurnRecord>,
    pub split: Split,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EpisodeError {
    #[error("it is {expected}'s turn, not {got}'s")]
    OutOfTurn { expected: EntityId, got: EntityId },
    #[error("turn has no utterance, action or emote")]
    EmptyTurn,
    #[error("`{0}` is an emote; submit it in the emote field")]
    EmoteInActField(String),
    #[error("`{0}` is not an emote")]
    NotAnEmote(String),
    #[error("invalid participants: {0}")]
    InvalidParticipants(String),
    #[error("`{0}` is not a participant")]
    UnknownViewpoint(EntityId),
    #[error("turn {upto} is past the end of a {len}-turn episode")]
    TurnOutOfRange { upto: usize, len: usize },
    #[error("malformed episode file: {0}")]
    Format(String),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// A replayed turn did not reproduce its log.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("turn {turn}: {reason}")]
pub struct ReplayError {
    pub turn: usize,
    pub reason: String,
    pub source_error: Option<EpisodeError>,
}

/// A live episode: the log so far plus the current world.
#[derive(Clone, Debug)]
pub struct Episode {
    log: EpisodeLog,
    graph: WorldGraph,
}

struct Prepared {
    utterance: Option<String>,
    act: Option<PhysicalAction>,
    emote: Option<Emote>,
}

impl Episode {
    /// Both participants must be distinct characters sharing a room.
    pub fn new(id: impl Into<String>, world: WorldGraph, participants: [EntityId; 2], split: Split) -> Result<Self, EpisodeError> {
        for p in &participants {
            if world.kind(p)? != EntityKind::Character {
                return Err(EpisodeError::InvalidParticipants(format!("`{p}` is not a character")));
            }
        }
        if participants[0] == participants[1] {
            return Err(EpisodeError::InvalidParticipants("a character cannot talk to itself".into()));
        }
        if world.room_of(&participants[0])? != world.room_of(&participants[1])? {
            return Err(EpisodeError::InvalidParticipants("participants are in different rooms".into()));
        }
        let graph = world.clone();
        Ok(Episode { log: EpisodeLog { id: id.into(), world, participants, turns: Vec::new(), split }, graph })
    }

    pub fn log(&self) -> &EpisodeLog {
        &self.log
    }

    pub fn into_log(self) -> EpisodeLog {
        self.log
    }

    pub fn graph(&self) -> &WorldGraph {
        &self.graph
    }

    pub fn turn_count(&self) -> usize {
        self.log.turns.len()
    }

    pub fn next_speaker(&self) -> &EntityId {
        &self.log.participants[self.log.turns.len() % 2]
    }

    pub fn partner_of(&self, who: &EntityId) -> Option<&EntityId> {
        self.log.partner_of(who)
    }

    /// Validate and apply one turn. Nothing is committed on error.
    pub fn advance_turn(&mut self, speaker: &EntityId, input: &TurnInput) -> Result<&[GameEvent], EpisodeError> {
        if speaker != self.next_speaker() {
            return Err(EpisodeError::OutOfTurn { expected: self.next_speaker().clone(), got: speaker.clone() });
        }
        let prepared = self.prepare(speaker, input)?;
        let mut graph = self.graph.clone();
        let room = graph.room_of(speaker)?.clone();
        let audience: std::collections::BTreeSet<EntityId> =
            graph.characters_in(&room)?.into_iter().cloned().collect();
        let mut events = Vec::new();
        if let Some(u) = &prepared.utterance {
            events.push(GameEvent {
                kind: EventKind::Said,
                actor: speaker.clone(),
                payload: u.clone(),
                visible_to: audience,
            });
        }
        let act_text = match &prepared.act {
            Some(a) => {
                let text = canonical_text(&graph, a)?;
                events.extend(execute(&mut graph, speaker, a)?);
                Some(text)
            }
            None => None,
        };
        if let Some(e) = prepared.emote {
            events.extend(crate::action::perform(&mut graph, speaker, &Command::Emote(e))?);
        }
        self.graph = graph;
        let index = self.log.turns.len();
        self.log.turns.push(TurnRecord {
            index,
            speaker: speaker.clone(),
            utterance: prepared.utterance,
            act: prepared.act,
            act_text,
            emote: prepared.emote,
            events,
        });
        Ok(&self.log.turns[index].events)
    }

    fn prepare(&self, speaker: &EntityId, input: &TurnInput) -> Result<Prepared, EpisodeError> {
        let input = input.normalized();
        if input.is_empty() {
            return Err(EpisodeError::EmptyTurn);
        }
        let act = match &input.act {
            Some(text) => match parse_command(&self.graph, speaker, text)? {
                Command::Act(a) => Some(a),
                Command::Emote(_) => return Err(EpisodeError::EmoteInActField(text.clone())),
            },
            None => None,
        };
        let emote = match &input.emote {
            Some(text) => Some(parse_emote(text)?),
            None => None,
        };
        Ok(Prepared { utterance: input.utterance, act, emote })
    }
}

/// Accepts both `sigh` and `gesture sigh`.
pub fn parse_emote(text: &str) -> Result<Emote, EpisodeError> {
    let t = text.trim().to_lowercase();
    let bare = t.strip_prefix("gesture ").unwrap_or(&t).trim();
    bare.parse().map_err(|_| EpisodeError::NotAnEmote(text.to_owned()))
}

impl EpisodeLog {
    pub fn partner_of(&self, who: &EntityId) -> Option<&EntityId> {
        match &self.participants {
            [a, b] if a == who => Some(b),
            [a, b] if b == who => Some(a),
            _ => None,
        }
    }

    pub fn room(&self) -> Result<&EntityId, WorldError> {
        self.world.room_of(&self.participants[0])
    }

    /// Re-execute every turn from the initial world. Each state passed to
    /// `visit` is the world just before the turn.
    pub fn replay_with(&self, mut visit: impl FnMut(usize, &WorldGraph)) -> Result<WorldGraph, ReplayError> {
        let mut ep = Episode::new(self.id.clone(), self.world.clone(), self.participants.clone(), self.split)
            .map_err(|e| ReplayError { turn: 0, reason: e.to_string(), source_error: Some(e) })?;
        for t in &self.turns {
            visit(t.index, ep.graph());
            let events = ep.advance_turn(&t.speaker, &t.input()).map_err(|e| ReplayError {
                turn: t.index,
                reason: e.to_string(),
                source_error: Some(e),
            })?;
            if events != t.events.as_slice() {
                return Err(ReplayError { turn: t.index, reason: "events differ from the log".into(), source_error: None });
            }
        }
        Ok(ep.graph)
    }

    pub fn replay(&self) -> Result<WorldGraph, ReplayError> {
        self.replay_with(|_, _| {})
    }

    /// Hash of the world after the final turn.
    pub fn final_hash(&self) -> Result<String, ReplayError> {
        Ok(self.replay()?.state_hash())
    }
}

/// Build an episode by submitting `inputs` in order; alternation follows
/// `participants`.
pub fn play_inputs(
    id: impl Into<String>,
    world: WorldGraph,
    participants: [EntityId; 2],
    split: Split,
    inputs: &[TurnInput],
) -> Result<EpisodeLog, ReplayError> {
    let mut ep = Episode::new(id, world, participants, split)
        .map_err(|e| ReplayError { turn: 0, reason: e.to_string(), source_error: Some(e) })?;
    for (i, input) in inputs.iter().enumerate() {
        let speaker = ep.next_speaker().clone();
        ep.advance_turn(&speaker, input)
            .map_err(|e| ReplayError { turn: i, reason: e.to_string(), source_error: Some(e) })?;
    }
    Ok(ep.into_log())
}
