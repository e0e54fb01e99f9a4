//! Transport-free session state machine. The async layer feeds it one event
//! at a time, which makes it the single writer of the session's world.

use std::sync::Arc;

use light_core::action::{enumerate_valid_texts, ActionError};
use light_core::agents::TurnView;
use light_core::episode::{
    objects_in_scope, serialize_context, Episode, EpisodeError, EpisodeLog, Split, TaskKind, TurnInput,
};
use light_core::world::{EntityId, WorldGraph};
use rand::seq::{IteratorRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::protocol::{EndReason, ObjectView, Observation, Payload, Role, TurnSubmit, ViolationView};

/// Emote a seat falls back to when it has nothing valid to play.
pub const IDLE_EMOTE: &str = "ponder";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionConfig {
    /// The episode ends after this many committed turns.
    pub max_turns: usize,
    /// Rejected actions still use up the turn (the rest of the input is
    /// committed). Off by default so people can retry.
    pub strict_consume: bool,
    /// Utterance candidates offered to agent seats.
    pub candidates: usize,
    pub split: Split,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig { max_turns: 14, strict_consume: false, candidates: 20, split: Split::Train, seed: 0 }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("it is {expected}'s turn, not {got}'s")]
    OutOfTurn { expected: EntityId, got: EntityId },
    #[error("the session has ended")]
    SessionEnded,
    #[error("the session has not started")]
    NotStarted,
    #[error("malformed turn: {0}")]
    MalformedMessage(String),
    #[error("agent protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("`{0}` is not seated in this session")]
    UnknownSeat(EntityId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SessionState {
    Waiting,
    Active,
    Ended(EndReason),
}

/// What a submission did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TurnOutcome {
    pub ok: bool,
    pub turn: usize,
    pub consumed: bool,
    pub violations: Vec<ViolationView>,
    pub error: Option<String>,
    /// Present when a turn was committed; goes to both seats.
    pub observation: Option<Observation>,
}

impl TurnOutcome {
    pub fn result_payload(&self) -> Payload {
        Payload::TurnResult {
            ok: self.ok,
            turn: self.turn,
            consumed: self.consumed,
            violations: self.violations.clone(),
            error: self.error.clone(),
        }
    }
}

pub struct SessionCore {
    id: String,
    episode: Episode,
    state: SessionState,
    config: SessionConfig,
    pool: Arc<Vec<String>>,
    rng: ChaCha8Rng,
    offered: [Vec<String>; 2],
    transcript: Vec<Observation>,
}

fn rejection(err: &EpisodeError) -> Option<(Vec<ViolationView>, String)> {
    match err {
        EpisodeError::Action(ActionError::PreconditionRace(v)) => {
            let views = v.iter().map(|c| ViolationView { rule: c.rule.id().to_owned(), detail: c.detail.clone() }).collect();
            Some((views, err.to_string()))
        }
        EpisodeError::Action(_) | EpisodeError::World(_) | EpisodeError::NotAnEmote(_) | EpisodeError::EmoteInActField(_) => {
            Some((Vec::new(), err.to_string()))
        }
        _ => None,
    }
}

impl SessionCore {
    pub fn new(
        id: impl Into<String>,
        world: WorldGraph,
        participants: [EntityId; 2],
        config: SessionConfig,
        pool: Arc<Vec<String>>,
    ) -> Result<Self, EpisodeError> {
        let id = id.into();
        let episode = Episode::new(id.clone(), world, participants, config.split)?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(SessionCore {
            id,
            episode,
            state: SessionState::Waiting,
            config,
            pool,
            rng,
            offered: [Vec::new(), Vec::new()],
            transcript: Vec::new(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn participants(&self) -> &[EntityId; 2] {
        &self.episode.log().participants
    }

    pub fn log(&self) -> &EpisodeLog {
        self.episode.log()
    }

    pub fn graph(&self) -> &WorldGraph {
        self.episode.graph()
    }

    pub fn hash(&self) -> String {
        self.episode.graph().state_hash()
    }

    pub fn turn(&self) -> usize {
        self.episode.turn_count()
    }

    pub fn next_speaker(&self) -> &EntityId {
        self.episode.next_speaker()
    }

    pub fn start(&mut self) {
        if self.state == SessionState::Waiting {
            self.state = SessionState::Active;
        }
    }

    pub fn end(&mut self, reason: EndReason) {
        if !matches!(self.state, SessionState::Ended(_)) {
            self.state = SessionState::Ended(reason);
        }
    }

    fn seat_index(&self, seat: &EntityId) -> Result<usize, SessionError> {
        self.participants().iter().position(|p| p == seat).ok_or_else(|| SessionError::UnknownSeat(seat.clone()))
    }

    /// Static grounding for `seat`.
    pub fn snapshot(&self, seat: &EntityId) -> Result<Payload, SessionError> {
        let i = self.seat_index(seat)?;
        let g = self.episode.graph();
        let partner = &self.participants()[1 - i];
        let room = g.room_of(seat).map_err(|e| SessionError::MalformedMessage(e.to_string()))?;
        let loc = g.location(room).expect("room is a location");
        let me = g.character(seat).expect("seat is a character");
        let them = g.character(partner).expect("partner is a character");
        let objects = objects_in_scope(g, room, self.participants())
            .into_iter()
            .filter_map(|o| g.object(o).ok())
            .map(|o| ObjectView { name: o.name.clone(), description: o.description.clone() })
            .collect();
        Ok(Payload::WorldSnapshot {
            setting: loc.name.clone(),
            category: loc.category.clone(),
            description: loc.description.clone(),
            persona: me.persona.clone(),
            partner_name: them.name.clone(),
            objects,
            participants: self.participants().clone(),
            transcript: self.transcript.clone(),
        })
    }

    /// What the next speaker sees. Agent seats also get a fresh candidate
    /// sample, remembered for index answers.
    pub fn turn_view(&mut self, role: Role) -> TurnView {
        let speaker = self.next_speaker().clone();
        let i = self.seat_index(&speaker).expect("speaker is seated");
        let upto = self.turn();
        let log = self.episode.log();
        let context = serialize_context(log, &speaker, TaskKind::Speech, upto).map(|c| c.flat_text).unwrap_or_default();
        let action_context = serialize_context(log, &speaker, TaskKind::Action, upto).map(|c| c.flat_text).unwrap_or_default();
        let valid_actions = enumerate_valid_texts(self.episode.graph(), &speaker)
            .map(|v| v.into_iter().map(|(_, t)| t).collect())
            .unwrap_or_default();
        let candidates = if role == Role::Agent {
            let mut c: Vec<String> = self.pool.iter().cloned().choose_multiple(&mut self.rng, self.config.candidates);
            c.shuffle(&mut self.rng);
            c
        } else {
            Vec::new()
        };
        self.offered[i] = candidates.clone();
        TurnView { context, action_context, valid_actions, candidates }
    }

    fn check_turn(&self, seat: &EntityId) -> Result<usize, SessionError> {
        match self.state {
            SessionState::Waiting => return Err(SessionError::NotStarted),
            SessionState::Ended(_) => return Err(SessionError::SessionEnded),
            SessionState::Active => {}
        }
        let i = self.seat_index(seat)?;
        if seat != self.next_speaker() {
            return Err(SessionError::OutOfTurn { expected: self.next_speaker().clone(), got: seat.clone() });
        }
        Ok(i)
    }

    /// Apply a wire submission from `seat`.
    pub fn handle_turn(&mut self, seat: &EntityId, submit: &TurnSubmit) -> Result<TurnOutcome, SessionError> {
        let i = self.check_turn(seat)?;
        let utterance = match (submit.candidate, &submit.utterance) {
            (Some(_), Some(_)) => return Err(SessionError::MalformedMessage("both `candidate` and `utterance` given".into())),
            (Some(k), None) => match self.offered[i].get(k) {
                Some(u) => Some(u.clone()),
                None => {
                    let n = self.offered[i].len();
                    return Err(SessionError::ProtocolViolation(format!("candidate {k} out of range (offered {n})")));
                }
            },
            (None, u) => u.clone(),
        };
        let input = TurnInput { utterance, act: submit.action.clone(), emote: submit.emote.clone() };
        if input.is_empty() {
            return Err(SessionError::MalformedMessage("turn_submit needs an utterance, action or emote".into()));
        }
        self.apply(seat, input, false)
    }

    /// Apply an in-process player's choice; anything unusable becomes the
    /// fallback move.
    pub fn handle_local(&mut self, seat: &EntityId, input: Option<TurnInput>) -> Result<TurnOutcome, SessionError> {
        self.check_turn(seat)?;
        match input {
            Some(input) if !input.is_empty() => {
                let out = self.apply(seat, input, false)?;
                if out.consumed {
                    return Ok(out);
                }
                self.fallback(seat)
            }
            _ => self.fallback(seat),
        }
    }

    /// Play a random valid action for `seat`, or the idle emote when none
    /// is valid.
    pub fn fallback(&mut self, seat: &EntityId) -> Result<TurnOutcome, SessionError> {
        self.check_turn(seat)?;
        let valid = enumerate_valid_texts(self.episode.graph(), seat).unwrap_or_default();
        let input = match valid.choose(&mut self.rng) {
            Some((_, text)) => TurnInput::default().with_act(text.clone()),
            None => TurnInput::default().with_emote(IDLE_EMOTE),
        };
        self.apply(seat, input, true)
    }

    fn apply(&mut self, seat: &EntityId, input: TurnInput, fallback: bool) -> Result<TurnOutcome, SessionError> {
        let turn = self.turn();
        match self.episode.advance_turn(seat, &input) {
            Ok(_) => Ok(self.committed(turn, fallback, Vec::new(), None)),
            Err(EpisodeError::EmptyTurn) => Err(SessionError::MalformedMessage("empty turn".into())),
            Err(e) => {
                let Some((violations, error)) = rejection(&e) else {
                    return Err(SessionError::MalformedMessage(e.to_string()));
                };
                if !self.config.strict_consume {
                    return Ok(TurnOutcome { ok: false, turn, consumed: false, violations, error: Some(error), observation: None });
                }
                // commit the largest part of the input that still plays
                let attempts = [
                    TurnInput { emote: None, ..input.clone() },
                    TurnInput { act: None, ..input.clone() },
                    TurnInput { act: None, emote: None, ..input.clone() },
                    TurnInput::default().with_emote(IDLE_EMOTE),
                ];
                for attempt in attempts.iter().filter(|a| !a.is_empty()) {
                    if self.episode.advance_turn(seat, attempt).is_ok() {
                        return Ok(self.committed(turn, fallback, violations, Some(error)));
                    }
                }
                unreachable!("the idle emote is always playable")
            }
        }
    }

    fn committed(&mut self, turn: usize, fallback: bool, violations: Vec<ViolationView>, error: Option<String>) -> TurnOutcome {
        let rec = &self.episode.log().turns[turn];
        let observation = Observation {
            turn,
            speaker: rec.speaker.clone(),
            utterance: rec.utterance.clone(),
            action: rec.act_text.clone(),
            emote: rec.emote.map(|e| e.as_str().to_owned()),
            fallback,
        };
        self.transcript.push(observation.clone());
        if self.turn() >= self.config.max_turns {
            self.end(EndReason::Completed);
        }
        TurnOutcome { ok: error.is_none(), turn, consumed: true, violations, error, observation: Some(observation) }
    }
}
