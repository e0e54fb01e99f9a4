//! Wire messages. One JSON object per line (or per WebSocket text frame),
//! discriminated by `type`. See `docs/protocol.md`.

use light_core::world::EntityId;
use serde::{Deserialize, Serialize};

/// Sent in both directions of the `hello` handshake. Peers must agree on
/// the part before the dot.
pub const PROTOCOL_VERSION: &str = "light/1.0";

pub fn compatible(version: &str) -> bool {
    version.split('.').next() == PROTOCOL_VERSION.split('.').next()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    /// Strictly increasing per connection and direction.
    pub seq: u64,
    #[serde(flatten)]
    pub payload: Payload,
}

impl WireMessage {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("wire messages serialize")
    }

    pub fn parse(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// A person; gets a long turn timeout and no utterance candidates.
    #[default]
    Human,
    /// An external model; gets candidates and may answer by index.
    Agent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectView {
    pub name: String,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationView {
    pub rule: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub turn: usize,
    pub speaker: EntityId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
    /// Canonical action text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emote: Option<String>,
    /// Played by the server on the seat's behalf (timeout or forfeit).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    VersionMismatch,
    ExpectedHello,
    ExpectedJoin,
    UnknownSeat,
    Malformed,
    BadSeq,
    UnexpectedMessage,
    OutOfTurn,
    SessionEnded,
    ProtocolViolation,
    Timeout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    Completed,
    Disconnect,
    Shutdown,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnSubmit {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emote: Option<String>,
    /// Index into the `candidates` of the last `your_turn`, instead of
    /// `utterance`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    Hello {
        protocol: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    Join {
        #[serde(default)]
        role: Role,
        /// Character id or name to play; any free seat when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seat: Option<String>,
    },
    SeatAssigned {
        session: String,
        token: String,
        seat: EntityId,
        character: String,
        partner: EntityId,
        role: Role,
    },
    WorldSnapshot {
        setting: String,
        category: String,
        description: String,
        persona: Vec<String>,
        partner_name: String,
        objects: Vec<ObjectView>,
        participants: [EntityId; 2],
        transcript: Vec<Observation>,
    },
    YourTurn {
        turn: usize,
        context: String,
        valid_actions: Vec<String>,
        #[serde(default)]
        candidates: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        timeout_ms: Option<u64>,
    },
    TurnSubmit(TurnSubmit),
    TurnResult {
        ok: bool,
        turn: usize,
        /// Whether the turn passed to the partner.
        consumed: bool,
        #[serde(default)]
        violations: Vec<ViolationView>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
    Observation(Observation),
    Error {
        code: ErrorCode,
        message: String,
    },
    EpisodeEnd {
        reason: EndReason,
        turns: usize,
        hash: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        log: Option<String>,
    },
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Hello { .. } => "hello",
            Payload::Join { .. } => "join",
            Payload::SeatAssigned { .. } => "seat_assigned",
            Payload::WorldSnapshot { .. } => "world_snapshot",
            Payload::YourTurn { .. } => "your_turn",
            Payload::TurnSubmit(_) => "turn_submit",
            Payload::TurnResult { .. } => "turn_result",
            Payload::Observation(_) => "observation",
            Payload::Error { .. } => "error",
            Payload::EpisodeEnd { .. } => "episode_end",
        }
    }

    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Payload::Error { code, message: message.into() }
    }
}
