use serde::{Deserialize, Serialize};

use super::{Episode, EpisodeError, EpisodeLog, ReplayError, Split, TurnInput};
use crate::action::GameEvent;
use crate::world::{EntityId, WorldGraph};

pub const EPISODE_FORMAT_VERSION: &str = "1.0";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub version: String,
    pub id: String,
    /// World file path, relative to the episode file.
    pub world: String,
    pub participants: [EntityId; 2],
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnLine {
    pub index: usize,
    pub speaker: EntityId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub act: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emote: Option<String>,
    /// Absent in imported data; checked on replay when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<GameEvent>>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Record {
    Header(EpisodeHeader),
    Turn(TurnLine),
}

/// An episode as stored on disk: a header line followed by one line per turn.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpisodeFile {
    pub header: EpisodeHeader,
    pub turns: Vec<TurnLine>,
}

fn major(v: &str) -> &str {
    v.split('.').next().unwrap_or(v)
}

impl EpisodeFile {
    pub fn parse(text: &str) -> Result<Self, EpisodeError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let bad = |n: usize, e: serde_json::Error| EpisodeError::Format(format!("line {}: {e}", n + 1));
        let header = match lines.next() {
            Some((n, l)) => match serde_json::from_str(l).map_err(|e| bad(n, e))? {
                Record::Header(h) => h,
                Record::Turn(_) => return Err(EpisodeError::Format("first record must be the header".into())),
            },
            None => return Err(EpisodeError::Format("empty episode file".into())),
        };
        if major(&header.version) != major(EPISODE_FORMAT_VERSION) {
            return Err(EpisodeError::Format(format!("unsupported episode format version {}", header.version)));
        }
        let mut turns = Vec::new();
        for (n, l) in lines {
            match serde_json::from_str(l).map_err(|e| bad(n, e))? {
                Record::Turn(t) => turns.push(t),
                Record::Header(_) => return Err(EpisodeError::Format(format!("line {}: second header", n + 1))),
            }
        }
        Ok(EpisodeFile { header, turns })
    }

    pub fn from_log(log: &EpisodeLog, world_ref: &str) -> Self {
        let header = EpisodeHeader {
            version: EPISODE_FORMAT_VERSION.to_owned(),
            id: log.id.clone(),
            world: world_ref.to_owned(),
            participants: log.participants.clone(),
            split: log.split,
        };
        let turns = log
            .turns
            .iter()
            .map(|t| TurnLine {
                index: t.index,
                speaker: t.speaker.clone(),
                utterance: t.utterance.clone(),
                act: t.act_text.clone(),
                emote: t.emote.map(|e| e.as_str().to_owned()),
                events: Some(t.events.clone()),
            })
            .collect();
        EpisodeFile { header, turns }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Record::Header(self.header.clone())).expect("serializable");
        out.push('\n');
        for t in &self.turns {
            out.push_str(&serde_json::to_string(&Record::Turn(t.clone())).expect("serializable"));
            out.push('\n');
        }
        out
    }

    /// Replay the turns against `world`, checking turn order, every logged
    /// action's preconditions and any recorded events.
    pub fn into_log(&self, world: WorldGraph) -> Result<EpisodeLog, ReplayError> {
        let h = &self.header;
        let fail = |turn: usize, e: EpisodeError| ReplayError { turn, reason: e.to_string(), source_error: Some(e) };
        let mut ep = Episode::new(h.id.clone(), world, h.participants.clone(), h.split).map_err(|e| fail(0, e))?;
        for (i, t) in self.turns.iter().enumerate() {
            if t.index != i {
                return Err(ReplayError { turn: i, reason: format!("turn index {} out of sequence", t.index), source_error: None });
            }
            let input = TurnInput { utterance: t.utterance.clone(), act: t.act.clone(), emote: t.emote.clone() };
            let events = ep.advance_turn(&t.speaker, &input).map_err(|e| fail(i, e))?;
            if let Some(expected) = &t.events {
                if expected.as_slice() != events {
                    return Err(ReplayError { turn: i, reason: "events differ from the log".into(), source_error: None });
                }
            }
        }
        Ok(ep.into_log())
    }
}
