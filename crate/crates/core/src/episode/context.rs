use std::fmt;

use serde::{Deserialize, Serialize};

use super::{EpisodeError, EpisodeLog, TaskKind, TurnRecord};
use crate::world::{EntityId, EntityKind, WorldGraph};

/// Line tokens of the grounding context. The set is closed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Token {
    #[serde(rename = "_task_speech")]
    TaskSpeech,
    #[serde(rename = "_task_action")]
    TaskAction,
    #[serde(rename = "_task_emote")]
    TaskEmote,
    #[serde(rename = "_setting_name")]
    SettingName,
    #[serde(rename = "_setting_desc")]
    SettingDesc,
    #[serde(rename = "_partner_name")]
    PartnerName,
    #[serde(rename = "_self_name")]
    SelfName,
    #[serde(rename = "_self_persona")]
    SelfPersona,
    #[serde(rename = "_object_desc")]
    ObjectDesc,
    #[serde(rename = "_partner_say")]
    PartnerSay,
    #[serde(rename = "_self_say")]
    SelfSay,
    #[serde(rename = "_partner_act")]
    PartnerAct,
    #[serde(rename = "_self_act")]
    SelfAct,
    #[serde(rename = "_partner_emote")]
    PartnerEmote,
    #[serde(rename = "_self_emote")]
    SelfEmote,
}

impl Token {
    pub fn as_str(self) -> &'static str {
        match self {
            Token::TaskSpeech => "_task_speech",
            Token::TaskAction => "_task_action",
            Token::TaskEmote => "_task_emote",
            Token::SettingName => "_setting_name",
            Token::SettingDesc => "_setting_desc",
            Token::PartnerName => "_partner_name",
            Token::SelfName => "_self_name",
            Token::SelfPersona => "_self_persona",
            Token::ObjectDesc => "_object_desc",
            Token::PartnerSay => "_partner_say",
            Token::SelfSay => "_self_say",
            Token::PartnerAct => "_partner_act",
            Token::SelfAct => "_self_act",
            Token::PartnerEmote => "_partner_emote",
            Token::SelfEmote => "_self_emote",
        }
    }

    fn task(task: TaskKind) -> Token {
        match task {
            TaskKind::Speech => Token::TaskSpeech,
            TaskKind::Action => Token::TaskAction,
            TaskKind::Emote => Token::TaskEmote,
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextLine {
    pub token: Token,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub task: TaskKind,
    pub lines: Vec<ContextLine>,
    pub flat_text: String,
}

impl ContextBundle {
    pub fn new(task: TaskKind, lines: Vec<ContextLine>) -> Self {
        let flat_text = render(&lines);
        ContextBundle { task, lines, flat_text }
    }
}

/// `token text` per line, newline separated, no trailing newline. A line
/// with empty text is just its token.
pub fn render(lines: &[ContextLine]) -> String {
    let mut out = String::new();
    for (i, l) in lines.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(l.token.as_str());
        if !l.text.is_empty() {
            out.push(' ');
            out.push_str(&l.text);
        }
    }
    out
}

fn persona_text(lines: &[String]) -> String {
    lines.iter().map(|l| l.trim()).collect::<Vec<_>>().join(" ")
}

/// Objects in the room, including those held by either participant but not
/// those held by anyone else, in world-file order.
pub fn objects_in_scope<'a>(world: &'a WorldGraph, room: &EntityId, participants: &[EntityId; 2]) -> Vec<&'a EntityId> {
    let held_by_outsider = |id: &EntityId| {
        let mut cur = id.clone();
        while let Ok(Some((_, parent))) = world.parent(&cur) {
            if world.kind(parent) == Ok(EntityKind::Character) {
                return !participants.contains(parent);
            }
            cur = parent.clone();
        }
        false
    };
    world.objects_in(room).unwrap_or_default().into_iter().filter(|o| !held_by_outsider(o)).collect()
}

/// Own earlier utterances are left out of speech contexts, matching the
/// reference input format; the other tasks keep them.
fn renders_own_speech(task: TaskKind) -> bool {
    task != TaskKind::Speech
}

fn push_turn(lines: &mut Vec<ContextLine>, turn: &TurnRecord, own: bool, task: TaskKind, target: bool) {
    let (say, act, emote) = if own {
        (Token::SelfSay, Token::SelfAct, Token::SelfEmote)
    } else {
        (Token::PartnerSay, Token::PartnerAct, Token::PartnerEmote)
    };
    let keep = |t: TaskKind| !target || task != t;
    if let Some(u) = &turn.utterance {
        if keep(TaskKind::Speech) && (!own || target || renders_own_speech(task)) {
            lines.push(ContextLine { token: say, text: u.trim().to_owned() });
        }
    }
    if let (Some(text), true) = (&turn.act_text, keep(TaskKind::Action)) {
        lines.push(ContextLine { token: act, text: text.clone() });
    }
    if let (Some(e), true) = (turn.emote, keep(TaskKind::Emote)) {
        lines.push(ContextLine { token: emote, text: e.as_str().to_owned() });
    }
}

/// Render the grounding and history visible to `viewpoint` before turn
/// `upto_turn`.
///
/// Turns `0..upto_turn` appear in full. When turn `upto_turn` belongs to
/// `viewpoint`, its fields other than the predicted one are included too,
/// since they are given alongside the prediction.
pub fn serialize_context(
    log: &EpisodeLog,
    viewpoint: &EntityId,
    task: TaskKind,
    upto_turn: usize,
) -> Result<ContextBundle, EpisodeError> {
    let partner = log.partner_of(viewpoint).ok_or_else(|| EpisodeError::UnknownViewpoint(viewpoint.clone()))?;
    if upto_turn > log.turns.len() {
        return Err(EpisodeError::TurnOutOfRange { upto: upto_turn, len: log.turns.len() });
    }
    let world = &log.world;
    let room = world.room_of(viewpoint)?;
    let loc = world.location(room)?;
    let me = world.character(viewpoint)?;
    let them = world.character(partner)?;

    let line = |token, text: String| ContextLine { token, text };
    let mut lines = vec![
        line(Token::task(task), String::new()),
        line(Token::SettingName, format!("{}, {}", loc.name, loc.category)),
        line(Token::SettingDesc, loc.description.trim().to_owned()),
        line(Token::PartnerName, them.name.clone()),
        line(Token::SelfName, me.name.clone()),
        line(Token::SelfPersona, persona_text(&me.persona)),
    ];
    for id in objects_in_scope(world, room, &log.participants) {
        let o = world.object(id)?;
        lines.push(line(Token::ObjectDesc, format!("{} : {}", o.name, o.description.trim())));
    }
    for turn in &log.turns[..upto_turn] {
        push_turn(&mut lines, turn, &turn.speaker == viewpoint, task, false);
    }
    if let Some(turn) = log.turns.get(upto_turn).filter(|t| &t.speaker == viewpoint) {
        push_turn(&mut lines, turn, true, task, true);
    }
    Ok(ContextBundle::new(task, lines))
}
