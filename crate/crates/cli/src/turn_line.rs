//! The typed-turn syntax shared by `play` input and partner scripts.
//!
//! A line is one or more segments separated by `|`. `do <action>` is a
//! physical action, `gesture <emote>` an emote, and `say <text>` or any
//! other text is the utterance. Lines starting with `/` are commands.

use light_core::episode::TurnInput;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Line {
    Turn(TurnInput),
    Quit,
    Actions,
    Look,
    Help,
    Blank,
}

pub const HELP: &str = "\
Type what your character says. Add an action or an emote with `|`:
  Polish my scepter. | do give scepter to servant | gesture smile
Segments: say <text>, do <action>, gesture <emote> (plain text is speech).
Commands: /actions lists valid actions, /look shows the room, /quit ends the episode.";

fn take(slot: &mut Option<String>, what: &str, value: &str) -> Result<(), String> {
    if value.is_empty() {
        return Err(format!("empty {what}"));
    }
    if slot.is_some() {
        return Err(format!("only one {what} per turn"));
    }
    *slot = Some(value.to_owned());
    Ok(())
}

fn strip_word<'a>(seg: &'a str, word: &str) -> Option<&'a str> {
    let rest = seg.strip_prefix(word)?;
    if rest.is_empty() {
        Some(rest)
    } else if rest.starts_with(char::is_whitespace) {
        Some(rest.trim_start())
    } else {
        None
    }
}

pub fn parse_line(line: &str) -> Result<Line, String> {
    let line = line.trim();
    if line.is_empty() {
        return Ok(Line::Blank);
    }
    if let Some(cmd) = line.strip_prefix('/') {
        return match cmd.trim() {
            "quit" | "q" | "exit" => Ok(Line::Quit),
            "actions" => Ok(Line::Actions),
            "look" => Ok(Line::Look),
            "help" | "?" => Ok(Line::Help),
            other => Err(format!("unknown command `/{other}` (try /help)")),
        };
    }
    let mut input = TurnInput::default();
    for seg in line.split('|').map(str::trim) {
        if let Some(act) = strip_word(seg, "do") {
            take(&mut input.act, "action", act)?;
        } else if strip_word(seg, "gesture").is_some() {
            take(&mut input.emote, "emote", seg)?;
        } else {
            let text = strip_word(seg, "say").unwrap_or(seg);
            take(&mut input.utterance, "utterance", text)?;
        }
    }
    Ok(Line::Turn(input))
}
