use super::{ActionError, Command, Emote, PhysicalAction};
use crate::world::{EntityId, ExpectedKind, WorldError, WorldGraph};

/// Parse a free-text command issued by `actor`.
///
/// Grammar: `<verb> <obj>`, `get <obj> from <src>`, `put <obj> in|on <dst>`,
/// `give <obj> to <char>`, `steal <obj> from <char>`, `hit|hug <char>`, and
/// emotes either bare (`sigh`) or prefixed (`gesture sigh`).
pub fn parse_command(graph: &WorldGraph, actor: &EntityId, text: &str) -> Result<Command, ActionError> {
    let words: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
    let Some(verb) = words.first() else {
        return Err(ActionError::Empty);
    };
    let rest = &words[1..];
    if verb == "gesture" {
        return match rest {
            [one] => Ok(Command::Emote(one.parse()?)),
            _ => Err(ActionError::BadArity { verb: verb.clone(), expected: "one emote" }),
        };
    }
    if rest.is_empty() {
        if let Ok(e) = verb.parse::<Emote>() {
            return Ok(Command::Emote(e));
        }
    }
    let p = Parser { graph, actor };
    let action = match verb.as_str() {
        "get" => {
            if rest.iter().skip(1).any(|w| w == "from") {
                let (o, s) = p.two(verb, rest, &["from"], "get <object> from <object>", ExpectedKind::Object)?;
                PhysicalAction::GetFrom(o, s)
            } else {
                PhysicalAction::Get(p.one(verb, rest, ExpectedKind::Object)?)
            }
        }
        "put" => p.two(verb, rest, &["in", "on"], "put <object> in|on <object>", ExpectedKind::Object).map(|(o, t)| PhysicalAction::PutIn(o, t))?,
        "give" => p.two(verb, rest, &["to"], "give <object> to <character>", ExpectedKind::Character).map(|(o, t)| PhysicalAction::Give(o, t))?,
        "steal" => p.two(verb, rest, &["from"], "steal <object> from <character>", ExpectedKind::Character).map(|(o, t)| PhysicalAction::Steal(o, t))?,
        "hit" => PhysicalAction::Hit(p.one(verb, rest, ExpectedKind::Character)?),
        "hug" => PhysicalAction::Hug(p.one(verb, rest, ExpectedKind::Character)?),
        "drop" => PhysicalAction::Drop(p.one(verb, rest, ExpectedKind::Object)?),
        "drink" => PhysicalAction::Drink(p.one(verb, rest, ExpectedKind::Object)?),
        "eat" => PhysicalAction::Eat(p.one(verb, rest, ExpectedKind::Object)?),
        "wear" => PhysicalAction::Wear(p.one(verb, rest, ExpectedKind::Object)?),
        "wield" => PhysicalAction::Wield(p.one(verb, rest, ExpectedKind::Object)?),
        "remove" => PhysicalAction::Remove(p.one(verb, rest, ExpectedKind::Object)?),
        other => return Err(ActionError::UnknownVerb(other.to_owned())),
    };
    Ok(Command::Act(action))
}

struct Parser<'a> {
    graph: &'a WorldGraph,
    actor: &'a EntityId,
}

impl Parser<'_> {
    fn one(&self, verb: &str, rest: &[String], kind: ExpectedKind) -> Result<EntityId, ActionError> {
        if rest.is_empty() {
            return Err(ActionError::BadArity { verb: verb.to_owned(), expected: "one argument" });
        }
        Ok(self.graph.resolve_name(self.actor, &rest.join(" "), kind)?)
    }

    /// Split `rest` at a separator word and resolve both halves. Every split
    /// point is tried in order; the first fully resolvable one wins.
    fn two(
        &self,
        verb: &str,
        rest: &[String],
        separators: &[&str],
        usage: &'static str,
        target_kind: ExpectedKind,
    ) -> Result<(EntityId, EntityId), ActionError> {
        let mut first_err = None;
        for i in 1..rest.len().saturating_sub(1) {
            if !separators.contains(&rest[i].as_str()) {
                continue;
            }
            let (left, right) = (rest[..i].join(" "), rest[i + 1..].join(" "));
            let attempt = self.graph.resolve_name(self.actor, &right, target_kind).and_then(|target| {
                let obj = self.resolve_object_near(&left, &target)?;
                Ok((obj, target))
            });
            match attempt {
                Ok(pair) => return Ok(pair),
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        match first_err {
            Some(e) => Err(e.into()),
            None => Err(ActionError::BadArity { verb: verb.to_owned(), expected: usage }),
        }
    }

    /// Resolve the first argument; ties are broken in favour of entities
    /// held by the second argument.
    fn resolve_object_near(&self, text: &str, anchor: &EntityId) -> Result<EntityId, WorldError> {
        match self.graph.resolve_name(self.actor, text, ExpectedKind::Object) {
            Err(WorldError::Ambiguous { text, candidates }) => {
                let inside: Vec<&EntityId> = candidates
                    .iter()
                    .filter(|c| matches!(self.graph.parent(c), Ok(Some((_, p))) if p == anchor))
                    .collect();
                match inside.as_slice() {
                    [only] => Ok((*only).clone()),
                    _ => Err(WorldError::Ambiguous { text, candidates }),
                }
            }
            other => other,
        }
    }
}
