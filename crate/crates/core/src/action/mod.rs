//! Physical actions and emotes: parsing, precondition checks, effects and
//! enumeration of the valid-action set.

mod check;
mod enumerate;
mod parse;

pub use check::{check_constraints, execute, perform};
pub use enumerate::{enumerate_valid, enumerate_valid_texts};
pub use parse::parse_command;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{EntityId, WorldError, WorldGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Template {
    Get,
    Drop,
    GetFrom,
    PutIn,
    Give,
    Steal,
    Hit,
    Hug,
    Drink,
    Eat,
    Wear,
    Wield,
    Remove,
}

impl Template {
    /// Table order.
    pub const ALL: [Template; 13] = [
        Template::Get,
        Template::Drop,
        Template::GetFrom,
        Template::PutIn,
        Template::Give,
        Template::Steal,
        Template::Hit,
        Template::Hug,
        Template::Drink,
        Template::Eat,
        Template::Wear,
        Template::Wield,
        Template::Remove,
    ];

    pub fn verb(self) -> &'static str {
        match self {
            Template::Get | Template::GetFrom => "get",
            Template::Drop => "drop",
            Template::PutIn => "put",
            Template::Give => "give",
            Template::Steal => "steal",
            Template::Hit => "hit",
            Template::Hug => "hug",
            Template::Drink => "drink",
            Template::Eat => "eat",
            Template::Wear => "wear",
            Template::Wield => "wield",
            Template::Remove => "remove",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Template::GetFrom | Template::PutIn | Template::Give | Template::Steal => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhysicalAction {
    Get(EntityId),
    Drop(EntityId),
    GetFrom(EntityId, EntityId),
    PutIn(EntityId, EntityId),
    Give(EntityId, EntityId),
    Steal(EntityId, EntityId),
    Hit(EntityId),
    Hug(EntityId),
    Drink(EntityId),
    Eat(EntityId),
    Wear(EntityId),
    Wield(EntityId),
    Remove(EntityId),
}

impl PhysicalAction {
    pub fn template(&self) -> Template {
        match self {
            PhysicalAction::Get(_) => Template::Get,
            PhysicalAction::Drop(_) => Template::Drop,
            PhysicalAction::GetFrom(..) => Template::GetFrom,
            PhysicalAction::PutIn(..) => Template::PutIn,
            PhysicalAction::Give(..) => Template::Give,
            PhysicalAction::Steal(..) => Template::Steal,
            PhysicalAction::Hit(_) => Template::Hit,
            PhysicalAction::Hug(_) => Template::Hug,
            PhysicalAction::Drink(_) => Template::Drink,
            PhysicalAction::Eat(_) => Template::Eat,
            PhysicalAction::Wear(_) => Template::Wear,
            PhysicalAction::Wield(_) => Template::Wield,
            PhysicalAction::Remove(_) => Template::Remove,
        }
    }

    pub fn args(&self) -> Vec<&EntityId> {
        match self {
            PhysicalAction::GetFrom(a, b)
            | PhysicalAction::PutIn(a, b)
            | PhysicalAction::Give(a, b)
            | PhysicalAction::Steal(a, b) => vec![a, b],
            PhysicalAction::Get(a)
            | PhysicalAction::Drop(a)
            | PhysicalAction::Hit(a)
            | PhysicalAction::Hug(a)
            | PhysicalAction::Drink(a)
            | PhysicalAction::Eat(a)
            | PhysicalAction::Wear(a)
            | PhysicalAction::Wield(a)
            | PhysicalAction::Remove(a) => vec![a],
        }
    }

    /// Build from a template and its arguments; `None` on an arity mismatch.
    pub fn from_parts(template: Template, args: &[EntityId]) -> Option<Self> {
        if args.len() != template.arity() {
            return None;
        }
        let a = args[0].clone();
        let b = || args[1].clone();
        Some(match template {
            Template::Get => PhysicalAction::Get(a),
            Template::Drop => PhysicalAction::Drop(a),
            Template::GetFrom => PhysicalAction::GetFrom(a, b()),
            Template::PutIn => PhysicalAction::PutIn(a, b()),
            Template::Give => PhysicalAction::Give(a, b()),
            Template::Steal => PhysicalAction::Steal(a, b()),
            Template::Hit => PhysicalAction::Hit(a),
            Template::Hug => PhysicalAction::Hug(a),
            Template::Drink => PhysicalAction::Drink(a),
            Template::Eat => PhysicalAction::Eat(a),
            Template::Wear => PhysicalAction::Wear(a),
            Template::Wield => PhysicalAction::Wield(a),
            Template::Remove => PhysicalAction::Remove(a),
        })
    }
}

/// Lower-case template phrase with display names, e.g. `put scepter in small bucket`.
pub fn canonical_text(graph: &WorldGraph, action: &PhysicalAction) -> Result<String, WorldError> {
    let n = |id: &EntityId| graph.display_name(id);
    Ok(match action {
        PhysicalAction::GetFrom(a, b) => format!("get {} from {}", n(a)?, n(b)?),
        PhysicalAction::PutIn(a, b) => format!("put {} in {}", n(a)?, n(b)?),
        PhysicalAction::Give(a, b) => format!("give {} to {}", n(a)?, n(b)?),
        PhysicalAction::Steal(a, b) => format!("steal {} from {}", n(a)?, n(b)?),
        single => format!("{} {}", single.template().verb(), n(single.args()[0])?),
    })
}

macro_rules! emotes {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// Expressive moves. They notify the room and never touch world state.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum Emote { $($variant),* }

        impl Emote {
            /// Alphabetical.
            pub const ALL: [Emote; 22] = [$(Emote::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self { $(Emote::$variant => $name),* }
            }
        }

        impl FromStr for Emote {
            type Err = ActionError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim().to_lowercase().as_str() {
                    $($name => Ok(Emote::$variant),)*
                    other => Err(ActionError::UnknownVerb(other.to_owned())),
                }
            }
        }
    };
}

emotes! {
    Applaud => "applaud",
    Blush => "blush",
    Cry => "cry",
    Dance => "dance",
    Frown => "frown",
    Gasp => "gasp",
    Grin => "grin",
    Groan => "groan",
    Growl => "growl",
    Laugh => "laugh",
    Nod => "nod",
    Nudge => "nudge",
    Ponder => "ponder",
    Pout => "pout",
    Scream => "scream",
    Shrug => "shrug",
    Sigh => "sigh",
    Smile => "smile",
    Stare => "stare",
    Wave => "wave",
    Wink => "wink",
    Yawn => "yawn",
}

impl Emote {
    /// `gesture <emote>`
    pub fn canonical_text(self) -> String {
        format!("gesture {}", self.as_str())
    }
}

impl fmt::Display for Emote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Command {
    Act(PhysicalAction),
    Emote(Emote),
}

impl Command {
    pub fn canonical_text(&self, graph: &WorldGraph) -> Result<String, WorldError> {
        match self {
            Command::Act(a) => canonical_text(graph, a),
            Command::Emote(e) => Ok(e.canonical_text()),
        }
    }
}

/// One precondition row of the action table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    /// actor and target in same room
    #[serde(rename = "not-same-room")]
    NotSameRoom,
    /// object is gettable
    #[serde(rename = "not-gettable")]
    NotGettable,
    /// actor is carrying object
    #[serde(rename = "not-carrying")]
    NotCarrying,
    /// object2 is surface or container
    #[serde(rename = "not-container-or-surface")]
    NotContainerOrSurface,
    /// object2 is carrying object1
    #[serde(rename = "not-carrying-on-source")]
    NotCarryingOnSource,
    /// object is a member of actor / agent
    #[serde(rename = "not-member")]
    NotMember,
    #[serde(rename = "not-drink")]
    NotDrink,
    #[serde(rename = "not-food")]
    NotFood,
    #[serde(rename = "not-wearable")]
    NotWearable,
    #[serde(rename = "not-weapon")]
    NotWeapon,
    /// object is wearable or a weapon
    #[serde(rename = "not-wearable-or-weapon")]
    NotWearableOrWeapon,
    /// actor is wearing/wielding object
    #[serde(rename = "not-wearing-or-wielding")]
    NotWearingOrWielding,
    /// the two arguments (or actor and agent) must differ
    #[serde(rename = "self-target")]
    SelfTarget,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::NotSameRoom => "not-same-room",
            Rule::NotGettable => "not-gettable",
            Rule::NotCarrying => "not-carrying",
            Rule::NotContainerOrSurface => "not-container-or-surface",
            Rule::NotCarryingOnSource => "not-carrying-on-source",
            Rule::NotMember => "not-member",
            Rule::NotDrink => "not-drink",
            Rule::NotFood => "not-food",
            Rule::NotWearable => "not-wearable",
            Rule::NotWeapon => "not-weapon",
            Rule::NotWearableOrWeapon => "not-wearable-or-weapon",
            Rule::NotWearingOrWielding => "not-wearing-or-wielding",
            Rule::SelfTarget => "self-target",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintViolation {
    pub rule: Rule,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Said,
    Acted,
    Emoted,
    Informed,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameEvent {
    pub kind: EventKind,
    pub actor: EntityId,
    pub payload: String,
    pub visible_to: BTreeSet<EntityId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionError {
    #[error("unknown verb `{0}`")]
    UnknownVerb(String),
    #[error("`{verb}` expects {expected}")]
    BadArity { verb: String, expected: &'static str },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("`{id}` should be a {expected}")]
    WrongKind { id: EntityId, expected: &'static str },
    #[error("constraints no longer hold: {}", render_violations(.0))]
    PreconditionRace(Vec<ConstraintViolation>),
    #[error("empty command")]
    Empty,
}

pub fn render_violations(v: &[ConstraintViolation]) -> String {
    v.iter().map(|c| format!("{} ({})", c.rule, c.detail)).collect::<Vec<_>>().join(", ")
}
