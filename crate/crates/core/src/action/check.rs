use std::collections::BTreeSet;

use super::{canonical_text, ActionError, Command, ConstraintViolation, EventKind, GameEvent, PhysicalAction, Rule};
use crate::world::{Affordances, EdgeKind, EntityId, EntityKind, WorldGraph};

struct Checker<'a> {
    graph: &'a WorldGraph,
    actor: &'a EntityId,
    room: &'a EntityId,
    out: Vec<ConstraintViolation>,
}

impl<'a> Checker<'a> {
    fn require(&mut self, holds: bool, rule: Rule, detail: impl FnOnce() -> String) {
        if !holds {
            self.out.push(ConstraintViolation { rule, detail: detail() });
        }
    }

    fn object(&self, id: &EntityId) -> Result<Affordances, ActionError> {
        match self.graph.kind(id)? {
            EntityKind::Object => Ok(self.graph.object(id)?.affordances),
            _ => Err(ActionError::WrongKind { id: id.clone(), expected: "object" }),
        }
    }

    fn character(&self, id: &EntityId) -> Result<(), ActionError> {
        match self.graph.kind(id)? {
            EntityKind::Character => Ok(()),
            _ => Err(ActionError::WrongKind { id: id.clone(), expected: "character" }),
        }
    }

    fn parent(&self, id: &EntityId) -> Option<(EdgeKind, &'a EntityId)> {
        self.graph.parent(id).ok().flatten()
    }

    /// Lying directly in the actor's room.
    fn on_floor(&self, id: &EntityId) -> bool {
        self.parent(id) == Some((EdgeKind::Contains, self.room))
    }

    /// In the room or held by the actor.
    fn reachable(&self, id: &EntityId) -> bool {
        match self.parent(id) {
            Some((EdgeKind::Contains, p)) => p == self.room,
            Some((kind, p)) => kind.is_holding() && p == self.actor,
            None => false,
        }
    }

    fn carried_by_actor(&self, id: &EntityId) -> bool {
        self.parent(id) == Some((EdgeKind::Carries, self.actor))
    }

    fn member_of(&self, id: &EntityId, owner: &EntityId) -> bool {
        matches!(self.parent(id), Some((kind, p)) if kind.is_holding() && p == owner)
    }

    fn co_located(&self, who: &EntityId) -> bool {
        self.graph.room_of(who).ok() == Some(self.room)
    }
}

/// Every violated precondition row of `action` for `actor`. An empty list
/// means the action may execute.
pub fn check_constraints(
    graph: &WorldGraph,
    actor: &EntityId,
    action: &PhysicalAction,
) -> Result<Vec<ConstraintViolation>, ActionError> {
    if graph.kind(actor)? != EntityKind::Character {
        return Err(ActionError::WrongKind { id: actor.clone(), expected: "character" });
    }
    let room = graph.room_of(actor)?;
    let mut c = Checker { graph, actor, room, out: Vec::new() };
    let name = |id: &EntityId| graph.display_name(id).unwrap_or_else(|_| id.to_string());
    match action {
        PhysicalAction::Get(o) => {
            let aff = c.object(o)?;
            let floor = c.on_floor(o);
            c.require(floor, Rule::NotSameRoom, || format!("{} is not lying in the room", name(o)));
            c.require(aff.gettable, Rule::NotGettable, || format!("{} cannot be picked up", name(o)));
        }
        PhysicalAction::Drop(o) => {
            let aff = c.object(o)?;
            let carried = c.carried_by_actor(o);
            c.require(carried, Rule::NotCarrying, || format!("you are not carrying {}", name(o)));
            c.require(aff.gettable, Rule::NotGettable, || format!("{} cannot be picked up", name(o)));
        }
        PhysicalAction::GetFrom(o, src) => {
            let aff = c.object(o)?;
            let src_aff = c.object(src)?;
            let reachable = c.reachable(src);
            let inside = c.parent(o) == Some((EdgeKind::Contains, src));
            c.require(reachable, Rule::NotSameRoom, || format!("{} is not here", name(src)));
            c.require(aff.gettable, Rule::NotGettable, || format!("{} cannot be picked up", name(o)));
            c.require(src_aff.holds_things(), Rule::NotContainerOrSurface, || {
                format!("{} is neither a container nor a surface", name(src))
            });
            c.require(inside, Rule::NotCarryingOnSource, || format!("{} is not in {}", name(o), name(src)));
        }
        PhysicalAction::PutIn(o, dst) => {
            c.object(o)?;
            let dst_aff = c.object(dst)?;
            let reachable = c.reachable(dst);
            let carried = c.carried_by_actor(o);
            c.require(reachable, Rule::NotSameRoom, || format!("{} is not here", name(dst)));
            c.require(dst_aff.holds_things(), Rule::NotContainerOrSurface, || {
                format!("{} is neither a container nor a surface", name(dst))
            });
            c.require(carried, Rule::NotCarrying, || format!("you are not carrying {}", name(o)));
            c.require(o != dst, Rule::SelfTarget, || format!("{} cannot hold itself", name(o)));
        }
        PhysicalAction::Give(o, agent) => {
            c.object(o)?;
            c.character(agent)?;
            let here = c.co_located(agent);
            let member = c.member_of(o, actor);
            c.require(here, Rule::NotSameRoom, || format!("{} is not here", name(agent)));
            c.require(member, Rule::NotMember, || format!("you do not have {}", name(o)));
            c.require(agent != actor, Rule::SelfTarget, || "you cannot give to yourself".to_owned());
        }
        PhysicalAction::Steal(o, agent) => {
            c.object(o)?;
            c.character(agent)?;
            let here = c.co_located(agent);
            let member = c.member_of(o, agent);
            c.require(here, Rule::NotSameRoom, || format!("{} is not here", name(agent)));
            c.require(member, Rule::NotMember, || format!("{} does not have {}", name(agent), name(o)));
            c.require(agent != actor, Rule::SelfTarget, || "you cannot steal from yourself".to_owned());
        }
        PhysicalAction::Hit(agent) | PhysicalAction::Hug(agent) => {
            c.character(agent)?;
            let here = c.co_located(agent);
            c.require(here, Rule::NotSameRoom, || format!("{} is not here", name(agent)));
            c.require(agent != actor, Rule::SelfTarget, || "you cannot target yourself".to_owned());
        }
        PhysicalAction::Drink(o)
        | PhysicalAction::Eat(o)
        | PhysicalAction::Wear(o)
        | PhysicalAction::Wield(o) => {
            let aff = c.object(o)?;
            let carried = c.carried_by_actor(o);
            c.require(carried, Rule::NotCarrying, || format!("you are not carrying {}", name(o)));
            let (ok, rule, what) = match action {
                PhysicalAction::Drink(_) => (aff.drink, Rule::NotDrink, "a drink"),
                PhysicalAction::Eat(_) => (aff.food, Rule::NotFood, "food"),
                PhysicalAction::Wear(_) => (aff.wearable, Rule::NotWearable, "wearable"),
                _ => (aff.weapon, Rule::NotWeapon, "a weapon"),
            };
            c.require(ok, rule, || format!("{} is not {what}", name(o)));
        }
        PhysicalAction::Remove(o) => {
            let aff = c.object(o)?;
            let equipped =
                matches!(c.parent(o), Some((EdgeKind::Wears | EdgeKind::Wields, p)) if p == actor);
            c.require(equipped, Rule::NotWearingOrWielding, || {
                format!("you are not wearing or wielding {}", name(o))
            });
            c.require(aff.wearable || aff.weapon, Rule::NotWearableOrWeapon, || {
                format!("{} is neither wearable nor a weapon", name(o))
            });
        }
    }
    Ok(c.out)
}

fn room_audience(graph: &WorldGraph, room: &EntityId) -> BTreeSet<EntityId> {
    graph.characters_in(room).map(|v| v.into_iter().cloned().collect()).unwrap_or_default()
}

/// Apply `action`'s outcome to the graph and return the resulting events.
///
/// Only the position edges named by the action change. Eating or drinking
/// deletes the consumed object.
pub fn execute(
    graph: &mut WorldGraph,
    actor: &EntityId,
    action: &PhysicalAction,
) -> Result<Vec<GameEvent>, ActionError> {
    let violations = check_constraints(graph, actor, action)?;
    if !violations.is_empty() {
        return Err(ActionError::PreconditionRace(violations));
    }
    let room = graph.room_of(actor)?.clone();
    let audience = room_audience(graph, &room);
    let text = canonical_text(graph, action)?;
    let actor_name = graph.display_name(actor)?;
    let mut events = vec![GameEvent {
        kind: EventKind::Acted,
        actor: actor.clone(),
        payload: text,
        visible_to: audience,
    }];
    let inform = |to: &EntityId, payload: String| GameEvent {
        kind: EventKind::Informed,
        actor: actor.clone(),
        payload,
        visible_to: BTreeSet::from([to.clone()]),
    };
    match action {
        PhysicalAction::Get(o) | PhysicalAction::GetFrom(o, _) | PhysicalAction::Steal(o, _) => {
            graph.relocate(o, EdgeKind::Carries, actor)?;
        }
        PhysicalAction::Drop(o) => graph.relocate(o, EdgeKind::Contains, &room)?,
        PhysicalAction::PutIn(o, dst) => graph.relocate(o, EdgeKind::Contains, dst)?,
        PhysicalAction::Give(o, agent) => graph.relocate(o, EdgeKind::Carries, agent)?,
        PhysicalAction::Hit(agent) => events.push(inform(agent, format!("{actor_name} hits you"))),
        PhysicalAction::Hug(agent) => events.push(inform(agent, format!("{actor_name} hugs you"))),
        PhysicalAction::Drink(o) => {
            let name = graph.display_name(o)?;
            graph.remove_object(o)?;
            events.push(inform(actor, format!("you drink {name} successfully")));
        }
        PhysicalAction::Eat(o) => {
            let name = graph.display_name(o)?;
            graph.remove_object(o)?;
            events.push(inform(actor, format!("you eat {name} successfully")));
        }
        PhysicalAction::Wear(o) => graph.relocate(o, EdgeKind::Wears, actor)?,
        PhysicalAction::Wield(o) => graph.relocate(o, EdgeKind::Wields, actor)?,
        PhysicalAction::Remove(o) => graph.relocate(o, EdgeKind::Carries, actor)?,
    }
    Ok(events)
}

/// Execute an action or broadcast an emote.
pub fn perform(graph: &mut WorldGraph, actor: &EntityId, command: &Command) -> Result<Vec<GameEvent>, ActionError> {
    match command {
        Command::Act(a) => execute(graph, actor, a),
        Command::Emote(e) => {
            if graph.kind(actor)? != EntityKind::Character {
                return Err(ActionError::WrongKind { id: actor.clone(), expected: "character" });
            }
            let room = graph.room_of(actor)?;
            Ok(vec![GameEvent {
                kind: EventKind::Emoted,
                actor: actor.clone(),
                payload: e.canonical_text(),
                visible_to: room_audience(graph, room),
            }])
        }
    }
}
