use super::{canonical_text, ActionError, PhysicalAction, Template};
use crate::world::{EdgeKind, EntityId, EntityKind, WorldGraph};

/// Every physical action `actor` may take right now, in table order and then
/// by canonical text. Emotes are always available and are not listed.
///
/// Built directly from the graph structure rather than by filtering
/// `check_constraints`, so the two can be cross-checked.
pub fn enumerate_valid(graph: &WorldGraph, actor: &EntityId) -> Result<Vec<PhysicalAction>, ActionError> {
    Ok(enumerate_with_text(graph, actor)?.into_iter().map(|(a, _)| a).collect())
}

/// Same as [`enumerate_valid`], paired with each action's canonical text.
pub fn enumerate_valid_texts(graph: &WorldGraph, actor: &EntityId) -> Result<Vec<(PhysicalAction, String)>, ActionError> {
    enumerate_with_text(graph, actor)
}

fn enumerate_with_text(graph: &WorldGraph, actor: &EntityId) -> Result<Vec<(PhysicalAction, String)>, ActionError> {
    if graph.kind(actor)? != EntityKind::Character {
        return Err(ActionError::WrongKind { id: actor.clone(), expected: "character" });
    }
    let room = graph.room_of(actor)?.clone();
    let mut objects: Vec<(EntityId, EdgeKind, EntityId)> = Vec::new();
    for id in graph.objects_in(&room)? {
        if let Some((kind, parent)) = graph.parent(id)? {
            objects.push((id.clone(), kind, parent.clone()));
        }
    }
    let others: Vec<EntityId> = graph.characters_in(&room)?.into_iter().filter(|c| *c != actor).cloned().collect();
    let aff = |id: &EntityId| graph.object(id).map(|o| o.affordances);

    let mut out = Vec::new();
    let reachable = |kind: EdgeKind, parent: &EntityId| {
        (kind == EdgeKind::Contains && *parent == room) || (kind.is_holding() && parent == actor)
    };
    for (o, kind, parent) in &objects {
        let a = aff(o)?;
        let carried = *kind == EdgeKind::Carries && parent == actor;
        let member = kind.is_holding() && parent == actor;
        if a.gettable && *kind == EdgeKind::Contains && *parent == room {
            out.push(PhysicalAction::Get(o.clone()));
        }
        if a.gettable && carried {
            out.push(PhysicalAction::Drop(o.clone()));
        }
        if a.gettable && *kind == EdgeKind::Contains && aff(parent).map(|p| p.holds_things()).unwrap_or(false) {
            if let Some((pk, pp)) = graph.parent(parent)? {
                if reachable(pk, pp) {
                    out.push(PhysicalAction::GetFrom(o.clone(), parent.clone()));
                }
            }
        }
        if carried {
            for (dst, dk, dp) in &objects {
                if dst != o && reachable(*dk, dp) && aff(dst)?.holds_things() {
                    out.push(PhysicalAction::PutIn(o.clone(), dst.clone()));
                }
            }
            if a.drink {
                out.push(PhysicalAction::Drink(o.clone()));
            }
            if a.food {
                out.push(PhysicalAction::Eat(o.clone()));
            }
            if a.wearable {
                out.push(PhysicalAction::Wear(o.clone()));
            }
            if a.weapon {
                out.push(PhysicalAction::Wield(o.clone()));
            }
        }
        if member {
            for c in &others {
                out.push(PhysicalAction::Give(o.clone(), c.clone()));
            }
        }
        if kind.is_holding() && others.contains(parent) {
            out.push(PhysicalAction::Steal(o.clone(), parent.clone()));
        }
        if matches!(kind, EdgeKind::Wears | EdgeKind::Wields) && parent == actor && (a.wearable || a.weapon) {
            out.push(PhysicalAction::Remove(o.clone()));
        }
    }
    for c in &others {
        out.push(PhysicalAction::Hit(c.clone()));
        out.push(PhysicalAction::Hug(c.clone()));
    }

    let mut keyed = Vec::with_capacity(out.len());
    for a in out {
        let text = canonical_text(graph, &a)?;
        keyed.push((template_rank(a.template()), text, a));
    }
    keyed.sort();
    Ok(keyed.into_iter().map(|(_, t, a)| (a, t)).collect())
}

fn template_rank(t: Template) -> usize {
    Template::ALL.iter().position(|x| *x == t).expect("template listed")
}
