//! Valid-action enumeration against a brute force: every template over every
//! argument tuple, kept when the table's rows hold. The rows are evaluated
//! here from raw parent edges, not through the engine's checker.

use std::collections::BTreeSet;

use light_acceptance::Outcome;
use light_core::action::{canonical_text, check_constraints, enumerate_valid, PhysicalAction, Template};
use light_core::synth::random_world;
use light_core::world::{EdgeKind, EntityId, EntityKind, WorldGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WORLDS: usize = 500;
pub const MAX_ENTITIES: usize = 8;

fn parent<'a>(g: &'a WorldGraph, id: &EntityId) -> Option<(EdgeKind, &'a EntityId)> {
    g.parent(id).ok().flatten()
}

fn is(g: &WorldGraph, id: &EntityId, kind: EntityKind) -> bool {
    g.kind(id).ok() == Some(kind)
}

/// The table's precondition column for `actor`, read off the graph.
pub fn table_allows(g: &WorldGraph, actor: &EntityId, a: &PhysicalAction) -> bool {
    use PhysicalAction::*;
    let Ok(room) = g.room_of(actor) else { return false };
    let holds = |kind: EdgeKind| matches!(kind, EdgeKind::Carries | EdgeKind::Wears | EdgeKind::Wields);
    let aff = |o: &EntityId| g.object(o).ok().map(|s| s.affordances);
    let object = |o: &EntityId| is(g, o, EntityKind::Object);
    let other_here = |c: &EntityId| is(g, c, EntityKind::Character) && c != actor && g.room_of(c).ok() == Some(room);
    let carried = |o: &EntityId| parent(g, o) == Some((EdgeKind::Carries, actor));
    let member_of = |o: &EntityId, who: &EntityId| matches!(parent(g, o), Some((k, p)) if holds(k) && p == who);
    // a container or surface the actor can reach: on the floor or held
    let reachable = |o: &EntityId| match parent(g, o) {
        Some((EdgeKind::Contains, p)) => p == room,
        Some((k, p)) => holds(k) && p == actor,
        None => false,
    };
    let holder = |o: &EntityId| aff(o).is_some_and(|x| x.container || x.surface);
    match a {
        Get(o) => object(o) && aff(o).unwrap().gettable && parent(g, o) == Some((EdgeKind::Contains, room)),
        Drop(o) => object(o) && aff(o).unwrap().gettable && carried(o),
        GetFrom(o, src) => {
            object(o)
                && object(src)
                && reachable(src)
                && aff(o).unwrap().gettable
                && holder(src)
                && parent(g, o) == Some((EdgeKind::Contains, src))
        }
        PutIn(o, dst) => object(o) && object(dst) && o != dst && reachable(dst) && holder(dst) && carried(o),
        Give(o, c) => object(o) && other_here(c) && member_of(o, actor),
        Steal(o, c) => object(o) && other_here(c) && member_of(o, c),
        Hit(c) | Hug(c) => other_here(c),
        Drink(o) => object(o) && carried(o) && aff(o).unwrap().drink,
        Eat(o) => object(o) && carried(o) && aff(o).unwrap().food,
        Wear(o) => object(o) && carried(o) && aff(o).unwrap().wearable,
        Wield(o) => object(o) && carried(o) && aff(o).unwrap().weapon,
        Remove(o) => {
            object(o)
                && matches!(parent(g, o), Some((EdgeKind::Wears | EdgeKind::Wields, p)) if p == actor)
                && aff(o).is_some_and(|x| x.wearable || x.weapon)
        }
    }
}

/// Every (template, tuple) over all entities of `g`.
pub fn all_instantiations(g: &WorldGraph) -> Vec<PhysicalAction> {
    let ids: Vec<EntityId> = g.ids().cloned().collect();
    let mut out = Vec::new();
    for t in Template::ALL {
        if t.arity() == 1 {
            out.extend(ids.iter().filter_map(|a| PhysicalAction::from_parts(t, &[a.clone()])));
        } else {
            for a in &ids {
                out.extend(ids.iter().filter_map(|b| PhysicalAction::from_parts(t, &[a.clone(), b.clone()])));
            }
        }
    }
    out
}

fn small_world(rng: &mut ChaCha8Rng) -> WorldGraph {
    let locations = rng.gen_range(1..=2);
    let characters = rng.gen_range(1..=3);
    let objects = rng.gen_range(0..=MAX_ENTITIES - locations - characters);
    random_world(rng, locations, characters, objects, false)
}

pub fn check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut actors, mut listed, mut tuples) = (0, 0, 0);
    for w in 0..WORLDS {
        let g = small_world(&mut rng);
        if g.len() > MAX_ENTITIES {
            return Err(format!("world {w} has {} entities", g.len()));
        }
        let candidates = all_instantiations(&g);
        tuples += candidates.len();
        let characters: Vec<EntityId> = g.ids().filter(|i| is(&g, i, EntityKind::Character)).cloned().collect();
        for actor in &characters {
            actors += 1;
            let got = enumerate_valid(&g, actor).map_err(|e| format!("world {w}, {actor}: {e}"))?;
            let got_set: BTreeSet<PhysicalAction> = got.iter().cloned().collect();
            if got_set.len() != got.len() {
                return Err(format!("world {w}, {actor}: duplicate entries"));
            }
            let oracle: BTreeSet<PhysicalAction> =
                candidates.iter().filter(|a| table_allows(&g, actor, a)).cloned().collect();
            if got_set != oracle {
                let extra: Vec<_> = got_set.difference(&oracle).collect();
                let missing: Vec<_> = oracle.difference(&got_set).collect();
                return Err(format!("world {w}, {actor}: extra {extra:?}, missing {missing:?}"));
            }
            // the engine's own checker agrees tuple by tuple
            for a in &candidates {
                let clean = check_constraints(&g, actor, a).map(|v| v.is_empty()).unwrap_or(false);
                if clean != oracle.contains(a) {
                    return Err(format!("world {w}, {actor}: check_constraints disagrees on {a:?}"));
                }
            }
            // table order, then canonical text
            let keys: Vec<(usize, String)> = got
                .iter()
                .map(|a| {
                    let rank = Template::ALL.iter().position(|t| *t == a.template()).unwrap();
                    (rank, canonical_text(&g, a).unwrap())
                })
                .collect();
            if keys.windows(2).any(|k| k[0] >= k[1]) {
                return Err(format!("world {w}, {actor}: not in canonical order"));
            }
            listed += got.len();
        }
    }
    Ok(format!("{WORLDS} worlds, {actors} actors, {tuples} tuples, {listed} valid actions, exact match"))
}
