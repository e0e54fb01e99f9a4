//! Directed cases for every row of the action table: each template gets a
//! passing case, whose effect is checked against the outcome column, and a
//! failing case for each precondition row.

use std::collections::BTreeSet;

use light_acceptance::Outcome;
use light_core::action::{check_constraints, execute, parse_command, Command, EventKind, Rule, Template};
use light_core::world::{
    build_world, Affordances, CharacterSheet, Edge, EdgeKind, EntityId, LocationSpec, ObjectSpec, WorldGraph,
};

fn id(s: &str) -> EntityId {
    EntityId::new(s)
}

fn room(name: &str) -> LocationSpec {
    LocationSpec {
        id: id(name),
        name: name.into(),
        category: "Test".into(),
        description: format!("The {name}."),
        backstory: String::new(),
        neighbors: vec![],
    }
}

fn person(name: &str) -> CharacterSheet {
    CharacterSheet { id: id(name), name: name.into(), persona: vec![], description: format!("{name}, a person.") }
}

fn thing(name: &str, flags: &str) -> ObjectSpec {
    let mut a = Affordances::default();
    for f in flags.split_whitespace() {
        match f {
            "g" => a.gettable = true,
            "container" => a.container = true,
            "surface" => a.surface = true,
            "food" => a.food = true,
            "drink" => a.drink = true,
            "wearable" => a.wearable = true,
            "weapon" => a.weapon = true,
            other => panic!("unknown flag {other}"),
        }
    }
    ObjectSpec { id: id(name), name: name.into(), description: format!("A {name}."), affordances: a }
}

/// alice and bob share the hall; carol is alone in the yard.
pub fn test_world() -> WorldGraph {
    use EdgeKind::*;
    let objects = [
        ("apple", "g food", "hall", Contains),
        ("statue", "", "hall", Contains),
        ("chest", "container", "hall", Contains),
        ("coin", "g", "chest", Contains),
        ("bolt", "", "chest", Contains),
        ("mug", "g drink", "hall", Contains),
        ("pie", "g food", "hall", Contains),
        ("cap", "g wearable", "hall", Contains),
        ("axe", "g weapon", "hall", Contains),
        ("tray", "g surface", "alice", Carries),
        ("gem", "g", "tray", Contains),
        ("rock", "g", "alice", Carries),
        ("anvil", "", "alice", Carries),
        ("wine", "g drink", "alice", Carries),
        ("bread", "g food", "alice", Carries),
        ("hat", "g wearable", "alice", Carries),
        ("sword", "g weapon", "alice", Carries),
        ("cloak", "g wearable", "alice", Wears),
        ("dagger", "g weapon", "alice", Wields),
        ("ring", "g", "bob", Carries),
        ("helm", "g wearable", "bob", Wears),
        ("lute", "g", "carol", Carries),
        ("idol", "g", "yard", Contains),
        ("basket", "g container", "yard", Contains),
        ("pebble", "g", "basket", Contains),
    ];
    let mut placements = vec![
        Edge::new("hall", Contains, "alice"),
        Edge::new("hall", Contains, "bob"),
        Edge::new("yard", Contains, "carol"),
    ];
    placements.extend(objects.iter().map(|(o, _, parent, kind)| Edge::new(*parent, *kind, *o)));
    build_world(
        vec![room("hall"), room("yard")],
        vec![person("alice"), person("bob"), person("carol")],
        objects.iter().map(|(o, flags, _, _)| thing(o, flags)).collect(),
        &placements,
    )
    .expect("test world is legal")
}

/// What the outcome column says should hold after a passing case.
enum Effect {
    Edge(&'static str, EdgeKind, &'static str),
    /// Consumed, and the actor is informed.
    Consumed(&'static str),
    /// No state change; the named character is informed.
    Informs(&'static str),
}

struct Case {
    command: &'static str,
    /// Rows expected to be violated; empty for a passing case.
    violated: &'static [Rule],
    effect: Option<Effect>,
}

fn pass(command: &'static str, effect: Effect) -> Case {
    Case { command, violated: &[], effect: Some(effect) }
}

fn fail(command: &'static str, violated: &'static [Rule]) -> Case {
    Case { command, violated, effect: None }
}

fn cases() -> Vec<(Template, Vec<Case>)> {
    use EdgeKind::*;
    use Effect::*;
    use Rule::*;
    vec![
        (Template::Get, vec![
            pass("get apple", Edge("alice", Carries, "apple")),
            fail("get idol", &[NotSameRoom]),
            fail("get coin", &[NotSameRoom]),
            fail("get statue", &[NotGettable]),
        ]),
        (Template::Drop, vec![
            pass("drop rock", Edge("hall", Contains, "rock")),
            fail("drop apple", &[NotCarrying]),
            fail("drop cloak", &[NotCarrying]),
            fail("drop anvil", &[NotGettable]),
        ]),
        (Template::GetFrom, vec![
            pass("get coin from chest", Edge("alice", Carries, "coin")),
            pass("get gem from tray", Edge("alice", Carries, "gem")),
            fail("get pebble from basket", &[NotSameRoom]),
            fail("get bolt from chest", &[NotGettable]),
            fail("get rock from statue", &[NotContainerOrSurface, NotCarryingOnSource]),
            fail("get apple from chest", &[NotCarryingOnSource]),
        ]),
        (Template::PutIn, vec![
            pass("put rock in chest", Edge("chest", Contains, "rock")),
            pass("put rock on tray", Edge("tray", Contains, "rock")),
            fail("put rock in basket", &[NotSameRoom]),
            fail("put rock in statue", &[NotContainerOrSurface]),
            fail("put apple in chest", &[NotCarrying]),
        ]),
        (Template::Give, vec![
            pass("give rock to bob", Edge("bob", Carries, "rock")),
            pass("give cloak to bob", Edge("bob", Carries, "cloak")),
            fail("give rock to carol", &[NotSameRoom]),
            fail("give ring to bob", &[NotMember]),
            fail("give apple to bob", &[NotMember]),
        ]),
        (Template::Steal, vec![
            pass("steal ring from bob", Edge("alice", Carries, "ring")),
            pass("steal helm from bob", Edge("alice", Carries, "helm")),
            fail("steal lute from carol", &[NotSameRoom]),
            fail("steal rock from bob", &[NotMember]),
        ]),
        (Template::Hit, vec![pass("hit bob", Informs("bob")), fail("hit carol", &[NotSameRoom])]),
        (Template::Hug, vec![pass("hug bob", Informs("bob")), fail("hug carol", &[NotSameRoom])]),
        (Template::Drink, vec![
            pass("drink wine", Consumed("wine")),
            fail("drink mug", &[NotCarrying]),
            fail("drink rock", &[NotDrink]),
        ]),
        (Template::Eat, vec![
            pass("eat bread", Consumed("bread")),
            fail("eat pie", &[NotCarrying]),
            fail("eat rock", &[NotFood]),
        ]),
        (Template::Wear, vec![
            pass("wear hat", Edge("alice", Wears, "hat")),
            fail("wear cap", &[NotCarrying]),
            fail("wear rock", &[NotWearable]),
        ]),
        (Template::Wield, vec![
            pass("wield sword", Edge("alice", Wields, "sword")),
            fail("wield axe", &[NotCarrying]),
            fail("wield rock", &[NotWeapon]),
        ]),
        (Template::Remove, vec![
            pass("remove cloak", Edge("alice", Carries, "cloak")),
            pass("remove dagger", Edge("alice", Carries, "dagger")),
            fail("remove hat", &[NotWearingOrWielding]),
            fail("remove helm", &[NotWearingOrWielding]),
            fail("remove rock", &[NotWearingOrWielding, NotWearableOrWeapon]),
        ]),
    ]
}

fn run_case(world: &WorldGraph, template: Template, case: &Case) -> Result<(), String> {
    let actor = id("alice");
    let action = match parse_command(world, &actor, case.command) {
        Ok(Command::Act(a)) => a,
        other => return Err(format!("`{}` parsed as {other:?}", case.command)),
    };
    if action.template() != template {
        return Err(format!("`{}` parsed as {:?}", case.command, action.template()));
    }
    let got: BTreeSet<Rule> = check_constraints(world, &actor, &action)
        .map_err(|e| format!("`{}`: {e}", case.command))?
        .into_iter()
        .map(|v| v.rule)
        .collect();
    let want: BTreeSet<Rule> = case.violated.iter().copied().collect();
    if got != want {
        return Err(format!("`{}`: violated {got:?}, expected {want:?}", case.command));
    }
    let mut after = world.clone();
    let result = execute(&mut after, &actor, &action);
    let Some(effect) = &case.effect else {
        return match result {
            Err(_) if after == *world => Ok(()),
            _ => Err(format!("`{}` should not execute", case.command)),
        };
    };
    let events = result.map_err(|e| format!("`{}`: {e}", case.command))?;
    let ok = match effect {
        Effect::Edge(subject, kind, object) => after.has_edge(&id(subject), *kind, &id(object)),
        Effect::Consumed(o) => {
            !after.contains(&id(o))
                && events.iter().any(|e| e.kind == EventKind::Informed && e.visible_to == BTreeSet::from([actor.clone()]))
        }
        Effect::Informs(who) => {
            after == *world
                && events.iter().any(|e| e.kind == EventKind::Informed && e.visible_to == BTreeSet::from([id(who)]))
        }
    };
    if !ok {
        return Err(format!("`{}`: outcome does not match the table", case.command));
    }
    // everything the command does not name keeps its place
    let named: BTreeSet<EntityId> = action.args().into_iter().cloned().collect();
    for e in world.edges() {
        let touched = named.contains(&e.object) && !matches!(template, Template::Hit | Template::Hug);
        if !touched && !after.has_edge(&e.subject, e.kind, &e.object) {
            return Err(format!("`{}` moved {}", case.command, e.object));
        }
    }
    Ok(())
}

pub fn check() -> Outcome {
    let world = test_world();
    let table = cases();
    let covered: BTreeSet<Template> = table.iter().map(|(t, _)| *t).collect();
    if covered.len() != Template::ALL.len() {
        return Err(format!("only {} of {} templates covered", covered.len(), Template::ALL.len()));
    }
    let (mut passing, mut failing) = (0, 0);
    for (template, cases) in &table {
        if !cases.iter().any(|c| c.violated.is_empty()) || !cases.iter().any(|c| !c.violated.is_empty()) {
            return Err(format!("{template:?} needs a passing and a failing case"));
        }
        for case in cases {
            run_case(&world, *template, case)?;
            if case.violated.is_empty() {
                passing += 1;
            } else {
                failing += 1;
            }
        }
    }
    let total = passing + failing;
    if total < 35 {
        return Err(format!("{total} cases, need at least 35"));
    }
    Ok(format!("{total} cases over 13 templates: {passing} pass, {failing} fail as tabled"))
}
