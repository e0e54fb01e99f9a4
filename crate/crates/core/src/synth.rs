//! Seeded generators for random worlds and synthetic episode corpora.
//!
//! Used by property tests, benchmarks and the bundled synthetic fixtures.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::action::{enumerate_valid_texts, Emote};
use crate::episode::{Episode, EpisodeLog, Split, TurnInput};

use crate::world::{
    build_world, Affordances, CharacterSheet, Edge, EdgeKind, EntityId, LocationSpec, ObjectSpec, WorldGraph,
};

const OBJECT_NAMES: &[&str] = &[
    "rag", "sword", "bucket", "cloak", "apple", "wine", "shield", "chest", "table", "rope", "lantern", "bread",
    "helmet", "dagger", "shelf", "barrel", "crown", "ring", "bowl", "ale",
];
const CHARACTER_NAMES: &[&str] =
    &["king", "servant", "pirate", "thief", "knight", "witch", "farmer", "priest", "guard", "merchant"];

pub const SEEN_CATEGORIES: &[&str] = &[
    "Abandoned", "Bazaar", "Cave", "Countryside", "Desert", "Dungeon", "Farm", "Forest", "Graveyard",
    "Inside Castle", "Inside Church", "Inside Cottage", "Inside Palace", "Inside Temple", "Inside Tower", "Jungle",
    "Lake", "Mountain", "Outside Castle", "Outside Church", "Outside Cottage", "Outside Palace", "Outside Temple",
    "Outside Tower", "Port", "Shore", "Swamp", "Tavern", "Town", "Trail", "Wasteland",
];
pub const UNSEEN_CATEGORIES: &[&str] = &[
    "City in the Clouds",
    "Frozen Tundra",
    "Magical Realm",
    "Netherworld",
    "Supernatural",
    "Underwater Aquapolis",
];

fn random_affordances<R: Rng>(rng: &mut R) -> Affordances {
    Affordances {
        gettable: rng.gen_bool(0.7),
        container: rng.gen_bool(0.25),
        surface: rng.gen_bool(0.15),
        food: rng.gen_bool(0.2),
        drink: rng.gen_bool(0.15),
        wearable: rng.gen_bool(0.25),
        weapon: rng.gen_bool(0.2),
    }
}

/// A random legal world with `locations` rooms, `characters` characters and
/// `objects` objects. Object names may repeat when `allow_duplicate_names`.
pub fn random_world<R: Rng>(
    rng: &mut R,
    locations: usize,
    characters: usize,
    objects: usize,
    allow_duplicate_names: bool,
) -> WorldGraph {
    random_world_in(rng, None, locations, characters, objects, allow_duplicate_names)
}

/// Like [`random_world`], with every location in `category` when given.
pub fn random_world_in<R: Rng>(
    rng: &mut R,
    category: Option<&str>,
    locations: usize,
    characters: usize,
    objects: usize,
    allow_duplicate_names: bool,
) -> WorldGraph {
    assert!(locations >= 1);
    let locs: Vec<LocationSpec> = (0..locations)
        .map(|i| LocationSpec {
            id: EntityId::new(format!("room-{i}")),
            name: format!("room {i}"),
            category: category.map(str::to_owned).unwrap_or_else(|| SEEN_CATEGORIES.choose(rng).unwrap().to_string()),
            description: format!("Room number {i}."),
            backstory: String::new(),
            neighbors: Vec::new(),
        })
        .collect();
    let mut char_names: Vec<&str> = CHARACTER_NAMES.to_vec();
    char_names.shuffle(rng);
    let chars: Vec<CharacterSheet> = (0..characters)
        .map(|i| {
            let name = char_names[i % char_names.len()];
            let name = if i < char_names.len() { name.to_string() } else { format!("{name} {i}") };
            CharacterSheet {
                id: EntityId::new(format!("char-{i}")),
                name: name.clone(),
                persona: vec![format!("I am the {name}.")],
                description: format!("A {name}."),
            }
        })
        .collect();
    let mut obj_names: Vec<&str> = OBJECT_NAMES.to_vec();
    obj_names.shuffle(rng);
    let objs: Vec<ObjectSpec> = (0..objects)
        .map(|i| {
            let name = if allow_duplicate_names {
                obj_names.choose(rng).unwrap().to_string()
            } else if i < obj_names.len() {
                obj_names[i].to_string()
            } else {
                format!("{} {i}", obj_names[i % obj_names.len()])
            };
            ObjectSpec {
                id: EntityId::new(format!("obj-{i}")),
                description: format!("A plain {name}."),
                name,
                affordances: random_affordances(rng),
            }
        })
        .collect();

    let mut placements = Vec::new();
    for c in &chars {
        let room = locs.choose(rng).unwrap();
        placements.push(Edge::new(room.id.clone(), EdgeKind::Contains, c.id.clone()));
    }
    for (i, o) in objs.iter().enumerate() {
        let mut options: Vec<(EntityId, EdgeKind)> =
            locs.iter().map(|l| (l.id.clone(), EdgeKind::Contains)).collect();
        for c in &chars {
            options.push((c.id.clone(), EdgeKind::Carries));
            if o.affordances.wearable {
                options.push((c.id.clone(), EdgeKind::Wears));
            }
            if o.affordances.weapon {
                options.push((c.id.clone(), EdgeKind::Wields));
            }
        }
        // only earlier objects as holders keeps the graph acyclic
        for holder in &objs[..i] {
            if holder.affordances.holds_things() {
                options.push((holder.id.clone(), EdgeKind::Contains));
            }
        }
        let (parent, kind) = options.choose(rng).unwrap().clone();
        placements.push(Edge::new(parent, kind, o.id.clone()));
    }
    build_world(locs, chars, objs, &placements).expect("generator only emits legal placements")
}

const OPENERS: &[&str] = &["Greetings", "Well met", "Hello there", "Ah", "Listen", "Good day", "Hmm"];
const REMARKS: &[&str] = &[
    "have you seen the {o}",
    "I could use that {o}",
    "keep your hands off my {o}",
    "the {o} looks valuable",
    "I found a {o} earlier",
    "where did you get that {o}",
    "this place smells of {o}",
];

/// Split of synthetic episode `i`: every tenth is unseen, the rest cycle
/// through train (7 in 10), valid and test_seen.
pub fn synthetic_split(i: usize) -> Split {
    match i % 10 {
        9 => Split::TestUnseen,
        7 => Split::Valid,
        8 => Split::TestSeen,
        _ => Split::Train,
    }
}

/// A seeded corpus of `n` two-character episodes, each in its own
/// one-room world. Every logged action was valid when taken.
pub fn synthetic_corpus(seed: u64, n: usize) -> Vec<EpisodeLog> {
    (0..n).map(|i| synthetic_episode(seed, i)).collect()
}

fn synthetic_episode(seed: u64, i: usize) -> EpisodeLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    let split = synthetic_split(i);
    let category = if split == Split::TestUnseen {
        UNSEEN_CATEGORIES[i / 10 % UNSEEN_CATEGORIES.len()]
    } else {
        SEEN_CATEGORIES[rng.gen_range(0..SEEN_CATEGORIES.len())]
    };
    let objects = rng.gen_range(3..8);
    let world = random_world_in(&mut rng, Some(category), 1, 2, objects, false);
    let participants = [EntityId::new("char-0"), EntityId::new("char-1")];
    let mut ep = Episode::new(format!("synth-{i:03}"), world, participants, split).expect("two characters share the room");
    let turns = rng.gen_range(6..13);
    for _ in 0..turns {
        let speaker = ep.next_speaker().clone();
        let g = ep.graph();
        let names: Vec<String> = g
            .objects_in(g.room_of(&speaker).expect("placed"))
            .expect("room")
            .into_iter()
            .map(|o| g.display_name(o).expect("known"))
            .collect();
        let mut input = TurnInput::default();
        if rng.gen_bool(0.9) || names.is_empty() {
            let opener = OPENERS.choose(&mut rng).unwrap();
            let text = match names.choose(&mut rng) {
                Some(o) => format!("{opener}, {}.", REMARKS.choose(&mut rng).unwrap().replace("{o}", o)),
                None => format!("{opener}."),
            };
            input.utterance = Some(text);
        }
        if rng.gen_bool(0.4) {
            let valid = enumerate_valid_texts(g, &speaker).expect("speaker is placed");
            if let Some((_, text)) = valid.choose(&mut rng) {
                input.act = Some(text.clone());
            }
        }
        if rng.gen_bool(0.25) {
            input.emote = Some(Emote::ALL.choose(&mut rng).unwrap().as_str().to_owned());
        }
        if input.is_empty() {
            input.utterance = Some("...".to_owned());
        }
        ep.advance_turn(&speaker, &input).expect("generated turns are valid");
    }
    ep.into_log()
}
