//! Adapter for the crowdsourced release, read as JSON exports.
//!
//! Expected layout: `<raw>/{train,valid,test,test_unseen}.json`, each a list
//! of dialogues:
//!
//! ```json
//! {"setting": {"name": "...", "category": "...", "description": "...", "background": "..."},
//!  "agents": [{"name": "...", "persona": "..."}, {"name": "...", "persona": "..."}],
//!  "all_descriptions": {"<object name>": "<description>"},
//!  "room_objects": ["..."], "carrying": [[...], [...]], "wearing": [[...], [...]], "wielding": [[...], [...]],
//!  "character": ["<speaker per turn>"], "speech": ["..."], "action": ["..."], "emote": ["..."]}
//! ```
//!
//! Affordances are not part of the release, so they are inferred from the
//! inventories and from the logged actions. Everything this module knows
//! about the external schema lives here.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;

use super::{io_err, DataError, DatasetManifest};
use crate::episode::{EpisodeFile, EpisodeHeader, Split, TurnLine, EPISODE_FORMAT_VERSION};
use crate::world::{
    build_world, Affordances, CharacterSheet, Edge, EdgeKind, EntityId, IdAllocator, LocationSpec, ObjectSpec,
};

const SPLIT_FILES: [(&str, Split); 4] = [
    ("train.json", Split::Train),
    ("valid.json", Split::Valid),
    ("test.json", Split::TestSeen),
    ("test_unseen.json", Split::TestUnseen),
];

#[derive(Deserialize)]
#[serde(untagged)]
enum Persona {
    Text(String),
    Lines(Vec<String>),
}

#[derive(Deserialize)]
struct RawAgent {
    name: String,
    #[serde(default)]
    persona: Option<Persona>,
}

#[derive(Deserialize)]
struct RawSetting {
    name: String,
    category: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    background: String,
}

#[derive(Deserialize)]
struct RawDialogue {
    setting: RawSetting,
    agents: Vec<RawAgent>,
    #[serde(default)]
    all_descriptions: BTreeMap<String, String>,
    #[serde(default)]
    room_objects: Vec<String>,
    #[serde(default)]
    carrying: Vec<Vec<String>>,
    #[serde(default)]
    wearing: Vec<Vec<String>>,
    #[serde(default)]
    wielding: Vec<Vec<String>>,
    character: Vec<String>,
    speech: Vec<String>,
    #[serde(default)]
    action: Vec<String>,
    #[serde(default)]
    emote: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ImportSummary {
    pub dialogues: usize,
    pub written: usize,
    /// (dialogue name, reason) for dialogues that could not be converted.
    pub skipped: Vec<(String, String)>,
}

fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        cur.push(ch);
        if matches!(ch, '.' | '!' | '?') {
            let s = cur.trim();
            if !s.is_empty() {
                out.push(s.to_owned());
            }
            cur.clear();
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_owned());
    }
    out
}

fn persona_lines(p: &Option<Persona>) -> Vec<String> {
    match p {
        None => Vec::new(),
        Some(Persona::Lines(v)) => v.iter().map(|l| l.trim().to_owned()).filter(|l| !l.is_empty()).collect(),
        Some(Persona::Text(t)) => split_sentences(t),
    }
}

/// Verb and argument names of a raw action such as `put rag in bucket`.
fn action_args(action: &str) -> Option<(String, String, Option<String>)> {
    let words: Vec<&str> = action.split_whitespace().collect();
    let (verb, rest) = words.split_first()?;
    let sep = match *verb {
        "get" | "steal" => Some("from"),
        "put" => rest.iter().find(|w| **w == "in" || **w == "on").copied(),
        "give" => Some("to"),
        _ => None,
    };
    match sep.and_then(|s| rest.iter().position(|w| *w == s).map(|i| (s, i))) {
        Some((_, i)) if i > 0 && i + 1 < rest.len() => {
            Some((verb.to_string(), rest[..i].join(" "), Some(rest[i + 1..].join(" "))))
        }
        _ => Some((verb.to_string(), rest.join(" "), None)),
    }
}

// the release has no description for some entities; the engine needs one
fn or_name(text: &str, name: &str) -> String {
    if text.trim().is_empty() { name.trim().to_owned() } else { text.trim().to_owned() }
}

fn same_name(a: &str, b: &str) -> bool {
    crate::text::normalize_name(a) == crate::text::normalize_name(b)
}

struct Converted {
    world: crate::world::WorldGraph,
    file: EpisodeFile,
}

fn convert(d: &RawDialogue, id: &str, split: Split, world_ref: &str) -> Result<Converted, String> {
    if d.agents.len() != 2 {
        return Err(format!("expected 2 agents, found {}", d.agents.len()));
    }
    let n = d.character.len();
    if d.speech.len() != n || (!d.action.is_empty() && d.action.len() != n) || (!d.emote.is_empty() && d.emote.len() != n) {
        return Err("per-turn lists differ in length".into());
    }
    let mut ids = IdAllocator::new();
    let room = ids.allocate(&d.setting.name);
    let char_ids: Vec<EntityId> = d.agents.iter().map(|a| ids.allocate(&a.name)).collect();
    let who = |name: &str| d.agents.iter().position(|a| same_name(&a.name, name));

    // every object name, first mention first
    let mut names: Vec<String> = Vec::new();
    let mut note = |n: &str| {
        if !n.trim().is_empty() && !names.iter().any(|x| same_name(x, n)) {
            names.push(n.trim().to_owned());
        }
    };
    d.room_objects.iter().for_each(|o| note(o));
    for list in [&d.carrying, &d.wearing, &d.wielding] {
        list.iter().flatten().for_each(|o| note(o));
    }
    let parsed: Vec<Option<(String, String, Option<String>)>> = d.action.iter().map(|a| action_args(a)).collect();
    // only `get X from Y` may introduce names: any other unknown reference
    // should fail replay rather than conjure an object
    for (verb, a, b) in parsed.iter().flatten() {
        if let (true, Some(b)) = (verb == "get", b) {
            note(a);
            note(b);
        }
    }
    let index_of = |n: &str| names.iter().position(|x| same_name(x, n));
    let mut aff: Vec<Affordances> = vec![Affordances::gettable(); names.len()];
    let mut parent: Vec<Option<(EdgeKind, EntityId)>> = vec![None; names.len()];
    let obj_ids: Vec<EntityId> = names.iter().map(|n| ids.allocate(n)).collect();

    for (slot, kind) in [(&d.wearing, EdgeKind::Wears), (&d.wielding, EdgeKind::Wields), (&d.carrying, EdgeKind::Carries)] {
        for (c, items) in slot.iter().enumerate().take(2) {
            for o in items {
                if let Some(i) = index_of(o) {
                    match kind {
                        EdgeKind::Wears => aff[i].wearable = true,
                        EdgeKind::Wields => aff[i].weapon = true,
                        _ => {}
                    }
                    parent[i].get_or_insert((kind, char_ids[c].clone()));
                }
            }
        }
    }
    for (verb, a, b) in parsed.iter().flatten() {
        let Some(i) = index_of(a) else { continue };
        match verb.as_str() {
            "wear" => aff[i].wearable = true,
            "wield" => aff[i].weapon = true,
            "eat" => aff[i].food = true,
            "drink" => aff[i].drink = true,
            "remove" => {
                if !aff[i].weapon {
                    aff[i].wearable = true;
                }
            }
            "put" | "get" => {
                if let Some(j) = b.as_deref().and_then(index_of) {
                    aff[j].container = true;
                    // first seen coming out of a container: it started inside
                    if verb == "get" && parent[i].is_none() && i != j {
                        parent[i] = Some((EdgeKind::Contains, obj_ids[j].clone()));
                    }
                }
            }
            _ => {}
        }
    }
    // held objects must stay holdable after inference
    for i in 0..names.len() {
        if let Some((EdgeKind::Contains, p)) = &parent[i] {
            let j = obj_ids.iter().position(|x| x == p).expect("own id");
            if parent[j].as_ref().map(|(_, q)| q == &obj_ids[i]).unwrap_or(false) {
                parent[i] = None;
            }
        }
    }

    let location = LocationSpec {
        id: room.clone(),
        name: d.setting.name.trim().to_owned(),
        category: d.setting.category.trim().to_owned(),
        description: or_name(&d.setting.description, &d.setting.name),
        backstory: d.setting.background.trim().to_owned(),
        neighbors: Vec::new(),
    };
    let characters: Vec<CharacterSheet> = d
        .agents
        .iter()
        .zip(&char_ids)
        .map(|(a, id)| CharacterSheet { id: id.clone(), name: a.name.trim().to_owned(), persona: persona_lines(&a.persona), description: a.name.trim().to_owned() })
        .collect();
    let objects: Vec<ObjectSpec> = names
        .iter()
        .zip(&obj_ids)
        .zip(&aff)
        .map(|((n, id), a)| ObjectSpec {
            id: id.clone(),
            name: n.clone(),
            description: or_name(d.all_descriptions.get(n).map(String::as_str).unwrap_or_default(), n),
            affordances: *a,
        })
        .collect();
    let mut edges: Vec<Edge> = char_ids.iter().map(|c| Edge::new(room.clone(), EdgeKind::Contains, c.clone())).collect();
    for (i, p) in parent.iter().enumerate() {
        let (kind, p) = p.clone().unwrap_or((EdgeKind::Contains, room.clone()));
        edges.push(Edge::new(p, kind, obj_ids[i].clone()));
    }
    let world = build_world(vec![location], characters, objects, &edges).map_err(|e| e.to_string())?;

    let first = d.character.first().ok_or("dialogue has no turns")?;
    let opener = who(first).ok_or_else(|| format!("unknown speaker `{first}`"))?;
    let participants = [char_ids[opener].clone(), char_ids[1 - opener].clone()];
    let mut turns = Vec::with_capacity(n);
    for i in 0..n {
        let speaker = who(&d.character[i]).ok_or_else(|| format!("unknown speaker `{}`", d.character[i]))?;
        let field = |v: &Vec<String>| v.get(i).map(|s| s.trim().to_owned()).filter(|s| !s.is_empty());
        turns.push(TurnLine {
            index: i,
            speaker: char_ids[speaker].clone(),
            utterance: field(&d.speech),
            act: field(&d.action),
            emote: field(&d.emote),
            events: None,
        });
    }
    let header = EpisodeHeader {
        version: EPISODE_FORMAT_VERSION.to_owned(),
        id: id.to_owned(),
        world: world_ref.to_owned(),
        participants,
        split,
    };
    Ok(Converted { world, file: EpisodeFile { header, turns } })
}

/// Convert the release under `raw_dir` into a canonical dataset in `out_dir`.
///
/// Output depends only on the input files, so re-running produces identical
/// bytes. Turns are not validated here; `load_dataset` replays and
/// quarantines.
pub fn import_light(raw_dir: &Path, out_dir: &Path) -> Result<ImportSummary, DataError> {
    let present: Vec<(&str, Split)> = SPLIT_FILES.iter().copied().filter(|(f, _)| raw_dir.join(f).is_file()).collect();
    if present.is_empty() {
        let expected = SPLIT_FILES.map(|(f, _)| f).join(", ");
        return Err(DataError::UnrecognizedLayout(format!("none of {expected} in {}", raw_dir.display())));
    }
    let mut manifest = DatasetManifest::new();
    let mut summary = ImportSummary::default();
    let mut categories: BTreeSet<String> = BTreeSet::new();
    for dir in [out_dir.join("worlds"), out_dir.join("episodes")] {
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    }
    for (fname, split) in present {
        let path = raw_dir.join(fname);
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        let dialogues: Vec<RawDialogue> =
            serde_json::from_str(&text).map_err(|e| DataError::UnrecognizedLayout(format!("{fname}: {e}")))?;
        for (i, d) in dialogues.iter().enumerate() {
            summary.dialogues += 1;
            let name = format!("{}-{i:05}", split.as_str());
            let is_unseen = split == Split::TestUnseen;
            let world_rel = format!("worlds/{name}.json");
            match convert(d, &name, split, &format!("../{world_rel}")) {
                Ok(c) => {
                    if !is_unseen && !manifest.unseen_categories.contains(&d.setting.category) {
                        categories.insert(d.setting.category.trim().to_owned());
                    }
                    let ep_rel = format!("episodes/{name}.jsonl");
                    let wp = out_dir.join(&world_rel);
                    std::fs::write(&wp, c.world.to_canonical_json()).map_err(io_err(&wp))?;
                    let ep = out_dir.join(&ep_rel);
                    std::fs::write(&ep, c.file.to_jsonl()).map_err(io_err(&ep))?;
                    manifest.worlds.push(world_rel);
                    manifest.splits.entry(split).or_default().push(ep_rel);
                    summary.written += 1;
                }
                Err(reason) => summary.skipped.push((name, reason)),
            }
        }
    }
    for c in categories {
        if !manifest.seen_categories.contains(&c) {
            manifest.seen_categories.push(c);
        }
    }
    let mp = out_dir.join("manifest.json");
    std::fs::write(&mp, manifest.to_json()).map_err(io_err(&mp))?;
    Ok(summary)
}
