//! Action/emote co-occurrence on brawls where every hit is answered by a hit.

use std::collections::HashMap;

use light_acceptance::Outcome;
use light_core::episode::{play_inputs, EpisodeLog, Split, TurnInput};
use light_core::eval::cooccurrence;
use light_core::fixtures::graveyard_world;
use light_core::world::EntityId;

/// Thief and gravedigger trade moves; once someone hits, the other hits
/// back until the episode ends.
fn brawls() -> Result<Vec<EpisodeLog>, String> {
    let participants = [EntityId::new("thief"), EntityId::new("gravedigger")];
    let t = TurnInput::default;
    let hit = |who: &str| t().with_act(format!("hit {who}"));
    let scripts: Vec<Vec<TurnInput>> = vec![
        vec![t().with_act("drop coal"), hit("thief"), hit("gravedigger"), hit("thief")],
        vec![TurnInput::say("Evening."), t().with_act("hug thief"), hit("gravedigger").with_emote("growl"), hit("thief")],
        vec![t().with_emote("stare"), TurnInput::say("What?"), t().with_act("eat meat"), hit("thief").with_emote("scream"),
            hit("gravedigger"), hit("thief"), hit("gravedigger")],
        vec![t().with_act("remove cloak"), t().with_act("drop shovel").with_emote("frown"), t().with_act("get shovel")],
    ];
    scripts
        .iter()
        .enumerate()
        .map(|(i, s)| play_inputs(format!("brawl-{i}"), graveyard_world(), participants.clone(), Split::Train, s))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())
}

/// Adjacent-turn pairs counted directly: (matrix, move, reply) -> count.
fn pair_scan(logs: &[EpisodeLog]) -> HashMap<(&'static str, String, String), u64> {
    let mut out = HashMap::new();
    for log in logs {
        for t in 1..log.turns.len() {
            let (a, b) = (&log.turns[t - 1], &log.turns[t]);
            let verb = |x: &light_core::episode::TurnRecord| {
                x.act_text.as_deref().map(|s| s.split(' ').next().unwrap().to_owned())
            };
            let emote = |x: &light_core::episode::TurnRecord| x.emote.map(|e| e.as_str().to_owned());
            for (name, l, r) in [
                ("action_action", verb(a), verb(b)),
                ("action_emote", verb(a), emote(b)),
                ("emote_action", emote(a), verb(b)),
                ("emote_emote", emote(a), emote(b)),
            ] {
                if let (Some(l), Some(r)) = (l, r) {
                    *out.entry((name, l, r)).or_default() += 1;
                }
            }
        }
    }
    out
}

pub fn check() -> Outcome {
    let logs = brawls()?;
    let m = cooccurrence(&logs);
    let scan = pair_scan(&logs);
    for matrix in m.all() {
        for a in &matrix.axis_a {
            for b in &matrix.axis_b {
                let want = scan.get(&(matrix.name.as_str(), a.clone(), b.clone())).copied().unwrap_or(0);
                if matrix.get(a, b) != want {
                    return Err(format!("{} ({a}, {b}) = {}, scan {want}", matrix.name, matrix.get(a, b)));
                }
            }
        }
    }
    let total: u64 = m.all().iter().map(|x| x.total()).sum();
    if total != scan.values().sum::<u64>() {
        return Err("pairs outside the matrix axes".into());
    }
    let aa = &m.action_action;
    let hits = aa.get("hit", "hit");
    let row = aa.axis_a.iter().position(|a| a == "hit").ok_or("no hit row")?;
    let row_total: u64 = aa.counts[row].iter().sum();
    match aa.argmax() {
        Some(("hit", "hit", _)) if hits == row_total && hits > 0 => {}
        other => return Err(format!("argmax {other:?}, hit row {row_total}, (hit, hit) {hits}")),
    }
    Ok(format!("4 matrices equal the pair scan; (hit, hit) = {hits} of {row_total} replies to hit, {} action pairs", aa.total()))
}
