//! The castle foyer dialogue: action replay, every reordering of its five
//! actions, and the serialized speech context.

use light_acceptance::Outcome;
use light_core::action::{check_constraints, execute, parse_command, Command, PhysicalAction, Rule};
use light_core::episode::{play_inputs, serialize_context, Split, TaskKind};
use light_core::fixtures::{
    foyer_episode, foyer_participants, foyer_turns, foyer_world, FOYER_ACTIONS, FOYER_SPEECH_CONTEXT,
    FOYER_SPEECH_LABEL,
};
use light_core::world::{EntityId, WorldGraph};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Place {
    King,
    Servant,
    Bucket,
    Floor,
}

/// Where the scepter and crown are; nothing else moves in this dialogue.
#[derive(Clone, Copy)]
struct Props {
    scepter: Place,
    crown: Place,
}

/// The table applied by hand to action `step` of the logged five. Returns
/// the violated row, or applies the outcome.
fn oracle_step(p: &mut Props, step: usize) -> Result<(), Rule> {
    use Place::*;
    let (slot, needs, rule, to) = match step {
        0 => (&mut p.scepter, King, Rule::NotMember, Servant),
        1 => (&mut p.scepter, Servant, Rule::NotCarrying, Bucket),
        2 => (&mut p.crown, King, Rule::NotMember, Servant),
        3 => (&mut p.crown, Servant, Rule::NotCarrying, Floor),
        4 => (&mut p.scepter, Bucket, Rule::NotCarryingOnSource, Servant),
        _ => unreachable!(),
    };
    if *slot != needs {
        return Err(rule);
    }
    *slot = to;
    Ok(())
}

fn oracle_first_failure(order: &[usize]) -> Option<(usize, Rule)> {
    let mut p = Props { scepter: Place::King, crown: Place::King };
    order.iter().enumerate().find_map(|(i, &s)| oracle_step(&mut p, s).err().map(|r| (i, r)))
}

fn parse(g: &WorldGraph, actor: &str, text: &str) -> Result<PhysicalAction, String> {
    match parse_command(g, &EntityId::new(actor), text) {
        Ok(Command::Act(a)) => Ok(a),
        other => Err(format!("`{text}` parsed as {other:?}")),
    }
}

/// Runs the actions in `order` until one is refused.
fn engine_first_failure(order: &[usize]) -> Result<(Option<(usize, Vec<Rule>)>, WorldGraph), String> {
    let mut g = foyer_world();
    for (i, &s) in order.iter().enumerate() {
        let (actor, text) = FOYER_ACTIONS[s];
        let a = parse(&g, actor, text)?;
        let actor = EntityId::new(actor);
        let violated: Vec<Rule> =
            check_constraints(&g, &actor, &a).map_err(|e| e.to_string())?.into_iter().map(|v| v.rule).collect();
        if !violated.is_empty() {
            if execute(&mut g, &actor, &a).is_ok() {
                return Err(format!("`{text}` executed despite {violated:?}"));
            }
            return Ok((Some((i, violated)), g));
        }
        execute(&mut g, &actor, &a).map_err(|e| format!("`{text}`: {e}"))?;
    }
    Ok((None, g))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn replay() -> Outcome {
    let logged: Vec<usize> = (0..FOYER_ACTIONS.len()).collect();
    let (failure, first) = engine_first_failure(&logged)?;
    if let Some((i, rules)) = failure {
        return Err(format!("logged order refused at step {i}: {rules:?}"));
    }
    let (_, second) = engine_first_failure(&logged)?;
    let hash = first.state_hash();
    if second.state_hash() != hash {
        return Err("final hash differs between runs".into());
    }
    let episode = foyer_episode().final_hash().map_err(|e| e.to_string())?;
    let played = play_inputs("foyer", foyer_world(), foyer_participants(), Split::Train, &foyer_turns())
        .map_err(|e| e.to_string())?
        .final_hash()
        .map_err(|e| e.to_string())?;
    if episode != hash || played != hash {
        return Err(format!("action replay {hash}, episode file {episode}, dialogue replay {played}"));
    }

    let mut refused = 0;
    for order in permutations(FOYER_ACTIONS.len()) {
        let want = oracle_first_failure(&order);
        let (got, _) = engine_first_failure(&order)?;
        let got_first = got.as_ref().map(|(i, rules)| (*i, rules.clone()));
        if got_first != want.map(|(i, r)| (i, vec![r])) {
            return Err(format!("order {order:?}: engine {got_first:?}, oracle {want:?}"));
        }
        refused += usize::from(want.is_some());
    }

    // the crown is in the king's hands, not lying in the room
    let g = foyer_world();
    let grab = parse(&g, "servant", "get crown")?;
    let rules: Vec<Rule> =
        check_constraints(&g, &EntityId::new("servant"), &grab).unwrap().into_iter().map(|v| v.rule).collect();
    if rules != [Rule::NotSameRoom] {
        return Err(format!("servant `get crown`: {rules:?}"));
    }
    Ok(format!("5 actions clean; {refused} of 120 orderings refused at the predicted step; hash {}", &hash[..12]))
}

pub fn context_golden() -> Outcome {
    let log = foyer_episode();
    let turn = log
        .turns
        .iter()
        .find(|t| t.utterance.as_deref() == Some(FOYER_SPEECH_LABEL))
        .ok_or("label utterance not in the episode")?;
    let ctx = serialize_context(&log, &turn.speaker, TaskKind::Speech, turn.index).map_err(|e| e.to_string())?;
    if ctx.flat_text != FOYER_SPEECH_CONTEXT {
        let at = ctx.flat_text.bytes().zip(FOYER_SPEECH_CONTEXT.bytes()).take_while(|(a, b)| a == b).count();
        return Err(format!("context differs from the golden text at byte {at}"));
    }
    let first = FOYER_SPEECH_CONTEXT.lines().next().unwrap_or_default();
    let last = FOYER_SPEECH_CONTEXT.lines().last().unwrap_or_default();
    if first != "_task_speech" || last != "_self_act give crown to servant" {
        return Err(format!("golden text runs from `{first}` to `{last}`"));
    }
    Ok(format!("{} bytes identical, turn {} by {}", ctx.flat_text.len(), turn.index, turn.speaker))
}
