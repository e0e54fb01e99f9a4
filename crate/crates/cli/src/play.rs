//! Terminal play: one human seat against a scripted or in-process partner.

use std::io::{BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use light_core::agents::{Player, RankingPlayer, ScriptedPlayer};
use light_core::episode::{EpisodeFile, TurnInput};
use light_core::exec::Exec;
use light_core::world::{EntityId, WorldGraph};
use light_server::protocol::{EndReason, Observation, Payload, Role, TurnSubmit};
use light_server::session::{SessionConfig, SessionCore, SessionState};

use crate::common::{build_ranker, find_character, load, read_world, seed_or_default, train_utterances, usage};
use crate::turn_line::{parse_line, Line, HELP};
use crate::PlayArgs;

fn default_partner(world: &WorldGraph, me: &EntityId) -> Result<EntityId> {
    let room = world.room_of(me)?;
    match world.characters_in(room)?.into_iter().find(|c| *c != me) {
        Some(c) => Ok(c.clone()),
        None => bail!("nobody else is in the {}; pass --partner", world.name(room)?),
    }
}

fn read_script(path: &Path) -> Result<Vec<TurnInput>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut turns = Vec::new();
    for (n, line) in text.lines().enumerate() {
        match parse_line(line) {
            Ok(Line::Turn(t)) => turns.push(t),
            Ok(Line::Blank) => {}
            Ok(_) => bail!("{}:{}: commands are not allowed in a script", path.display(), n + 1),
            Err(e) => bail!("{}:{}: {e}", path.display(), n + 1),
        }
    }
    Ok(turns)
}

fn print_observation(world: &WorldGraph, obs: &Observation) {
    let who = world.name(&obs.speaker).unwrap_or(obs.speaker.as_str());
    if let Some(u) = &obs.utterance {
        println!("{who} says: {u}");
    }
    if let Some(a) = &obs.action {
        let note = if obs.fallback { " (fallback)" } else { "" };
        println!("{who} acts: {a}{note}");
    }
    if let Some(e) = &obs.emote {
        println!("{who} emotes: {e}");
    }
}

fn print_snapshot(payload: &Payload, me: &str) {
    if let Payload::WorldSnapshot { setting, description, persona, partner_name, objects, .. } = payload {
        println!("[{setting}] {description}");
        println!("You are the {me}. {}", persona.join(" "));
        println!("With you: the {partner_name}.");
        if !objects.is_empty() {
            let names: Vec<&str> = objects.iter().map(|o| o.name.as_str()).collect();
            println!("You see: {}.", names.join(", "));
        }
    }
}

/// Writes the log and returns the paths used.
fn write_log(core: &SessionCore, path: &Path) -> Result<PathBuf> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("play");
    let world_name = format!("{stem}.world.json");
    let world_path = path.with_file_name(&world_name);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let log = core.log();
    std::fs::write(&world_path, log.world.to_canonical_json())
        .with_context(|| format!("writing {}", world_path.display()))?;
    std::fs::write(path, EpisodeFile::from_log(log, &world_name).to_jsonl())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(world_path)
}

pub fn run(args: PlayArgs) -> Result<()> {
    if args.max_turns == 0 {
        return usage("--max-turns must be at least 1");
    }
    let world = read_world(&args.world)?;
    let me = find_character(&world, &args.seat)?;
    let partner = match &args.partner {
        Some(p) => find_character(&world, p)?,
        None => default_partner(&world, &me)?,
    };
    if partner == me {
        return usage("--partner must differ from --seat");
    }
    let seed = seed_or_default(args.seed);

    let data = args.data.as_deref().map(|d| load(d, Exec::default())).transpose()?;
    let mut player: Box<dyn Player> = match &args.partner_script {
        Some(path) => Box::new(ScriptedPlayer::new(read_script(path)?)),
        None => Box::new(RankingPlayer::new(build_ranker(&args.agent, data.as_ref())?, seed, true)),
    };
    let pool = Arc::new(data.as_ref().map(train_utterances).unwrap_or_default());

    let participants = if args.second { [partner.clone(), me.clone()] } else { [me.clone(), partner.clone()] };
    let config = SessionConfig { max_turns: args.max_turns, seed, ..SessionConfig::default() };
    let mut core = SessionCore::new("play", world.clone(), participants, config, pool)?;
    core.start();
    print_snapshot(&core.snapshot(&me)?, world.name(&me)?);

    let stdin = std::io::stdin();
    let interactive = stdin.is_terminal();
    let mut lines = stdin.lock().lines();
    while core.state() == SessionState::Active {
        if core.next_speaker() != &me {
            let view = core.turn_view(Role::Agent);
            let Some(input) = player.choose(&view) else {
                eprintln!("the partner has nothing more to say");
                core.end(EndReason::Completed);
                break;
            };
            let out = core.handle_local(&partner, Some(input))?;
            if let Some(err) = &out.error {
                eprintln!("partner move rejected: {err}");
            }
            if let Some(obs) = &out.observation {
                print_observation(core.graph(), obs);
            }
            continue;
        }
        if interactive {
            print!("> ");
            std::io::stdout().flush()?;
        }
        let Some(line) = lines.next() else {
            core.end(EndReason::Disconnect);
            break;
        };
        let input = match parse_line(&line?) {
            Ok(Line::Turn(t)) => t,
            Ok(Line::Quit) => {
                core.end(EndReason::Disconnect);
                break;
            }
            Ok(Line::Blank) => continue,
            Ok(Line::Help) => {
                println!("{HELP}");
                continue;
            }
            Ok(Line::Actions) => {
                for a in core.turn_view(Role::Human).valid_actions {
                    println!("  {a}");
                }
                continue;
            }
            Ok(Line::Look) => {
                print_snapshot(&core.snapshot(&me)?, world.name(&me)?);
                continue;
            }
            Err(e) => {
                eprintln!("{e}");
                continue;
            }
        };
        let submit = TurnSubmit { utterance: input.utterance, action: input.act, emote: input.emote, candidate: None };
        match core.handle_turn(&me, &submit) {
            Ok(out) => {
                if !out.consumed {
                    eprintln!("{}", out.error.unwrap_or_else(|| "rejected".into()));
                    continue;
                }
                if let Some(obs) = &out.observation {
                    print_observation(core.graph(), obs);
                }
            }
            Err(e) => eprintln!("{e}"),
        }
    }

    let world_path = write_log(&core, &args.log)?;
    println!("episode over after {} turns; state {}", core.turn(), core.hash());
    eprintln!("log: {} (world: {})", args.log.display(), world_path.display());
    Ok(())
}
