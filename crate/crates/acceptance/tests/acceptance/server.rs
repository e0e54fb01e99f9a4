//! The foyer dialogue played by two clients over the wire must end in the
//! same world as a direct replay, however the messages interleave.

use std::path::Path;
use std::time::Duration;

use light_acceptance::Outcome;
use light_core::episode::{play_inputs, EpisodeFile, Split, TurnInput};
use light_core::fixtures::{foyer_participants, foyer_turns, foyer_world};
use light_core::world::WorldGraph;
use light_server::client::Client;
use light_server::protocol::{EndReason, ErrorCode, Payload, Role, TurnSubmit, PROTOCOL_VERSION};
use light_server::{serve, SeatPolicy, ServerConfig, WorldSource};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RUNS: u64 = 100;
const WAIT: Duration = Duration::from_secs(20);

struct Seat {
    reason: EndReason,
    hash: String,
    log: Option<String>,
    observations: usize,
    stale_refused: usize,
}

fn submit(t: &TurnInput) -> Payload {
    Payload::TurnSubmit(TurnSubmit { utterance: t.utterance.clone(), action: t.act.clone(), emote: t.emote.clone(), candidate: None })
}

/// The handshake done by hand, so the server's first seq is seen.
async fn join(c: &mut Client, seat: Option<&str>) -> Result<(), String> {
    c.send(Payload::Hello { protocol: PROTOCOL_VERSION.to_owned(), name: None }).map_err(|e| e.to_string())?;
    let m = c.recv_message().await.map_err(|e| e.to_string())?;
    if m.seq != 1 || !matches!(m.payload, Payload::Hello { .. }) {
        return Err(format!("server opened with {} at seq {}", m.payload.kind(), m.seq));
    }
    c.send(Payload::Join { role: Role::Human, seat: seat.map(str::to_owned) }).map_err(|e| e.to_string())
}

/// Plays the script for whichever seat this client holds. Checks that the
/// server's seq keeps growing after the hello. With `rng`, it waits at random,
/// and sometimes resends an old seq, which must be refused.
async fn play(mut c: Client, mut rng: Option<ChaCha8Rng>) -> Result<Seat, String> {
    let script = foyer_turns();
    let (mut last, mut observations, mut stale_refused, mut stale_sent) = (1, 0, 0, 0);
    loop {
        let m = tokio::time::timeout(WAIT, c.recv_message())
            .await
            .map_err(|_| "server stalled".to_string())?
            .map_err(|e| e.to_string())?;
        if m.seq <= last {
            return Err(format!("server seq {} after {last}", m.seq));
        }
        last = m.seq;
        match m.payload {
            Payload::YourTurn { turn, .. } => {
                if turn != observations {
                    return Err(format!("your_turn {turn} after {observations} observations"));
                }
                if let Some(rng) = rng.as_mut() {
                    if rng.gen_bool(0.2) {
                        c.send_raw(r#"{"seq":1,"type":"turn_submit","utterance":"out of order"}"#).map_err(|e| e.to_string())?;
                        stale_sent += 1;
                    }
                    tokio::time::sleep(Duration::from_micros(rng.gen_range(0..1500))).await;
                }
                c.send(submit(&script[turn])).map_err(|e| e.to_string())?;
            }
            Payload::TurnResult { ok, consumed, .. } if !(ok && consumed) => {
                return Err("scripted turn was not accepted".into());
            }
            Payload::Observation(o) => {
                if o.turn != observations || o.utterance != script[o.turn].utterance {
                    return Err(format!("observation {} out of order", o.turn));
                }
                observations += 1;
            }
            Payload::Error { code: ErrorCode::BadSeq, .. } => stale_refused += 1,
            Payload::Error { code, message } => return Err(format!("{code:?}: {message}")),
            Payload::EpisodeEnd { reason, hash, log, .. } => {
                if stale_refused != stale_sent {
                    return Err(format!("{stale_sent} stale messages, {stale_refused} refused"));
                }
                return Ok(Seat { reason, hash, log, observations, stale_refused });
            }
            _ => {}
        }
    }
}

fn config(dir: &Path) -> ServerConfig {
    let mut c = ServerConfig::new(WorldSource::Graph(foyer_world()), dir);
    c.participants = Some(foyer_participants());
    c.seats = SeatPolicy::HumanVsHuman;
    c.session.max_turns = foyer_turns().len();
    c
}

fn replay_from_disk(log: &str) -> Result<String, String> {
    let text = std::fs::read_to_string(log).map_err(|e| e.to_string())?;
    let file = EpisodeFile::parse(&text).map_err(|e| e.to_string())?;
    let world_path = Path::new(log).parent().unwrap().join(&file.header.world);
    let world = WorldGraph::from_json(&std::fs::read_to_string(world_path).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    file.into_log(world).map_err(|e| e.to_string())?.final_hash().map_err(|e| e.to_string())
}

fn verify(seat: &Seat, expected: &str) -> Result<(), String> {
    if seat.reason != EndReason::Completed || seat.observations != foyer_turns().len() || seat.hash != expected {
        return Err(format!("ended {:?} after {} turns with hash {}", seat.reason, seat.observations, seat.hash));
    }
    Ok(())
}

async fn run() -> Outcome {
    let expected = play_inputs("foyer", foyer_world(), foyer_participants(), Split::Train, &foyer_turns())
        .map_err(|e| e.to_string())?
        .final_hash()
        .map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;

    let server = serve(config(dir.path())).await.map_err(|e| e.to_string())?;
    let mut servant = Client::connect(server.addr).await.map_err(|e| e.to_string())?;
    join(&mut servant, Some("servant")).await?;
    let mut king = Client::connect(server.addr).await.map_err(|e| e.to_string())?;
    join(&mut king, Some("king")).await?;
    let (a, b) = tokio::join!(play(servant, None), play(king, None));
    let (a, b) = (a?, b?);
    verify(&a, &expected)?;
    verify(&b, &expected)?;
    let on_disk = replay_from_disk(a.log.as_deref().ok_or("no log path")?)?;
    if on_disk != expected {
        return Err(format!("written log replays to {on_disk}"));
    }
    server.shutdown();

    let server = serve(config(dir.path())).await.map_err(|e| e.to_string())?;
    let mut seats = Vec::new();
    for seed in 0..2 * RUNS {
        let mut c = Client::new(server.connect_memory());
        seats.push(tokio::spawn(async move {
            join(&mut c, None).await?;
            play(c, Some(ChaCha8Rng::seed_from_u64(seed))).await
        }));
    }
    let mut stale = 0;
    for s in seats {
        let s = s.await.map_err(|e| e.to_string())??;
        verify(&s, &expected)?;
        stale += s.stale_refused;
    }
    for _ in 0..RUNS {
        let s = server.next_finished().await.ok_or("server closed early")?;
        if s.hash != expected {
            return Err(format!("session {} ended at {}", s.id, s.hash));
        }
    }
    if server.sessions_started() != RUNS as usize {
        return Err(format!("{} sessions started", server.sessions_started()));
    }
    server.shutdown();
    Ok(format!(
        "TCP replay and {RUNS} interleaved sessions end at {}; seq monotone, {stale} stale messages refused",
        &expected[..12]
    ))
}

pub fn check() -> Outcome {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?;
    rt.block_on(run())
}
