use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use light_core::agents::{Player, RankingPlayer};
use light_core::exec::Exec;
use light_server::session::SessionConfig;
use light_server::{serve, AgentFactory, SeatPolicy, ServerConfig, SessionSummary, WorldSource};

use crate::common::{build_ranker, find_character, load, parse_timeout, read_world, seed_or_default, train_utterances, usage};
use crate::ServeArgs;

fn report(s: &SessionSummary) {
    let log = s.log_path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "not written".into());
    let reason = format!("{:?}", s.reason).to_lowercase();
    println!("session {} ended ({reason}) after {} turns; state {}; log {log}", s.id, s.turns, s.hash);
}

fn config(args: &ServeArgs) -> Result<ServerConfig> {
    let host: IpAddr = match args.host.parse() {
        Ok(h) => h,
        Err(_) => return usage(format!("invalid value '{}' for '--host': expected an IP address", args.host)),
    };
    if args.max_turns == 0 {
        return usage("--max-turns must be at least 1");
    }
    let ws_port = match args.ws_port {
        Some(p) => p,
        None if args.port == 0 => 0,
        None => match args.port.checked_add(1) {
            Some(p) => p,
            None => return usage("--port 65535 leaves no room for the HTTP port; pass --ws-port"),
        },
    };
    let human_timeout = parse_timeout("timeout", &args.timeout)?;
    let agent_timeout = parse_timeout("agent-timeout", &args.agent_timeout)?;
    let seed = seed_or_default(args.seed);

    let world = read_world(&args.world)?;
    let participants = match &args.participants {
        None => None,
        Some(list) => match list.split(',').map(str::trim).collect::<Vec<_>>().as_slice() {
            [a, b] => Some([find_character(&world, a)?, find_character(&world, b)?]),
            _ => return usage("--participants takes exactly two names, comma separated"),
        },
    };
    let data = args.data.as_deref().map(|d| load(d, Exec::default())).transpose()?;
    let ranker = build_ranker(&args.agent, data.as_ref())?;
    let agent: AgentFactory =
        Arc::new(move |seed| Box::new(RankingPlayer::new(ranker.clone(), seed, true)) as Box<dyn Player>);

    let mut cfg = ServerConfig::new(WorldSource::Graph(world), &args.log_dir);
    cfg.bind = SocketAddr::new(host, args.port);
    cfg.ws_bind = Some(SocketAddr::new(host, ws_port));
    cfg.web_root = args.web_root.clone();
    cfg.participants = participants;
    cfg.seats = args.seats;
    cfg.human_timeout = human_timeout;
    cfg.agent_timeout = agent_timeout;
    cfg.session = SessionConfig { max_turns: args.max_turns, strict_consume: args.strict, seed, ..SessionConfig::default() };
    cfg.candidate_pool = data.as_ref().map(train_utterances).unwrap_or_default();
    cfg.agent = agent;
    cfg.agent_sessions = args.agent_sessions;
    Ok(cfg)
}

pub fn run(args: ServeArgs) -> Result<()> {
    let cfg = config(&args)?;
    let rt = tokio::runtime::Runtime::new().context("starting the async runtime")?;
    rt.block_on(async move {
        let handle = serve(cfg).await?;
        println!("listening on {} (ndjson)", handle.addr);
        if let Some(ws) = handle.ws_addr {
            println!("listening on http://{ws} (websocket /ws)");
        }
        std::io::stdout().flush()?;

        // agent-vs-agent exits once its sessions are done; anything else runs until ctrl-c
        let limit = if args.seats == SeatPolicy::AgentVsAgent { args.agent_sessions } else { usize::MAX };
        let mut finished = 0;
        while finished < limit {
            tokio::select! {
                s = handle.next_finished() => match s {
                    Some(s) => {
                        report(&s);
                        finished += 1;
                    }
                    None => break,
                },
                _ = tokio::signal::ctrl_c() => break,
            }
        }

        // let running sessions write their logs before exiting
        handle.shutdown();
        while finished < handle.sessions_started() {
            match tokio::time::timeout(Duration::from_secs(5), handle.next_finished()).await {
                Ok(Some(s)) => {
                    report(&s);
                    finished += 1;
                }
                _ => break,
            }
        }
        anyhow::Ok(())
    })
}
