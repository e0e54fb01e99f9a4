use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex as StdMutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::extract::ws::WebSocketUpgrade;
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use light_core::agents::{Player, RandomRanker, RankingPlayer, ScriptedPlayer};
use light_core::episode::{EpisodeFile, EpisodeLog};
use light_core::text::normalize_name;
use light_core::world::{EntityId, EntityKind, WorldGraph};
use tokio::net::TcpListener;
use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver, UnboundedSender};
use tokio::sync::{oneshot, Mutex};
use tokio::task::JoinHandle;
use tokio::time::Instant;
use tower_http::services::ServeDir;

use crate::protocol::{compatible, EndReason, ErrorCode, Payload, Role, TurnSubmit, WireMessage, PROTOCOL_VERSION};
use crate::session::{SessionConfig, SessionCore, SessionError, SessionState, TurnOutcome};
use crate::transport::{memory_pair, tcp_lines, ws_lines, Lines};
use crate::ServerError;

/// Default turn timeout for human seats.
pub const HUMAN_TIMEOUT: Duration = Duration::from_secs(300);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeatPolicy {
    /// Each connection plays against an in-process agent.
    HumanVsAgent,
    /// Connections are paired in arrival order.
    HumanVsHuman,
    /// In-process agents only; sessions start with the server.
    AgentVsAgent,
}

impl SeatPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            SeatPolicy::HumanVsAgent => "human-vs-agent",
            SeatPolicy::HumanVsHuman => "human-vs-human",
            SeatPolicy::AgentVsAgent => "agent-vs-agent",
        }
    }
}

impl FromStr for SeatPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [SeatPolicy::HumanVsAgent, SeatPolicy::HumanVsHuman, SeatPolicy::AgentVsAgent]
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown seat policy `{s}` (human-vs-agent, human-vs-human, agent-vs-agent)"))
    }
}

pub enum WorldSource {
    Path(PathBuf),
    Graph(WorldGraph),
}

/// Builds the in-process player for an agent seat from a per-seat seed.
pub type AgentFactory = Arc<dyn Fn(u64) -> Box<dyn Player> + Send + Sync>;

pub fn random_agent() -> AgentFactory {
    Arc::new(|seed| Box::new(RankingPlayer::new(Arc::new(RandomRanker), seed, true)) as Box<dyn Player>)
}

pub struct ServerConfig {
    /// NDJSON listener. Port 0 picks a free port.
    pub bind: SocketAddr,
    /// HTTP listener for `/ws` and the static web root.
    pub ws_bind: Option<SocketAddr>,
    pub web_root: Option<PathBuf>,
    pub world: WorldSource,
    /// Seats in turn order; the first two characters sharing a room when
    /// absent.
    pub participants: Option<[EntityId; 2]>,
    pub seats: SeatPolicy,
    pub human_timeout: Option<Duration>,
    pub agent_timeout: Option<Duration>,
    pub log_dir: PathBuf,
    pub session: SessionConfig,
    /// Utterances offered to agent seats.
    pub candidate_pool: Vec<String>,
    pub agent: AgentFactory,
    /// Sessions to run under [`SeatPolicy::AgentVsAgent`].
    pub agent_sessions: usize,
}

impl ServerConfig {
    pub fn new(world: WorldSource, log_dir: impl Into<PathBuf>) -> Self {
        ServerConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 0)),
            ws_bind: None,
            web_root: None,
            world,
            participants: None,
            seats: SeatPolicy::HumanVsAgent,
            human_timeout: Some(HUMAN_TIMEOUT),
            agent_timeout: None,
            log_dir: log_dir.into(),
            session: SessionConfig::default(),
            candidate_pool: Vec::new(),
            agent: random_agent(),
            agent_sessions: 1,
        }
    }
}

/// A finished session, as reported to the handle.
#[derive(Clone, Debug)]
pub struct SessionSummary {
    pub id: String,
    pub reason: EndReason,
    pub turns: usize,
    pub hash: String,
    pub log_path: Option<PathBuf>,
    pub log: EpisodeLog,
}

struct Shared {
    world: WorldGraph,
    participants: [EntityId; 2],
    seats: SeatPolicy,
    human_timeout: Option<Duration>,
    agent_timeout: Option<Duration>,
    log_dir: PathBuf,
    session: SessionConfig,
    pool: Arc<Vec<String>>,
    agent: AgentFactory,
    prefix: String,
    sessions: AtomicUsize,
    connections: AtomicU64,
    live: StdMutex<Vec<UnboundedSender<SessionEvent>>>,
    finished: UnboundedSender<SessionSummary>,
}

pub struct ServerHandle {
    pub addr: SocketAddr,
    pub ws_addr: Option<SocketAddr>,
    shared: Arc<Shared>,
    lobby: UnboundedSender<LobbyMsg>,
    finished: Mutex<UnboundedReceiver<SessionSummary>>,
    listeners: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    /// Waits for the next session to end.
    pub async fn next_finished(&self) -> Option<SessionSummary> {
        self.finished.lock().await.recv().await
    }

    pub fn sessions_started(&self) -> usize {
        self.shared.sessions.load(Ordering::SeqCst)
    }

    /// An in-process connection speaking the wire protocol.
    pub fn connect_memory(&self) -> Lines {
        let (ours, theirs) = memory_pair();
        tokio::spawn(run_connection(self.shared.clone(), self.lobby.clone(), theirs));
        ours
    }

    /// Stops accepting and ends running sessions with reason `shutdown`.
    /// Their summaries still arrive through [`ServerHandle::next_finished`].
    pub fn shutdown(&self) {
        for t in &self.listeners {
            t.abort();
        }
        let _ = self.lobby.send(LobbyMsg::Shutdown);
        for s in self.shared.live.lock().expect("live list").drain(..) {
            let _ = s.send(SessionEvent::Shutdown);
        }
    }
}

fn default_participants(world: &WorldGraph) -> Option<[EntityId; 2]> {
    world.ids().filter(|id| world.kind(id).ok() == Some(EntityKind::Location)).find_map(|room| {
        let chars = world.characters_in(room).ok()?;
        (chars.len() >= 2).then(|| [chars[0].clone(), chars[1].clone()])
    })
}

fn check_log_dir(dir: &Path) -> Result<(), ServerError> {
    let err = |source| ServerError::LogDir { path: dir.to_owned(), source };
    std::fs::create_dir_all(dir).map_err(err)?;
    let probe = dir.join(".light-write-probe");
    std::fs::write(&probe, b"").map_err(err)?;
    let _ = std::fs::remove_file(probe);
    Ok(())
}

/// Bind the listeners and start accepting.
pub async fn serve(config: ServerConfig) -> Result<ServerHandle, ServerError> {
    let world = match config.world {
        WorldSource::Graph(g) => g,
        WorldSource::Path(p) => {
            let fail = |e: String| ServerError::WorldLoadFailure(format!("{}: {e}", p.display()));
            let text = std::fs::read_to_string(&p).map_err(|e| fail(e.to_string()))?;
            WorldGraph::from_json(&text).map_err(|e| fail(e.to_string()))?
        }
    };
    let participants = match config.participants {
        Some(p) => p,
        None => default_participants(&world)
            .ok_or_else(|| ServerError::WorldLoadFailure("no room holds two characters".into()))?,
    };
    // refuse a world the episode runtime would refuse, before binding
    SessionCore::new("probe", world.clone(), participants.clone(), config.session.clone(), Arc::default())
        .map_err(|e| ServerError::WorldLoadFailure(e.to_string()))?;
    check_log_dir(&config.log_dir)?;
    if config.web_root.is_some() && config.ws_bind.is_none() {
        return Err(ServerError::Config("a web root needs an HTTP listener".into()));
    }

    let bind_err = |addr| move |source| ServerError::BindFailure { addr, source };
    let listener = TcpListener::bind(config.bind).await.map_err(bind_err(config.bind))?;
    let addr = listener.local_addr().map_err(bind_err(config.bind))?;
    let http = match config.ws_bind {
        Some(a) => Some(TcpListener::bind(a).await.map_err(bind_err(a))?),
        None => None,
    };
    let ws_addr = http.as_ref().and_then(|l| l.local_addr().ok());

    let (finished_tx, finished_rx) = unbounded_channel();
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or_default();
    let shared = Arc::new(Shared {
        world,
        participants,
        seats: config.seats,
        human_timeout: config.human_timeout,
        agent_timeout: config.agent_timeout,
        log_dir: config.log_dir,
        session: config.session,
        pool: Arc::new(config.candidate_pool),
        agent: config.agent,
        prefix: format!("s{started}"),
        sessions: AtomicUsize::new(0),
        connections: AtomicU64::new(0),
        live: StdMutex::new(Vec::new()),
        finished: finished_tx,
    });

    let (lobby_tx, lobby_rx) = unbounded_channel();
    tokio::spawn(run_lobby(shared.clone(), lobby_rx));
    let mut listeners = Vec::new();
    {
        let (shared, lobby) = (shared.clone(), lobby_tx.clone());
        listeners.push(tokio::spawn(async move {
            while let Ok((sock, _)) = listener.accept().await {
                let _ = sock.set_nodelay(true);
                tokio::spawn(run_connection(shared.clone(), lobby.clone(), tcp_lines(sock)));
            }
        }));
    }
    if let Some(http) = http {
        let mut router = Router::new().route("/ws", get(ws_upgrade)).with_state((shared.clone(), lobby_tx.clone()));
        if let Some(root) = config.web_root {
            router = router.fallback_service(ServeDir::new(root));
        }
        listeners.push(tokio::spawn(async move {
            let _ = axum::serve(http, router).await;
        }));
    }
    if shared.seats == SeatPolicy::AgentVsAgent {
        for _ in 0..config.agent_sessions {
            start_session(&shared, [Seat::Agent, Seat::Agent], |_| {});
        }
    }
    Ok(ServerHandle { addr, ws_addr, shared, lobby: lobby_tx, finished: Mutex::new(finished_rx), listeners })
}

type WsState = (Arc<Shared>, UnboundedSender<LobbyMsg>);

async fn ws_upgrade(ws: WebSocketUpgrade, State((shared, lobby)): State<WsState>) -> Response {
    ws.on_upgrade(move |socket| run_connection(shared, lobby, ws_lines(socket)))
}

enum Outgoing {
    Msg(Payload),
    Close,
}

/// Sequence-numbering writer shared by everything that talks to one
/// connection. `close` drops the transport once queued messages are out.
#[derive(Clone)]
struct Outbox(UnboundedSender<Outgoing>);

impl Outbox {
    fn new(outbound: UnboundedSender<String>) -> Self {
        let (tx, mut rx) = unbounded_channel();
        tokio::spawn(async move {
            let mut seq = 0;
            while let Some(Outgoing::Msg(payload)) = rx.recv().await {
                seq += 1;
                if outbound.send(WireMessage { seq, payload }.to_line()).is_err() {
                    break;
                }
            }
        });
        Outbox(tx)
    }

    fn send(&self, payload: Payload) {
        let _ = self.0.send(Outgoing::Msg(payload));
    }

    fn error(&self, code: ErrorCode, message: impl Into<String>) {
        self.send(Payload::error(code, message));
    }

    fn close(&self) {
        let _ = self.0.send(Outgoing::Close);
    }
}

struct Joined {
    events: UnboundedSender<SessionEvent>,
    seat: usize,
}

struct Pending {
    id: u64,
    out: Outbox,
    role: Role,
    seat: Option<usize>,
    reply: oneshot::Sender<Joined>,
}

enum LobbyMsg {
    Join(Pending),
    Leave(u64),
    Shutdown,
}

enum SessionEvent {
    Submit { seat: usize, submit: TurnSubmit },
    Disconnected,
    Shutdown,
}

enum Seat {
    Remote { out: Outbox, role: Role },
    Agent,
}

enum Occupant {
    Remote { out: Outbox, role: Role, forfeited: bool },
    Local(Box<dyn Player>),
}

impl Occupant {
    fn outbox(&self) -> Option<&Outbox> {
        match self {
            Occupant::Remote { out, .. } => Some(out),
            Occupant::Local(_) => None,
        }
    }
}

/// Reads the next well-formed message, answering junk with errors.
async fn next_message(inbound: &mut UnboundedReceiver<String>, last_seq: &mut u64, out: &Outbox) -> Option<Payload> {
    loop {
        let line = inbound.recv().await?;
        if line.trim().is_empty() {
            continue;
        }
        match WireMessage::parse(&line) {
            Err(e) => out.error(ErrorCode::Malformed, e.to_string()),
            Ok(m) if m.seq <= *last_seq => out.error(ErrorCode::BadSeq, format!("seq {} after {}", m.seq, last_seq)),
            Ok(m) => {
                *last_seq = m.seq;
                return Some(m.payload);
            }
        }
    }
}

fn seat_for(shared: &Shared, wanted: &str) -> Option<usize> {
    let key = normalize_name(wanted);
    shared
        .participants
        .iter()
        .position(|p| p.as_str() == wanted || shared.world.name(p).map(|n| normalize_name(n) == key).unwrap_or(false))
}

async fn run_connection(shared: Arc<Shared>, lobby: UnboundedSender<LobbyMsg>, lines: Lines) {
    let Lines { mut inbound, outbound } = lines;
    let out = Outbox::new(outbound);
    let id = shared.connections.fetch_add(1, Ordering::SeqCst);
    let mut last_seq = 0;

    match next_message(&mut inbound, &mut last_seq, &out).await {
        Some(Payload::Hello { protocol, .. }) if compatible(&protocol) => {
            out.send(Payload::Hello { protocol: PROTOCOL_VERSION.to_owned(), name: Some("light-server".into()) });
        }
        Some(Payload::Hello { protocol, .. }) => {
            out.error(ErrorCode::VersionMismatch, format!("server speaks {PROTOCOL_VERSION}, client sent {protocol}"));
            return out.close();
        }
        Some(other) => {
            out.error(ErrorCode::ExpectedHello, format!("expected hello, got {}", other.kind()));
            return out.close();
        }
        None => return,
    }

    let Joined { events, seat } = 'join: loop {
        let (role, wanted) = match next_message(&mut inbound, &mut last_seq, &out).await {
            Some(Payload::Join { role, seat }) => (role, seat),
            Some(other) => {
                out.error(ErrorCode::ExpectedJoin, format!("expected join, got {}", other.kind()));
                continue;
            }
            None => return,
        };
        if shared.seats == SeatPolicy::AgentVsAgent {
            out.error(ErrorCode::UnexpectedMessage, "this server only hosts agent-vs-agent sessions");
            continue;
        }
        let seat = match wanted {
            Some(w) => match seat_for(&shared, &w) {
                Some(s) => Some(s),
                None => {
                    out.error(ErrorCode::UnknownSeat, format!("no participant `{w}`"));
                    continue;
                }
            },
            None => None,
        };
        let (reply, mut joined) = oneshot::channel();
        if lobby.send(LobbyMsg::Join(Pending { id, out: out.clone(), role, seat, reply })).is_err() {
            return out.close();
        }
        // keep reading while paired so a hang-up frees the lobby slot
        loop {
            tokio::select! {
                biased;
                j = &mut joined => match j {
                    Ok(j) => break 'join j,
                    Err(_) => return out.close(),
                },
                m = next_message(&mut inbound, &mut last_seq, &out) => match m {
                    Some(other) => out.error(ErrorCode::UnexpectedMessage, format!("{} before the session started", other.kind())),
                    None => {
                        let _ = lobby.send(LobbyMsg::Leave(id));
                        return;
                    }
                },
            }
        }
    };

    while let Some(m) = next_message(&mut inbound, &mut last_seq, &out).await {
        let sent = match m {
            Payload::TurnSubmit(submit) => events.send(SessionEvent::Submit { seat, submit }),
            other => {
                out.error(ErrorCode::UnexpectedMessage, format!("unexpected {} during a session", other.kind()));
                Ok(())
            }
        };
        if sent.is_err() {
            out.error(ErrorCode::SessionEnded, "the session has ended");
            return;
        }
    }
    let _ = events.send(SessionEvent::Disconnected);
}

async fn run_lobby(shared: Arc<Shared>, mut rx: UnboundedReceiver<LobbyMsg>) {
    let mut waiting: Vec<Pending> = Vec::new();
    while let Some(msg) = rx.recv().await {
        match msg {
            LobbyMsg::Shutdown => return,
            LobbyMsg::Leave(id) => waiting.retain(|p| p.id != id),
            LobbyMsg::Join(p) => match shared.seats {
                SeatPolicy::AgentVsAgent => {}
                SeatPolicy::HumanVsAgent => {
                    let mine = p.seat.unwrap_or(0);
                    let mut seats = [Seat::Agent, Seat::Agent];
                    seats[mine] = Seat::Remote { out: p.out, role: p.role };
                    start_session(&shared, seats, |events| {
                        let _ = p.reply.send(Joined { events: events.clone(), seat: mine });
                    });
                }
                SeatPolicy::HumanVsHuman => {
                    waiting.retain(|w| !w.reply.is_closed());
                    if waiting.is_empty() {
                        waiting.push(p);
                        continue;
                    }
                    let first = waiting.remove(0);
                    // the earlier arrival keeps its preference
                    let a = first.seat.or(p.seat.map(|s| 1 - s)).unwrap_or(0);
                    let b = 1 - a;
                    let mut seats = [Seat::Agent, Seat::Agent];
                    seats[a] = Seat::Remote { out: first.out, role: first.role };
                    seats[b] = Seat::Remote { out: p.out, role: p.role };
                    start_session(&shared, seats, |events| {
                        let _ = first.reply.send(Joined { events: events.clone(), seat: a });
                        let _ = p.reply.send(Joined { events: events.clone(), seat: b });
                    });
                }
            },
        }
    }
}

/// `seated` runs before the session sends anything, so connections know
/// their session by the time their first message arrives.
fn start_session(shared: &Arc<Shared>, seats: [Seat; 2], seated: impl FnOnce(&UnboundedSender<SessionEvent>)) {
    let n = shared.sessions.fetch_add(1, Ordering::SeqCst) as u64;
    let id = format!("{}-{n:04}", shared.prefix);
    let mut config = shared.session.clone();
    config.seed = config.seed.wrapping_add(n);
    let core = SessionCore::new(id, shared.world.clone(), shared.participants.clone(), config, shared.pool.clone())
        .expect("participants were checked at startup");
    let mut occupants = seats.map(|s| match s {
        Seat::Remote { out, role } => Occupant::Remote { out, role, forfeited: false },
        Seat::Agent => Occupant::Local(Box::new(ScriptedPlayer::default())),
    });
    for (i, o) in occupants.iter_mut().enumerate() {
        if let Occupant::Local(p) = o {
            *p = (shared.agent)(shared.session.seed.wrapping_add(2 * n + i as u64));
        }
    }
    let (tx, rx) = unbounded_channel();
    let mut live = shared.live.lock().expect("live list");
    live.retain(|s| !s.is_closed());
    live.push(tx.clone());
    drop(live);
    seated(&tx);
    tokio::spawn(run_session(shared.clone(), core, occupants, rx));
}

fn error_code(e: &SessionError) -> ErrorCode {
    match e {
        SessionError::OutOfTurn { .. } => ErrorCode::OutOfTurn,
        SessionError::SessionEnded => ErrorCode::SessionEnded,
        SessionError::NotStarted => ErrorCode::UnexpectedMessage,
        SessionError::MalformedMessage(_) => ErrorCode::Malformed,
        SessionError::ProtocolViolation(_) => ErrorCode::ProtocolViolation,
        SessionError::UnknownSeat(_) => ErrorCode::UnknownSeat,
    }
}

enum Flow {
    Waiting,
    Committed(TurnOutcome),
    End(EndReason),
}

struct Live {
    core: SessionCore,
    occupants: [Occupant; 2],
}

impl Live {
    /// Handles one event from a remote seat.
    fn event(&mut self, ev: SessionEvent) -> Flow {
        let (seat, submit) = match ev {
            SessionEvent::Shutdown => return Flow::End(EndReason::Shutdown),
            SessionEvent::Disconnected => return Flow::End(EndReason::Disconnect),
            SessionEvent::Submit { seat, submit } => (seat, submit),
        };
        let who = self.core.participants()[seat].clone();
        let speaking = self.core.next_speaker() == &who;
        let out = self.occupants[seat].outbox().expect("submissions come from remote seats").clone();
        match self.core.handle_turn(&who, &submit) {
            Ok(outcome) => {
                out.send(outcome.result_payload());
                if outcome.consumed {
                    Flow::Committed(outcome)
                } else {
                    Flow::Waiting
                }
            }
            Err(e @ SessionError::ProtocolViolation(_)) if speaking => {
                out.error(ErrorCode::ProtocolViolation, format!("{e}; the server plays this seat from now on"));
                if let Occupant::Remote { forfeited, .. } = &mut self.occupants[seat] {
                    *forfeited = true;
                }
                self.fallback(&who)
            }
            Err(e) => {
                out.error(error_code(&e), e.to_string());
                Flow::Waiting
            }
        }
    }

    fn fallback(&mut self, who: &EntityId) -> Flow {
        match self.core.fallback(who) {
            Ok(o) => Flow::Committed(o),
            Err(_) => Flow::End(EndReason::Completed),
        }
    }

    fn broadcast(&self, payload: &Payload) {
        for o in &self.occupants {
            if let Some(out) = o.outbox() {
                out.send(payload.clone());
            }
        }
    }
}

enum Mover {
    Local,
    Forfeited,
    Remote(Outbox, Role),
}

async fn run_session(
    shared: Arc<Shared>,
    core: SessionCore,
    occupants: [Occupant; 2],
    mut rx: UnboundedReceiver<SessionEvent>,
) {
    let mut live = Live { core, occupants };
    let parts = live.core.participants().clone();
    live.core.start();
    for (i, o) in live.occupants.iter().enumerate() {
        if let Occupant::Remote { out, role, .. } = o {
            out.send(Payload::SeatAssigned {
                session: live.core.id().to_owned(),
                token: format!("{:016x}", rand::random::<u64>()),
                seat: parts[i].clone(),
                character: live.core.graph().name(&parts[i]).unwrap_or_default().to_owned(),
                partner: parts[1 - i].clone(),
                role: *role,
            });
            out.send(live.core.snapshot(&parts[i]).expect("seated"));
        }
    }

    let reason = loop {
        if let SessionState::Ended(r) = live.core.state() {
            break r;
        }
        let speaker = live.core.next_speaker().clone();
        let i = parts.iter().position(|p| p == &speaker).expect("speaker is seated");
        let mover = match &live.occupants[i] {
            Occupant::Local(_) => Mover::Local,
            Occupant::Remote { forfeited: true, .. } => Mover::Forfeited,
            Occupant::Remote { out, role, .. } => Mover::Remote(out.clone(), *role),
        };
        let mut flow = Flow::Waiting;
        match mover {
            Mover::Local => {
                // whatever the other seat sent meanwhile is out of turn
                while let Ok(ev) = rx.try_recv() {
                    if let Flow::End(r) = live.event(ev) {
                        flow = Flow::End(r);
                    }
                }
                if matches!(flow, Flow::Waiting) {
                    let view = live.core.turn_view(Role::Agent);
                    let Occupant::Local(player) = &mut live.occupants[i] else { unreachable!() };
                    let input = player.choose(&view);
                    flow = match live.core.handle_local(&speaker, input) {
                        Ok(o) => Flow::Committed(o),
                        Err(_) => Flow::End(EndReason::Completed),
                    };
                }
                tokio::task::yield_now().await;
            }
            Mover::Forfeited => flow = live.fallback(&speaker),
            Mover::Remote(out, role) => {
                let view = live.core.turn_view(role);
                let timeout = match role {
                    Role::Human => shared.human_timeout,
                    Role::Agent => shared.agent_timeout,
                };
                out.send(Payload::YourTurn {
                    turn: live.core.turn(),
                    context: view.context,
                    valid_actions: view.valid_actions,
                    candidates: view.candidates,
                    timeout_ms: timeout.map(|t| t.as_millis() as u64),
                });
                let deadline = timeout.map(|t| Instant::now() + t);
                while matches!(flow, Flow::Waiting) {
                    let ev = match deadline {
                        Some(d) => match tokio::time::timeout_at(d, rx.recv()).await {
                            Ok(ev) => ev,
                            Err(_) => {
                                out.error(ErrorCode::Timeout, "turn timed out; the server moved for you");
                                flow = live.fallback(&speaker);
                                break;
                            }
                        },
                        None => rx.recv().await,
                    };
                    flow = match ev {
                        Some(ev) => live.event(ev),
                        None => Flow::End(EndReason::Shutdown),
                    };
                }
            }
        }
        match flow {
            Flow::Committed(outcome) => {
                if let Some(obs) = outcome.observation {
                    live.broadcast(&Payload::Observation(obs));
                }
            }
            Flow::End(r) => live.core.end(r),
            Flow::Waiting => unreachable!("a turn ends with a decision"),
        }
    };

    let id = live.core.id().to_owned();
    let log = live.core.log().clone();
    let log_path = write_log(&shared.log_dir, &id, &log);
    live.broadcast(&Payload::EpisodeEnd {
        reason,
        turns: live.core.turn(),
        hash: live.core.hash(),
        log: log_path.as_ref().map(|p| p.display().to_string()),
    });
    for o in &live.occupants {
        if let Some(out) = o.outbox() {
            out.close();
        }
    }
    let _ = shared.finished.send(SessionSummary {
        id,
        reason,
        turns: live.core.turn(),
        hash: live.core.hash(),
        log_path,
        log,
    });
}

/// `{id}.jsonl` next to the `{id}.world.json` it references.
fn write_log(dir: &Path, id: &str, log: &EpisodeLog) -> Option<PathBuf> {
    let world_name = format!("{id}.world.json");
    let path = dir.join(format!("{id}.jsonl"));
    std::fs::write(dir.join(&world_name), log.world.to_canonical_json()).ok()?;
    std::fs::write(&path, EpisodeFile::from_log(log, &world_name).to_jsonl()).ok()?;
    Some(path)
}
