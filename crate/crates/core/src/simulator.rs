//! Deterministic in-process session execution.
//!
//! Every role runs the state machine of its local type. With routed
//! delivery, client-to-client traffic travels over the sender's link to the
//! router, which forwards it by inspecting the recipient field. Endpoints
//! demultiplex incoming envelopes by their original sender. A seeded
//! scheduler picks one enabled event per step.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::efsm::{build_efsm, Direction, Efsm};
use crate::encoding::encode_global;
use crate::projection::project;
use crate::semantics::{config_steps, project_configuration, Configuration};
use crate::types::{ActionKind, GlobalType, MsgLabel, Role};
use crate::wellformed::check_wf_routed;

/// Upper bound on configurations explored by [`validate_log`].
pub const VALIDATION_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnvelopeKind {
    Data,
    Cancel(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub from: Role,
    pub to: Role,
    pub msg: MsgLabel,
    pub payload: Vec<u8>,
    pub kind: EnvelopeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delivery {
    /// Client-to-client messages are forwarded by the router.
    Routed,
    /// Every message goes straight to its recipient.
    Direct,
}

impl fmt::Display for Delivery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Delivery::Routed => "routed",
            Delivery::Direct => "direct",
        })
    }
}

impl FromStr for Delivery {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "routed" => Ok(Delivery::Routed),
            "direct" => Ok(Delivery::Direct),
            other => Err(format!("unknown delivery mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheduler {
    RoundRobin,
    SeededRandom,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    pub scheduler: Scheduler,
    pub max_steps: usize,
    /// Role that cancels the session, and the scheduler step at which it
    /// does so.
    pub cancel: Option<(Role, usize)>,
    pub delivery: Delivery,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            scheduler: Scheduler::SeededRandom,
            max_steps: 100_000,
            cancel: None,
            delivery: Delivery::Routed,
        }
    }
}

/// How a role resolves a selection with more than one label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChoicePolicy {
    /// Labels taken in order, one per selection.
    Fixed(Vec<String>),
    /// Cycle through the offered labels.
    RoundRobin,
    /// Uniform choice from a generator seeded by the session seed and role.
    SeededRandom,
    /// The first label for the first `n - 1` selections, the last label
    /// afterwards.
    Rounds(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogKind {
    Data,
    Cancel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub step: usize,
    pub from: Role,
    pub to: Role,
    pub kind: LogKind,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CancelRecord {
    pub initiator: Role,
    pub step: usize,
    pub notified: Vec<Role>,
    pub envelopes: Vec<Envelope>,
}

/// One communication action as seen by an endpoint.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Observation {
    pub peer: Role,
    pub send: bool,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionLog {
    pub delivery: Delivery,
    pub entries: Vec<LogEntry>,
    pub cancellation: Option<CancelRecord>,
    pub completed: bool,
    pub observations: BTreeMap<Role, Vec<Observation>>,
}

impl SessionLog {
    pub fn data_entries(&self) -> impl Iterator<Item = &LogEntry> {
        self.entries.iter().filter(|e| e.kind == LogKind::Data)
    }

    /// Line-delimited records `step,from,to,kind,label` after a
    /// `# delivery=` header.
    pub fn to_text(&self) -> String {
        let mut out = format!("# delivery={}\n# step,from,to,kind,label\n", self.delivery);
        for e in &self.entries {
            let kind = match e.kind {
                LogKind::Data => "data",
                LogKind::Cancel => "cancel",
            };
            let _ = writeln!(out, "{},{},{},{kind},{}", e.step, e.from, e.to, e.label);
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation precondition failed: {0}")]
    Precondition(String),
    #[error("{role} attempted `{action}`, which its state machine does not enable in state {state}")]
    ConformanceViolation { role: Role, state: usize, action: String },
    #[error("session exceeded {0} steps")]
    MaxStepsExceeded(usize),
    #[error("session is stuck at step {step} with no enabled event")]
    Stuck { step: usize },
    #[error("choice script of {role} is exhausted")]
    ScriptExhausted { role: Role },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LogError {
    #[error("log line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("log entry {index} (`{entry}`) does not extend any trace of the protocol")]
    Violation { index: usize, entry: String },
    #[error("log validation explored more than {0} states")]
    Budget(usize),
    #[error("cannot validate against this protocol: {0}")]
    Precondition(String),
}

/// Parse the text form written by [`SessionLog::to_text`]. Only delivery mode
/// and entries are recovered.
pub fn parse_log(text: &str) -> Result<SessionLog, LogError> {
    let mut delivery = Delivery::Routed;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |message: String| LogError::Parse { line: i + 1, message };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(mode) = comment.trim().strip_prefix("delivery=") {
                delivery = mode.parse().map_err(err)?;
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let [step, from, to, kind, label] = fields.as_slice() else {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        };
        let step = step.parse().map_err(|_| err(format!("bad step `{step}`")))?;
        let from = Role::new(*from).map_err(|e| err(e.to_string()))?;
        let to = Role::new(*to).map_err(|e| err(e.to_string()))?;
        let kind = match *kind {
            "data" => LogKind::Data,
            "cancel" => LogKind::Cancel,
            other => return Err(err(format!("unknown kind `{other}`"))),
        };
        entries.push(LogEntry { step, from, to, kind, label: label.to_string() });
    }
    Ok(SessionLog { delivery, entries, cancellation: None, completed: false, observations: BTreeMap::new() })
}

fn role_seed(seed: u64, role: &Role) -> u64 {
    // FNV-1a over the role name, mixed with the session seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in role.as_str().bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed
}

struct Chooser {
    policy: ChoicePolicy,
    rng: ChaCha8Rng,
    made: usize,
}

impl Chooser {
    fn choose(&mut self, role: &Role, labels: &[&str]) -> Result<usize, SimError> {
        if labels.len() == 1 {
            return Ok(0);
        }
        let made = self.made;
        self.made += 1;
        match &self.policy {
            ChoicePolicy::Fixed(script) => {
                let want = script.get(made).ok_or_else(|| SimError::ScriptExhausted { role: role.clone() })?;
                labels.iter().position(|l| l == want).ok_or_else(|| SimError::ConformanceViolation {
                    role: role.clone(),
                    state: 0,
                    action: format!("select {want}"),
                })
            }
            ChoicePolicy::RoundRobin => Ok(made % labels.len()),
            ChoicePolicy::SeededRandom => Ok(self.rng.random_range(0..labels.len())),
            ChoicePolicy::Rounds(n) => Ok(if made + 1 < *n { 0 } else { labels.len() - 1 }),
        }
    }
}

struct Endpoint {
    efsm: Efsm,
    state: usize,
    chooser: Chooser,
    /// Delivered envelopes keyed by original sender.
    inbox: BTreeMap<Role, VecDeque<Envelope>>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Act(Role),
    Deliver(Role, Role),
}

struct Session<'a> {
    router: &'a Role,
    delivery: Delivery,
    endpoints: BTreeMap<Role, Endpoint>,
    links: BTreeMap<(Role, Role), VecDeque<Envelope>>,
    payload_counters: BTreeMap<String, u64>,
    seed: u64,
    log: SessionLog,
}

impl Session<'_> {
    fn payload(&mut self, msg: &MsgLabel) -> Vec<u8> {
        let mut bytes = Vec::new();
        for sort in &msg.payload {
            let n = self.payload_counters.entry(sort.clone()).or_insert(self.seed);
            bytes.extend_from_slice(format!("{sort}:{n};").as_bytes());
            *n = n.wrapping_add(1);
        }
        bytes
    }

    fn enabled(&self) -> Vec<Event> {
        let mut out = Vec::new();
        for (r, ep) in &self.endpoints {
            let mut ts = ep.efsm.outgoing(ep.state).peekable();
            let Some(first) = ts.peek() else { continue };
            let ready = match first.dir {
                Direction::Send => true,
                Direction::Receive => ep.inbox.get(&first.peer).is_some_and(|q| !q.is_empty()),
            };
            if ready {
                out.push(Event::Act(r.clone()));
            }
        }
        for ((a, b), q) in &self.links {
            if !q.is_empty() {
                out.push(Event::Deliver(a.clone(), b.clone()));
            }
        }
        out
    }

    fn finished(&self) -> bool {
        self.endpoints.values().all(|ep| ep.efsm.outgoing(ep.state).next().is_none())
            && self.links.values().all(VecDeque::is_empty)
            && self.endpoints.values().all(|ep| ep.inbox.values().all(VecDeque::is_empty))
    }

    fn link_for(&self, from: &Role, to: &Role) -> (Role, Role) {
        if self.delivery == Delivery::Routed && from != self.router && to != self.router {
            (from.clone(), self.router.clone())
        } else {
            (from.clone(), to.clone())
        }
    }

    fn act(&mut self, role: &Role, step: usize) -> Result<(), SimError> {
        let ep = self.endpoints.get_mut(role).expect("endpoint exists");
        let ts: Vec<_> = ep.efsm.outgoing(ep.state).cloned().collect();
        match ts[0].dir {
            Direction::Send => {
                let labels: Vec<&str> = ts.iter().map(|t| t.label.name.as_str()).collect();
                let pick = ep.chooser.choose(role, &labels)?;
                let t = ts[pick].clone();
                ep.state = t.to;
                self.log.observations.entry(role.clone()).or_default().push(Observation {
                    peer: t.peer.clone(),
                    send: true,
                    label: t.label.name.clone(),
                });
                let payload = self.payload(&t.label);
                let env = Envelope {
                    from: role.clone(),
                    to: t.peer.clone(),
                    msg: t.label.clone(),
                    payload,
                    kind: EnvelopeKind::Data,
                };
                let link = self.link_for(role, &t.peer);
                self.links.entry(link).or_default().push_back(env);
            }
            Direction::Receive => {
                let peer = ts[0].peer.clone();
                let env = ep.inbox.get_mut(&peer).and_then(VecDeque::pop_front).expect("receive is enabled");
                let Some(t) = ts.iter().find(|t| t.label == env.msg) else {
                    return Err(SimError::ConformanceViolation {
                        role: role.clone(),
                        state: ep.state,
                        action: format!("{peer}?{}", env.msg.name),
                    });
                };
                ep.state = t.to;
                self.log.observations.entry(role.clone()).or_default().push(Observation {
                    peer: peer.clone(),
                    send: false,
                    label: env.msg.name.clone(),
                });
                self.log.entries.push(LogEntry {
                    step,
                    from: env.from,
                    to: env.to,
                    kind: LogKind::Data,
                    label: env.msg.name,
                });
            }
        }
        Ok(())
    }

    fn deliver(&mut self, a: &Role, b: &Role) {
        let env = self.links.get_mut(&(a.clone(), b.clone())).and_then(VecDeque::pop_front).expect("link is busy");
        if b == self.router && env.to != *self.router {
            debug!("router {} forwards {} from {} to {}", self.router, env.msg.name, env.from, env.to);
            let link = (self.router.clone(), env.to.clone());
            self.links.entry(link).or_default().push_back(env);
            return;
        }
        let ep = self.endpoints.get_mut(b).expect("recipient exists");
        ep.inbox.entry(env.from.clone()).or_default().push_back(env);
    }

    fn cancel(&mut self, initiator: &Role, step: usize) {
        let reason = format!("cancelled by {initiator}");
        let others: Vec<Role> = self.endpoints.keys().filter(|r| *r != initiator).cloned().collect();
        let envelope = |from: &Role, to: &Role| Envelope {
            from: from.clone(),
            to: to.clone(),
            msg: MsgLabel::new("Cancel"),
            payload: Vec::new(),
            kind: EnvelopeKind::Cancel(reason.clone()),
        };
        let mut sent = Vec::new();
        if self.delivery == Delivery::Routed && initiator != self.router {
            sent.push(envelope(initiator, self.router));
            for r in others.iter().filter(|r| *r != self.router) {
                sent.push(envelope(self.router, r));
            }
        } else {
            for r in &others {
                sent.push(envelope(initiator, r));
            }
        }
        for env in &sent {
            self.log.entries.push(LogEntry {
                step,
                from: env.from.clone(),
                to: env.to.clone(),
                kind: LogKind::Cancel,
                label: env.msg.name.clone(),
            });
        }
        for q in self.links.values_mut() {
            q.clear();
        }
        self.log.cancellation =
            Some(CancelRecord { initiator: initiator.clone(), step, notified: others, envelopes: sent });
    }
}

/// Split `g` into its direct form and its form routed through `router`.
fn direct_and_routed(g: &GlobalType, router: &Role) -> Result<(GlobalType, GlobalType), String> {
    if g.is_canonical_mpst() {
        let enc = encode_global(g, router).map_err(|e| e.to_string())?;
        Ok((g.clone(), enc))
    } else {
        Ok((g.strip_routing(), g.clone()))
    }
}

/// Run one session of `g`. With routed delivery the session follows the
/// encoding of `g` through `router`; with direct delivery it follows `g`
/// itself. Roles without a script choose with [`ChoicePolicy::SeededRandom`].
pub fn run_session(
    g: &GlobalType,
    router: &Role,
    scripts: &BTreeMap<Role, ChoicePolicy>,
    cfg: &SimConfig,
) -> Result<SessionLog, SimError> {
    if cfg.max_steps == 0 {
        return Err(SimError::Precondition("max_steps must be positive".to_string()));
    }
    let (direct, routed) = direct_and_routed(g, router).map_err(SimError::Precondition)?;
    let report = check_wf_routed(&routed, router);
    if !report.is_ok() && !routed.participants().is_empty() {
        return Err(SimError::Precondition(report.to_string()));
    }
    let mut endpoints = BTreeMap::new();
    for r in direct.participants() {
        let source = if cfg.delivery == Delivery::Routed && &r != router { &routed } else { &direct };
        let t = project(source, &r).map_err(|e| SimError::Precondition(e.to_string()))?;
        let efsm = build_efsm(&t, &r);
        let policy = scripts.get(&r).cloned().unwrap_or(ChoicePolicy::SeededRandom);
        let chooser = Chooser { policy, rng: ChaCha8Rng::seed_from_u64(role_seed(cfg.seed, &r)), made: 0 };
        let state = efsm.initial;
        endpoints.insert(r, Endpoint { efsm, state, chooser, inbox: BTreeMap::new() });
    }
    if let Some((initiator, _)) = &cfg.cancel {
        if !endpoints.contains_key(initiator) {
            return Err(SimError::Precondition(format!("cancelling role {initiator} is not a participant")));
        }
    }
    let mut session = Session {
        router,
        delivery: cfg.delivery,
        endpoints,
        links: BTreeMap::new(),
        payload_counters: BTreeMap::new(),
        seed: cfg.seed,
        log: SessionLog {
            delivery: cfg.delivery,
            entries: Vec::new(),
            cancellation: None,
            completed: false,
            observations: BTreeMap::new(),
        },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut step = 0;
    loop {
        if session.finished() {
            session.log.completed = true;
            return Ok(session.log);
        }
        if let Some((initiator, at)) = &cfg.cancel {
            if step >= *at {
                session.cancel(initiator, step);
                return Ok(session.log);
            }
        }
        if step >= cfg.max_steps {
            return Err(SimError::MaxStepsExceeded(cfg.max_steps));
        }
        let enabled = session.enabled();
        if enabled.is_empty() {
            return Err(SimError::Stuck { step });
        }
        let pick = match cfg.scheduler {
            Scheduler::RoundRobin => step % enabled.len(),
            Scheduler::SeededRandom => rng.random_range(0..enabled.len()),
        };
        match &enabled[pick] {
            Event::Act(r) => session.act(r, step)?,
            Event::Deliver(a, b) => session.deliver(a, b),
        }
        step += 1;
    }
}

/// Run `g` once with direct delivery and once routed through `router`, and
/// compare what every other role observes. Returns the first role whose
/// observations differ.
pub fn check_router_transparency(
    g: &GlobalType,
    router: &Role,
    scripts: &BTreeMap<Role, ChoicePolicy>,
    cfg: &SimConfig,
) -> Result<Option<Role>, SimError> {
    let direct = run_session(g, router, scripts, &SimConfig { delivery: Delivery::Direct, ..cfg.clone() })?;
    let routed = run_session(g, router, scripts, &SimConfig { delivery: Delivery::Routed, ..cfg.clone() })?;
    let roles = g.participants();
    Ok(roles.into_iter().filter(|r| r != router).find(|r| direct.observations.get(r) != routed.observations.get(r)))
}

fn entry_text(e: &LogEntry) -> String {
    format!("{},{},{},data,{}", e.step, e.from, e.to, e.label)
}

/// Check that the data entries of `log`, up to the first cancellation, are
/// the receive actions of some configuration trace of `g` (encoded through
/// `router` for routed logs).
pub fn validate_log(g: &GlobalType, router: &Role, log: &SessionLog) -> Result<(), LogError> {
    let (direct, routed) = direct_and_routed(g, router).map_err(LogError::Precondition)?;
    let target = match log.delivery {
        Delivery::Routed => routed,
        Delivery::Direct => direct,
    };
    let entries: Vec<&LogEntry> = log.entries.iter().take_while(|e| e.kind == LogKind::Data).collect();
    let start = project_configuration(&target).map_err(|e| LogError::Precondition(e.to_string()))?;

    let mut seen: HashSet<(Configuration, usize)> = HashSet::new();
    let mut stack: Vec<(Configuration, usize)> = vec![(start.canonical(), 0)];
    let mut furthest = 0;
    while let Some((c, idx)) = stack.pop() {
        if idx == entries.len() {
            return Ok(());
        }
        if !seen.insert((c.clone(), idx)) {
            continue;
        }
        if seen.len() > VALIDATION_STATE_CAP {
            return Err(LogError::Budget(VALIDATION_STATE_CAP));
        }
        furthest = furthest.max(idx);
        let pending: usize = c.buffers.values().map(VecDeque::len).sum();
        let remaining = entries.len() - idx;
        let want = entries[idx];
        for (l, next) in config_steps(&c) {
            match l.kind {
                ActionKind::DirectSend | ActionKind::RoutedSend => {
                    if pending < remaining {
                        stack.push((next, idx));
                    }
                }
                ActionKind::DirectRecv | ActionKind::RoutedRecv => {
                    if l.from == want.from && l.to == want.to && l.msg.name == want.label {
                        stack.push((next, idx + 1));
                    }
                }
            }
        }
    }
    Err(LogError::Violation { index: furthest, entry: entry_text(entries[furthest]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Arm;

    fn r(s: &'static str) -> Role {
        Role::from_static(s)
    }

    fn one(from: &'static str, to: &'static str, l: &str, k: GlobalType) -> GlobalType {
        GlobalType::comm(r(from), r(to), vec![Arm::new(MsgLabel::new(l), k)])
    }

    #[test]
    fn empty_protocol_gives_empty_log() {
        let log = run_session(&GlobalType::End, &r("S"), &BTreeMap::new(), &SimConfig::default()).unwrap();
        assert!(log.completed);
        assert!(log.entries.is_empty());
        assert!(validate_log(&GlobalType::End, &r("S"), &log).is_ok());
    }

    #[test]
    fn forwarded_message_keeps_original_sender() {
        let g = one("A", "B", "M", one("B", "S", "N", GlobalType::End));
        let log = run_session(&g, &r("S"), &BTreeMap::new(), &SimConfig::default()).unwrap();
        assert!(log.completed);
        let lines: Vec<String> = log.entries.iter().map(|e| format!("{}->{}:{}", e.from, e.to, e.label)).collect();
        assert_eq!(lines, vec!["A->B:M", "B->S:N"]);
        validate_log(&g, &r("S"), &log).unwrap();
    }

    #[test]
    fn log_text_round_trips() {
        let g = one("A", "S", "M", one("S", "B", "N", GlobalType::End));
        let log = run_session(&g, &r("S"), &BTreeMap::new(), &SimConfig::default()).unwrap();
        let parsed = parse_log(&log.to_text()).unwrap();
        assert_eq!(parsed.entries, log.entries);
        assert_eq!(parsed.delivery, Delivery::Routed);
    }

    #[test]
    fn parse_errors_carry_line() {
        assert_eq!(
            parse_log("# delivery=routed\n1,A,B,data\n"),
            Err(LogError::Parse { line: 2, message: "expected 5 fields, found 4".to_string() })
        );
        assert!(matches!(parse_log("1,A,B,spam,M\n"), Err(LogError::Parse { line: 1, .. })));
    }

    #[test]
    fn fixed_script_exhaustion_is_reported() {
        let g = GlobalType::comm(
            r("A"),
            r("S"),
            vec![Arm::new(MsgLabel::new("X"), GlobalType::End), Arm::new(MsgLabel::new("Y"), GlobalType::End)],
        );
        let scripts = BTreeMap::from([(r("A"), ChoicePolicy::Fixed(vec![]))]);
        assert!(matches!(
            run_session(&g, &r("S"), &scripts, &SimConfig::default()),
            Err(SimError::ScriptExhausted { .. })
        ));
    }
}
