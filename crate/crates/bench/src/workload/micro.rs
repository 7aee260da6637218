//! Ping-pong and chameneos, run on simple actors or on join actors whose
//! patterns each take a single message.

use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use joinmatch::actor::{spawn_actor, spawn_simple, ActorRef, CompletionHandle};
use joinmatch::engine::MatcherFactory;
use joinmatch::model::{JoinPattern, Message, ResultControl, SlotDescriptor, Tag, Value};

use super::{remaining, Trial, TrialError};
use crate::config::{ActorMode, MicroBench};

fn await_all<T>(handles: Vec<CompletionHandle<T>>, deadline: Instant) -> Result<Vec<T>, TrialError> {
    handles
        .into_iter()
        .map(|h| match h.wait_timeout(remaining(deadline)) {
            None => Err(TrialError::Timeout),
            Some(r) => Ok(r?),
        })
        .collect()
}

#[derive(Debug)]
pub enum Ball {
    /// Introduces the peer.
    Peer(ActorRef<Ball>),
    Ping(u64),
    Pong(u64),
}

impl Message for Ball {
    fn tag(&self) -> Tag {
        match self {
            Ball::Peer(_) => Tag(0),
            Ball::Ping(_) => Tag(1),
            Ball::Pong(_) => Tag(2),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Pinger,
    Ponger,
}

/// What one side does with a message: the reply to its peer and whether it is done.
fn rally(side: Side, n: u64, msg: &Ball) -> (Option<Ball>, bool) {
    match (side, msg) {
        (Side::Pinger, Ball::Peer(_)) => (Some(Ball::Ping(1)), false),
        (Side::Pinger, Ball::Pong(k)) if *k >= n => (None, true),
        (Side::Pinger, Ball::Pong(k)) => (Some(Ball::Ping(k + 1)), false),
        (Side::Ponger, Ball::Ping(k)) => (Some(Ball::Pong(*k)), *k >= n),
        _ => (None, false),
    }
}

fn spawn_player(side: Side, n: u64, mode: ActorMode, factory: &MatcherFactory) -> Result<(CompletionHandle<u64>, ActorRef<Ball>), TrialError> {
    match mode {
        ActorMode::Simple => {
            let mut peer: Option<ActorRef<Ball>> = None;
            Ok(spawn_simple(move |msg: Ball, _: &ActorRef<Ball>| {
                if let Ball::Peer(p) = &msg {
                    peer = Some(p.clone());
                }
                let (reply, done) = rally(side, n, &msg);
                if let (Some(r), Some(p)) = (reply, &peer) {
                    p.send(r);
                }
                done.then_some(ResultControl::Stop(n))
            }))
        }
        ActorMode::Join(_) => {
            let peer: Arc<OnceLock<ActorRef<Ball>>> = Arc::default();
            let set_peer = peer.clone();
            let intro = JoinPattern::builder()
                .slot(SlotDescriptor::new(Tag(0)).bind(&["peer"], |m: &Ball, out| {
                    if let Ball::Peer(p) = m {
                        out.push(Value::any(p.clone()));
                    }
                }))
                .rhs(move |env, _| {
                    let p = env.get("peer").and_then(|v| v.downcast_ref::<ActorRef<Ball>>()).expect("peer");
                    let _ = set_peer.set(p.clone());
                    if let (Some(r), _) = rally(side, n, &Ball::Peer(p.clone())) {
                        p.send(r);
                    }
                    ResultControl::Continue
                });
            let (tag, wrap): (Tag, fn(u64) -> Ball) = match side {
                Side::Pinger => (Tag(2), Ball::Pong),
                Side::Ponger => (Tag(1), Ball::Ping),
            };
            let ball = JoinPattern::builder()
                .slot(SlotDescriptor::new(tag).bind(&["k"], |m: &Ball, out| {
                    if let Ball::Ping(k) | Ball::Pong(k) = m {
                        out.push(Value::Int(*k as i64));
                    }
                }))
                .rhs(move |env, _| {
                    let (reply, done) = rally(side, n, &wrap(env.int("k") as u64));
                    if let Some(r) = reply {
                        peer.get().expect("peer introduced first").send(r);
                    }
                    if done {
                        ResultControl::Stop(n)
                    } else {
                        ResultControl::Continue
                    }
                });
            let patterns = [intro, ball].into_iter().map(|b| b.build().expect("ping-pong pattern")).collect();
            Ok(spawn_actor(patterns, factory)?)
        }
    }
}

/// `n` round trips between two actors. Returns each side's exchange count.
pub fn ping_pong(n: u64, mode: ActorMode, factory: &MatcherFactory, timeout: Duration) -> Result<(Trial, [u64; 2]), TrialError> {
    let (pinger_done, pinger) = spawn_player(Side::Pinger, n, mode, factory)?;
    let (ponger_done, ponger) = spawn_player(Side::Ponger, n, mode, factory)?;
    let start = Instant::now();
    ponger.send(Ball::Peer(pinger.clone()));
    pinger.send(Ball::Peer(ponger));
    let counts = await_all(vec![pinger_done, ponger_done], start + timeout)?;
    let trial = Trial {
        elapsed: start.elapsed(),
        matches: n,
    };
    Ok((trial, [counts[0], counts[1]]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Color {
    Blue,
    Red,
    Yellow,
}

impl Color {
    const ALL: [Color; 3] = [Color::Blue, Color::Red, Color::Yellow];

    /// Both keep their color when equal, otherwise both take the third one.
    pub fn complement(self, other: Color) -> Color {
        if self == other {
            return self;
        }
        Color::ALL.into_iter().find(|c| *c != self && *c != other).expect("three colors")
    }

    fn from_code(c: i64) -> Color {
        Color::ALL[c as usize]
    }
}

#[derive(Debug)]
pub enum BrokerMsg {
    Creatures(Vec<ActorRef<CreatureMsg>>),
    Meet { id: usize, color: Color },
}

impl Message for BrokerMsg {
    fn tag(&self) -> Tag {
        match self {
            BrokerMsg::Creatures(_) => Tag(0),
            BrokerMsg::Meet { .. } => Tag(1),
        }
    }
}

#[derive(Debug)]
pub enum CreatureMsg {
    Become(Color),
    Done,
}

impl Message for CreatureMsg {
    fn tag(&self) -> Tag {
        match self {
            CreatureMsg::Become(_) => Tag(0),
            CreatureMsg::Done => Tag(1),
        }
    }
}

/// Pairs meeting requests; after `n` meetings tells every creature to stop.
#[derive(Default)]
struct Broker {
    creatures: Vec<ActorRef<CreatureMsg>>,
    waiting: Option<(usize, Color)>,
    meetings: u64,
}

impl Broker {
    /// Returns the meeting count once the last meeting happened.
    fn meet(&mut self, id: usize, color: Color, n: u64) -> Option<u64> {
        let Some((other, other_color)) = self.waiting.take() else {
            self.waiting = Some((id, color));
            return None;
        };
        let c = color.complement(other_color);
        self.creatures[id].send(CreatureMsg::Become(c));
        self.creatures[other].send(CreatureMsg::Become(c));
        self.meetings += 1;
        if self.meetings < n {
            return None;
        }
        for cr in &self.creatures {
            cr.send(CreatureMsg::Done);
        }
        Some(self.meetings)
    }
}

fn spawn_broker(n: u64, mode: ActorMode, factory: &MatcherFactory) -> Result<(CompletionHandle<u64>, ActorRef<BrokerMsg>), TrialError> {
    match mode {
        ActorMode::Simple => {
            let mut broker = Broker::default();
            Ok(spawn_simple(move |msg: BrokerMsg, _: &ActorRef<BrokerMsg>| match msg {
                BrokerMsg::Creatures(c) => {
                    broker.creatures = c;
                    None
                }
                BrokerMsg::Meet { id, color } => broker.meet(id, color, n).map(ResultControl::Stop),
            }))
        }
        ActorMode::Join(_) => {
            let state = Arc::new(Mutex::new(Broker::default()));
            let init_state = state.clone();
            let init = JoinPattern::builder()
                .slot(SlotDescriptor::new(Tag(0)).bind(&["creatures"], |m: &BrokerMsg, out| {
                    if let BrokerMsg::Creatures(c) = m {
                        out.push(Value::any(c.clone()));
                    }
                }))
                .rhs(move |env, _| {
                    let c = env.get("creatures").and_then(|v| v.downcast_ref::<Vec<ActorRef<CreatureMsg>>>());
                    init_state.lock().unwrap().creatures = c.expect("creature list").clone();
                    ResultControl::Continue
                });
            let meet = JoinPattern::builder()
                .slot(SlotDescriptor::new(Tag(1)).bind(&["id", "color"], |m: &BrokerMsg, out| {
                    if let BrokerMsg::Meet { id, color } = m {
                        out.push(Value::Int(*id as i64));
                        out.push(Value::Int(*color as i64));
                    }
                }))
                .rhs(move |env, _| {
                    let color = Color::from_code(env.int("color"));
                    match state.lock().unwrap().meet(env.int("id") as usize, color, n) {
                        Some(m) => ResultControl::Stop(m),
                        None => ResultControl::Continue,
                    }
                });
            let patterns = [init, meet].into_iter().map(|b| b.build().expect("broker pattern")).collect();
            Ok(spawn_actor(patterns, factory)?)
        }
    }
}

/// A creature asks the broker for a meeting each time it changes color and
/// stops with its meeting count when told to.
fn spawn_creature(id: usize, broker: ActorRef<BrokerMsg>, mode: ActorMode, factory: &MatcherFactory) -> Result<(CompletionHandle<u64>, ActorRef<CreatureMsg>), TrialError> {
    let mut changes = 0u64;
    let mut on = move |msg: &CreatureMsg| -> Option<ResultControl<u64>> {
        match msg {
            CreatureMsg::Become(color) => {
                changes += 1;
                broker.send(BrokerMsg::Meet { id, color: *color });
                None
            }
            // The first Become is the starting color, not a meeting.
            CreatureMsg::Done => Some(ResultControl::Stop(changes.saturating_sub(1))),
        }
    };
    match mode {
        ActorMode::Simple => Ok(spawn_simple(move |msg: CreatureMsg, _: &ActorRef<CreatureMsg>| on(&msg))),
        ActorMode::Join(_) => {
            let on = Arc::new(Mutex::new(on));
            let on_done = on.clone();
            let become_ = JoinPattern::builder()
                .slot(SlotDescriptor::new(Tag(0)).bind(&["color"], |m: &CreatureMsg, out| {
                    if let CreatureMsg::Become(c) = m {
                        out.push(Value::Int(*c as i64));
                    }
                }))
                .rhs(move |env, _| {
                    let msg = CreatureMsg::Become(Color::from_code(env.int("color")));
                    (on.lock().unwrap())(&msg).unwrap_or(ResultControl::Continue)
                });
            let done = JoinPattern::builder()
                .slot(SlotDescriptor::new(Tag(1)))
                .rhs(move |_, _| (on_done.lock().unwrap())(&CreatureMsg::Done).unwrap_or(ResultControl::Continue));
            let patterns = [become_, done].into_iter().map(|b| b.build().expect("creature pattern")).collect();
            Ok(spawn_actor(patterns, factory)?)
        }
    }
}

pub const CREATURES: usize = 4;

/// `n` meetings among four creatures. Returns the broker's meeting count and the
/// sum of the creatures' own counts (two per meeting).
pub fn chameneos(n: u64, mode: ActorMode, factory: &MatcherFactory, timeout: Duration) -> Result<(Trial, u64, u64), TrialError> {
    let (broker_done, broker) = spawn_broker(n, mode, factory)?;
    let mut handles = Vec::with_capacity(CREATURES);
    let mut refs = Vec::with_capacity(CREATURES);
    for id in 0..CREATURES {
        let (h, r) = spawn_creature(id, broker.clone(), mode, factory)?;
        handles.push(h);
        refs.push(r);
    }
    let start = Instant::now();
    let deadline = start + timeout;
    broker.send(BrokerMsg::Creatures(refs.clone()));
    for (id, r) in refs.iter().enumerate() {
        r.send(CreatureMsg::Become(Color::ALL[id % 3]));
    }
    let meetings = await_all(vec![broker_done], deadline)?[0];
    let per_creature: u64 = await_all(handles, deadline)?.into_iter().sum();
    let trial = Trial {
        elapsed: start.elapsed(),
        matches: meetings,
    };
    Ok((trial, meetings, per_creature))
}

pub fn run_micro(bench: MicroBench, mode: ActorMode, n: u64, factory: &MatcherFactory, timeout: Duration) -> Result<Trial, TrialError> {
    match bench {
        MicroBench::PingPong => {
            let (trial, counts) = ping_pong(n, mode, factory, timeout)?;
            if counts != [n, n] {
                return Err(TrialError::Assertion(format!("expected {n} exchanges, got {counts:?}")));
            }
            Ok(trial)
        }
        MicroBench::Chameneos => {
            let (trial, meetings, per_creature) = chameneos(n, mode, factory, timeout)?;
            if meetings != n || per_creature != 2 * n {
                return Err(TrialError::Assertion(format!(
                    "{meetings} meetings at the broker, {per_creature} creature meetings, expected {n}"
                )));
            }
            Ok(trial)
        }
    }
}
