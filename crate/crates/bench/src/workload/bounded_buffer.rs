//! Producers and consumers coordinated by a buffer actor holding `Free` and
//! `Item` tokens.
//!
//! Patterns, in order:
//! - `Produce(item, ack) && Free` stores the item as a self-sent `Item` and acks.
//! - `Consume(reply) && Item(item)` hands the item over and frees a place.
//! - `Terminate` stops the actor.

use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use joinmatch::actor::{mailbox, spawn_actor, ActorRef};
use joinmatch::engine::MatcherFactory;
use joinmatch::model::{JoinPattern, Message, ResultControl, SlotDescriptor, Tag, Value};

use super::{remaining, Trial, TrialError};

#[derive(Debug)]
pub enum BufferMsg {
    Produce { item: u64, ack: ActorRef<()> },
    Free,
    Item(u64),
    Consume(ActorRef<u64>),
    Terminate,
}

const PRODUCE: Tag = Tag(0);
const FREE: Tag = Tag(1);
const ITEM: Tag = Tag(2);
const CONSUME: Tag = Tag(3);
const TERMINATE: Tag = Tag(4);

impl Message for BufferMsg {
    fn tag(&self) -> Tag {
        match self {
            BufferMsg::Produce { .. } => PRODUCE,
            BufferMsg::Free => FREE,
            BufferMsg::Item(_) => ITEM,
            BufferMsg::Consume(_) => CONSUME,
            BufferMsg::Terminate => TERMINATE,
        }
    }
}

/// Items currently stored, and the most ever stored at once.
#[derive(Debug, Default)]
pub struct Occupancy {
    now: AtomicI64,
    peak: AtomicI64,
}

impl Occupancy {
    fn add(&self) {
        let n = self.now.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(n, Ordering::SeqCst);
    }

    fn remove(&self) {
        self.now.fetch_sub(1, Ordering::SeqCst);
    }

    pub fn current(&self) -> i64 {
        self.now.load(Ordering::SeqCst)
    }

    pub fn peak(&self) -> i64 {
        self.peak.load(Ordering::SeqCst)
    }
}

pub fn buffer_patterns(occupancy: Arc<Occupancy>) -> Vec<JoinPattern<BufferMsg, ()>> {
    let taken = occupancy.clone();
    let produce = JoinPattern::builder()
        .slot(SlotDescriptor::new(PRODUCE).bind(&["item", "ack"], |m, out| {
            if let BufferMsg::Produce { item, ack } = m {
                out.push(Value::Int(*item as i64));
                out.push(Value::any(ack.clone()));
            }
        }))
        .slot(SlotDescriptor::new(FREE))
        .rhs(move |env, me| {
            occupancy.add();
            me.send(BufferMsg::Item(env.int("item") as u64));
            let ack = env.get("ack").and_then(|v| v.downcast_ref::<ActorRef<()>>());
            ack.expect("ack is an actor reference").send(());
            ResultControl::Continue
        });
    let consume = JoinPattern::builder()
        .slot(SlotDescriptor::new(CONSUME).bind(&["reply"], |m, out| {
            if let BufferMsg::Consume(reply) = m {
                out.push(Value::any(reply.clone()));
            }
        }))
        .slot(SlotDescriptor::new(ITEM).bind(&["item"], |m, out| {
            if let BufferMsg::Item(item) = m {
                out.push(Value::Int(*item as i64));
            }
        }))
        .rhs(move |env, me| {
            taken.remove();
            let reply = env.get("reply").and_then(|v| v.downcast_ref::<ActorRef<u64>>());
            reply.expect("reply is an actor reference").send(env.int("item") as u64);
            me.send(BufferMsg::Free);
            ResultControl::Continue
        });
    let terminate = JoinPattern::builder()
        .slot(SlotDescriptor::new(TERMINATE))
        .rhs(|_, _| ResultControl::Stop(()));
    [produce, consume, terminate]
        .into_iter()
        .map(|b| b.build().expect("buffer patterns are well formed"))
        .collect()
}

/// What one run delivered, for safety checks.
#[derive(Clone, Debug)]
pub struct BufferOutcome {
    pub elapsed: Duration,
    pub produced: u64,
    /// Items received by each consumer, in arrival order.
    pub delivered: Vec<Vec<u64>>,
    pub peak_items: i64,
    pub final_items: i64,
}

impl BufferOutcome {
    /// Checks capacity and that every produced item arrived exactly once.
    pub fn check(&self, buffer_size: usize) -> Result<(), String> {
        if self.peak_items > buffer_size as i64 {
            return Err(format!("{} items buffered with capacity {buffer_size}", self.peak_items));
        }
        let mut all: Vec<u64> = self.delivered.iter().flatten().copied().collect();
        all.sort_unstable();
        if all.len() as u64 != self.produced || all.iter().enumerate().any(|(i, &v)| v != i as u64) {
            return Err(format!("{} items produced, {} delivered or duplicated", self.produced, all.len()));
        }
        if self.final_items != 0 {
            return Err(format!("{} items left in the buffer", self.final_items));
        }
        Ok(())
    }
}

/// `producers` threads each send `items` Produce requests, waiting for the ack of
/// each; `consumers` threads split the total and wait for each item.
pub fn run_buffer_once(
    buffer_size: usize,
    producers: usize,
    consumers: usize,
    items: usize,
    factory: &MatcherFactory,
    timeout: Duration,
) -> Result<BufferOutcome, TrialError> {
    let occupancy = Arc::new(Occupancy::default());
    let (done, buffer) = spawn_actor(buffer_patterns(occupancy.clone()), factory)?;
    for _ in 0..buffer_size {
        buffer.send(BufferMsg::Free);
    }
    let total = producers * items;
    let start = Instant::now();
    let deadline = start + timeout;
    let producer_threads: Vec<_> = (0..producers)
        .map(|p| {
            let buffer = buffer.clone();
            thread::spawn(move || {
                let (acks, ack) = mailbox();
                for k in 0..items {
                    let item = (p * items + k) as u64;
                    buffer.send(BufferMsg::Produce { item, ack: ack.clone() });
                    acks.take_timeout(remaining(deadline))?;
                }
                Some(())
            })
        })
        .collect();
    let consumer_threads: Vec<_> = (0..consumers)
        .map(|c| {
            let buffer = buffer.clone();
            let share = total / consumers + usize::from(c < total % consumers);
            thread::spawn(move || {
                let (inbox, reply) = mailbox();
                let mut got = Vec::with_capacity(share);
                for _ in 0..share {
                    buffer.send(BufferMsg::Consume(reply.clone()));
                    got.push(inbox.take_timeout(remaining(deadline))?);
                }
                Some(got)
            })
        })
        .collect();
    let mut timed_out = false;
    for t in producer_threads {
        timed_out |= t.join().expect("producer panicked").is_none();
    }
    let mut delivered = Vec::with_capacity(consumers);
    for t in consumer_threads {
        match t.join().expect("consumer panicked") {
            Some(got) => delivered.push(got),
            None => timed_out = true,
        }
    }
    let elapsed = start.elapsed();
    if timed_out {
        return Err(TrialError::Timeout);
    }
    buffer.send(BufferMsg::Terminate);
    match done.wait_timeout(remaining(deadline)) {
        None => return Err(TrialError::Timeout),
        Some(result) => result?,
    }
    Ok(BufferOutcome {
        elapsed,
        produced: total as u64,
        delivered,
        peak_items: occupancy.peak(),
        final_items: occupancy.current(),
    })
}

/// Counts two fires per item: one to store it, one to hand it over.
pub fn run_bounded_buffer(
    buffer_size: usize,
    producers: usize,
    consumers: usize,
    items: usize,
    factory: &MatcherFactory,
    timeout: Duration,
) -> Result<Trial, TrialError> {
    let outcome = run_buffer_once(buffer_size, producers, consumers, items, factory, timeout)?;
    outcome.check(buffer_size).map_err(TrialError::Assertion)?;
    Ok(Trial {
        elapsed: outcome.elapsed,
        matches: 2 * outcome.produced,
    })
}
