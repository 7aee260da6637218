//! The engine-neutral matcher contract, the factory, and the message store the
//! engines share.

mod brute;
mod lazy;
mod parallel;
mod stateful;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

pub use brute::BruteForceEngine;
pub use lazy::WhileLazyEngine;
pub use parallel::{FilteringParallelEngine, LazyParallelEngine};
pub use stateful::StatefulTreeEngine;

use crate::actor::{ActorRef, Mailbox};
use crate::model::{
    ArrivalIndex, CandidateMatch, JoinPattern, Message, MessageInstance, Pattern, ResultControl,
    Stamper,
};
use crate::parallel::ParallelConfig;

/// Returned when the mailbox has no remaining senders.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("mailbox disconnected")]
pub struct Disconnected;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatcherError {
    #[error("a matcher needs at least one join pattern")]
    EmptyPatternList,
    #[error("unknown matcher `{0}`")]
    UnknownMatcher(String),
}

/// Drives join-pattern matching for one actor (the `apply(mailbox)(self)` contract).
pub trait Matcher<M, T>: Send {
    /// Fires exactly one pattern, blocking on the mailbox as long as necessary, and
    /// returns what its right-hand side decided.
    fn run_until_fire(
        &mut self,
        mailbox: &Mailbox<M>,
        me: &ActorRef<M>,
    ) -> Result<ResultControl<T>, Disconnected>;
}

/// Counters kept by every engine.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    /// Guard closures actually invoked.
    pub guard_evals: u64,
    /// Messages fitting no slot of any pattern, dropped on arrival.
    pub discarded: u64,
    /// Messages rejected by filtering clauses of every pattern they fit.
    pub filtered: u64,
    pub fires: u64,
}

/// Incremental matching state behind a [`JoinMatcher`].
pub trait Engine<M: Message>: Send {
    /// Takes ownership of a freshly stamped message and reports the fairest
    /// guard-true match, if one became available.
    fn ingest(&mut self, msg: MessageInstance<M>) -> Option<CandidateMatch>;

    /// Looks for a guard-true match among what is already buffered.
    fn drain(&mut self) -> Option<CandidateMatch>;

    /// Removes the matched messages (returned in slot order) and forgets every
    /// partial match that used them.
    fn consume(&mut self, fire: &CandidateMatch) -> Vec<M>;

    fn stats(&self) -> EngineStats;

    /// Messages currently held by the engine.
    fn buffered(&self) -> usize;
}

/// Contiguous, index-addressed storage for live messages.
///
/// Slot `i` holds arrival index `base + i`; consumed or never-stored arrivals are
/// holes, and leading holes are reclaimed.
pub struct MessageStore<M> {
    base: ArrivalIndex,
    slots: VecDeque<Option<M>>,
    live: usize,
}

impl<M> Default for MessageStore<M> {
    fn default() -> Self {
        Self {
            base: 0,
            slots: VecDeque::new(),
            live: 0,
        }
    }
}

impl<M> fmt::Debug for MessageStore<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MessageStore")
            .field("base", &self.base)
            .field("span", &self.slots.len())
            .field("live", &self.live)
            .finish()
    }
}

impl<M> MessageStore<M> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Indices must be inserted in increasing order.
    pub fn insert(&mut self, index: ArrivalIndex, msg: M) {
        if self.slots.is_empty() {
            self.base = index;
        }
        let end = self.base + self.slots.len() as ArrivalIndex;
        assert!(index >= end, "arrival {index} inserted out of order");
        for _ in end..index {
            self.slots.push_back(None);
        }
        self.slots.push_back(Some(msg));
        self.live += 1;
    }

    pub fn get(&self, index: ArrivalIndex) -> Option<&M> {
        let offset = index.checked_sub(self.base)?;
        self.slots.get(offset as usize)?.as_ref()
    }

    pub fn remove(&mut self, index: ArrivalIndex) -> Option<M> {
        let offset = index.checked_sub(self.base)? as usize;
        let msg = self.slots.get_mut(offset)?.take()?;
        self.live -= 1;
        while matches!(self.slots.front(), Some(None)) {
            self.slots.pop_front();
            self.base += 1;
        }
        Some(msg)
    }

    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Live messages in ascending arrival order.
    pub fn iter(&self) -> impl Iterator<Item = (ArrivalIndex, &M)> + '_ {
        let base = self.base;
        self.slots
            .iter()
            .enumerate()
            .filter_map(move |(i, m)| m.as_ref().map(|m| (base + i as ArrivalIndex, m)))
    }

    /// Removes the messages of `fire`, in slot order.
    pub(crate) fn take_matched(&mut self, fire: &CandidateMatch) -> Vec<M> {
        fire.slot_tuple
            .iter()
            .map(|&i| {
                self.remove(i)
                    .unwrap_or_else(|| panic!("fired message {i} is not buffered"))
            })
            .collect()
    }
}

/// The five matching algorithms, by CLI identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatcherKind {
    BruteForce,
    StatefulTree,
    WhileLazy,
    LazyParallel,
    FilteringParallel,
}

impl MatcherKind {
    pub const ALL: [MatcherKind; 5] = [
        MatcherKind::BruteForce,
        MatcherKind::StatefulTree,
        MatcherKind::WhileLazy,
        MatcherKind::LazyParallel,
        MatcherKind::FilteringParallel,
    ];

    pub fn id(self) -> &'static str {
        match self {
            MatcherKind::BruteForce => "brute-force",
            MatcherKind::StatefulTree => "stateful-tree",
            MatcherKind::WhileLazy => "while-lazy",
            MatcherKind::LazyParallel => "lazy-parallel",
            MatcherKind::FilteringParallel => "filtering-parallel",
        }
    }
}

impl fmt::Display for MatcherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for MatcherKind {
    type Err = MatcherError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MatcherKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| MatcherError::UnknownMatcher(s.to_owned()))
    }
}

/// Uniform constructor for matchers: pick an algorithm, hand it the patterns.
#[derive(Clone, Debug)]
pub struct MatcherFactory {
    pub kind: MatcherKind,
    pub parallel: ParallelConfig,
}

impl MatcherFactory {
    pub fn new(kind: MatcherKind) -> Self {
        Self {
            kind,
            parallel: ParallelConfig::default(),
        }
    }

    pub fn with_parallel(mut self, parallel: ParallelConfig) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.parallel.workers = workers.max(1);
        self
    }

    pub fn all() -> Vec<MatcherFactory> {
        MatcherKind::ALL.into_iter().map(MatcherFactory::new).collect()
    }

    pub fn id(&self) -> &'static str {
        self.kind.id()
    }

    /// Builds a fresh matcher; pattern indices follow list order.
    pub fn instantiate<M: Message, T>(
        &self,
        patterns: Vec<JoinPattern<M, T>>,
    ) -> Result<JoinMatcher<M, T>, MatcherError> {
        if patterns.is_empty() {
            return Err(MatcherError::EmptyPatternList);
        }
        let shapes: Vec<Arc<Pattern<M>>> = patterns.iter().map(|p| p.pattern.clone()).collect();
        let engine: Box<dyn Engine<M>> = match self.kind {
            MatcherKind::BruteForce => Box::new(BruteForceEngine::new(shapes)),
            MatcherKind::StatefulTree => Box::new(StatefulTreeEngine::new(shapes)),
            MatcherKind::WhileLazy => Box::new(WhileLazyEngine::new(shapes)),
            MatcherKind::LazyParallel => {
                Box::new(LazyParallelEngine::new(shapes, self.parallel.clone()))
            }
            MatcherKind::FilteringParallel => {
                Box::new(FilteringParallelEngine::new(shapes, self.parallel.clone()))
            }
        };
        Ok(JoinMatcher::from_engine(self.id(), patterns, engine))
    }
}

/// A fire selected by an engine, with its messages already removed from the buffer.
#[derive(Debug)]
pub struct Fired<M> {
    pub candidate: CandidateMatch,
    /// Matched payloads in slot order.
    pub messages: Vec<M>,
}

/// Stamps incoming messages, routes them to an engine and runs right-hand sides.
pub struct JoinMatcher<M: Message, T> {
    name: &'static str,
    patterns: Vec<JoinPattern<M, T>>,
    engine: Box<dyn Engine<M>>,
    stamper: Stamper,
}

impl<M: Message, T> fmt::Debug for JoinMatcher<M, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JoinMatcher")
            .field("engine", &self.name)
            .field("patterns", &self.patterns.len())
            .field("next_index", &self.stamper.peek())
            .finish()
    }
}

impl<M: Message, T> JoinMatcher<M, T> {
    /// Wraps a custom engine. `patterns` and the engine's pattern list must agree.
    pub fn from_engine(
        name: &'static str,
        patterns: Vec<JoinPattern<M, T>>,
        engine: Box<dyn Engine<M>>,
    ) -> Self {
        Self {
            name,
            patterns,
            engine,
            stamper: Stamper::new(),
        }
    }

    /// Numbers arrivals from `first` instead of zero.
    pub fn with_first_index(mut self, first: ArrivalIndex) -> Self {
        self.stamper = Stamper::starting_at(first);
        self
    }

    /// Index the next offered message will receive.
    pub fn next_index(&self) -> ArrivalIndex {
        self.stamper.peek()
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn stats(&self) -> EngineStats {
        self.engine.stats()
    }

    pub fn shapes(&self) -> Vec<Arc<Pattern<M>>> {
        self.patterns.iter().map(|p| p.pattern.clone()).collect()
    }

    pub fn buffered(&self) -> usize {
        self.engine.buffered()
    }

    /// Stamps `payload` and hands it to the engine; consumes the messages of any fire.
    pub fn offer(&mut self, payload: M) -> Option<Fired<M>> {
        let msg = self.stamper.stamp(payload);
        let candidate = self.engine.ingest(msg)?;
        Some(self.take(candidate))
    }

    /// Fires from already-buffered state, without new arrivals.
    pub fn drain(&mut self) -> Option<Fired<M>> {
        let candidate = self.engine.drain()?;
        Some(self.take(candidate))
    }

    fn take(&mut self, candidate: CandidateMatch) -> Fired<M> {
        let messages = self.engine.consume(&candidate);
        Fired {
            candidate,
            messages,
        }
    }

    /// Runs the right-hand side of a fire.
    pub fn fire(&mut self, fired: &Fired<M>, me: &ActorRef<M>) -> ResultControl<T> {
        let pattern = &mut self.patterns[fired.candidate.pattern_index];
        let env = pattern.pattern.env_from(fired.messages.iter());
        pattern.run_rhs(&env, me)
    }

    /// Like [`Matcher::run_until_fire`], but returns `None` instead of blocking once
    /// the mailbox is empty.
    pub fn try_run_until_fire(
        &mut self,
        mailbox: &Mailbox<M>,
        me: &ActorRef<M>,
    ) -> Option<ResultControl<T>> {
        if let Some(fired) = self.drain() {
            return Some(self.fire(&fired, me));
        }
        while let Some(msg) = mailbox.try_take() {
            if let Some(fired) = self.offer(msg) {
                return Some(self.fire(&fired, me));
            }
        }
        None
    }
}

impl<M: Message, T> Matcher<M, T> for JoinMatcher<M, T> {
    fn run_until_fire(
        &mut self,
        mailbox: &Mailbox<M>,
        me: &ActorRef<M>,
    ) -> Result<ResultControl<T>, Disconnected> {
        if let Some(fired) = self.drain() {
            return Ok(self.fire(&fired, me));
        }
        loop {
            let msg = mailbox.take().ok_or(Disconnected)?;
            if let Some(fired) = self.offer(msg) {
                return Ok(self.fire(&fired, me));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn store_addresses_by_arrival_index() {
        let mut s = MessageStore::new();
        s.insert(3, 'a');
        s.insert(5, 'b');
        s.insert(6, 'c');
        assert_eq!(s.len(), 3);
        assert_eq!(s.get(4), None);
        assert_eq!(s.get(5), Some(&'b'));
        assert_eq!(s.remove(3), Some('a'));
        assert_eq!(s.remove(3), None);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![(5, &'b'), (6, &'c')]);
        s.remove(5);
        s.remove(6);
        assert!(s.is_empty());
        s.insert(10, 'd');
        assert_eq!(s.get(10), Some(&'d'));
    }

    #[test]
    #[should_panic(expected = "out of order")]
    fn store_rejects_out_of_order_inserts() {
        let mut s = MessageStore::new();
        s.insert(3, ());
        s.insert(2, ());
    }

    #[test]
    fn kinds_parse_from_cli_ids() {
        for k in MatcherKind::ALL {
            assert_eq!(k.id().parse::<MatcherKind>(), Ok(k));
        }
        assert!("rete".parse::<MatcherKind>().is_err());
    }
}
