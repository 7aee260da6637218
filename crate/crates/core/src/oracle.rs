//! Reference semantics: exhaustive enumeration of candidate matches, and replay of
//! a trace through several matchers side by side.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::actor::mailbox;
use crate::engine::{Engine, EngineStats, JoinMatcher, MatcherError, MatcherFactory};
use crate::model::{
    assemble_env, ArrivalIndex, CandidateMatch, IndexVec, JoinPattern, Message, MessageInstance,
    Pattern, ResultControl,
};

/// Stamped, unconsumed messages by arrival index.
pub type MessageBuffer<M> = BTreeMap<ArrivalIndex, M>;

/// Every guard-true, injective, tag-consistent complete assignment, fairest first.
pub fn enumerate_matches<M: Message>(
    buffer: &MessageBuffer<M>,
    patterns: &[Arc<Pattern<M>>],
) -> Vec<CandidateMatch> {
    let mut out = Vec::new();
    for (pi, pattern) in patterns.iter().enumerate() {
        let per_slot: Vec<Vec<ArrivalIndex>> = pattern
            .slots()
            .iter()
            .map(|s| {
                buffer
                    .iter()
                    .filter(|(_, m)| m.tag() == s.tag())
                    .map(|(i, _)| *i)
                    .collect()
            })
            .collect();
        let mut tuple = IndexVec::new();
        enumerate_into(pattern, pi, &per_slot, buffer, &mut tuple, &mut out);
    }
    out.sort();
    out
}

fn enumerate_into<M: Message>(
    pattern: &Pattern<M>,
    pattern_index: usize,
    per_slot: &[Vec<ArrivalIndex>],
    buffer: &MessageBuffer<M>,
    tuple: &mut IndexVec,
    out: &mut Vec<CandidateMatch>,
) {
    let depth = tuple.len();
    if depth == per_slot.len() {
        let env = assemble_env(pattern, tuple, |i| buffer.get(&i)).expect("buffer is closed under lookup");
        if pattern.eval_guard(&env) {
            out.push(CandidateMatch::new(pattern_index, tuple.clone()));
        }
        return;
    }
    for &i in &per_slot[depth] {
        if tuple.contains(&i) {
            continue;
        }
        tuple.push(i);
        enumerate_into(pattern, pattern_index, per_slot, buffer, tuple, out);
        tuple.pop();
    }
}

pub fn fairest_match<M: Message>(
    buffer: &MessageBuffer<M>,
    patterns: &[Arc<Pattern<M>>],
) -> Option<CandidateMatch> {
    enumerate_matches(buffer, patterns).into_iter().next()
}

/// The matching halves of a pattern list.
pub fn shapes<M, T>(patterns: &[JoinPattern<M, T>]) -> Vec<Arc<Pattern<M>>> {
    patterns.iter().map(|p| p.pattern.clone()).collect()
}

/// A fire as recorded in logs: which pattern, which messages.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fire {
    pub pattern_index: usize,
    pub key: IndexVec,
}

impl From<&CandidateMatch> for Fire {
    fn from(c: &CandidateMatch) -> Self {
        Self {
            pattern_index: c.pattern_index,
            key: c.key.clone(),
        }
    }
}

impl fmt::Display for Fire {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fire {} [", self.pattern_index)?;
        for (n, i) in self.key.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("]")
    }
}

impl FromStr for Fire {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let rest = s.trim().strip_prefix("fire ").ok_or("expected `fire`")?;
        let (p, list) = rest.trim().split_once(' ').ok_or("expected a key list")?;
        let pattern_index = p.parse().map_err(|_| format!("bad pattern index `{p}`"))?;
        let inner = list
            .trim()
            .strip_prefix('[')
            .and_then(|l| l.strip_suffix(']'))
            .ok_or("key list must be bracketed")?;
        let key = inner
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse::<ArrivalIndex>().map_err(|_| format!("bad index `{t}`")))
            .collect::<Result<IndexVec, _>>()?;
        Ok(Self { pattern_index, key })
    }
}

/// One step of a replay log.
#[derive(Clone, Debug, PartialEq)]
pub enum TraceEvent<M> {
    Arrive(MessageInstance<M>),
    Fire(Fire),
}

/// An [`Engine`] that keeps every message and asks [`fairest_match`] each time.
pub struct OracleEngine<M> {
    patterns: Vec<Arc<Pattern<M>>>,
    buffer: MessageBuffer<M>,
    stats: EngineStats,
}

impl<M: Message> OracleEngine<M> {
    pub fn new(patterns: Vec<Arc<Pattern<M>>>) -> Self {
        Self {
            patterns,
            buffer: MessageBuffer::new(),
            stats: EngineStats::default(),
        }
    }
}

impl<M: Message> Engine<M> for OracleEngine<M> {
    fn ingest(&mut self, msg: MessageInstance<M>) -> Option<CandidateMatch> {
        self.buffer.insert(msg.index, msg.payload);
        fairest_match(&self.buffer, &self.patterns)
    }

    fn drain(&mut self) -> Option<CandidateMatch> {
        fairest_match(&self.buffer, &self.patterns)
    }

    fn consume(&mut self, fire: &CandidateMatch) -> Vec<M> {
        self.stats.fires += 1;
        fire.slot_tuple
            .iter()
            .map(|i| self.buffer.remove(i).expect("oracle fired a dead message"))
            .collect()
    }

    fn stats(&self) -> EngineStats {
        self.stats
    }

    fn buffered(&self) -> usize {
        self.buffer.len()
    }
}

/// Wraps the oracle as a regular matcher.
pub fn oracle_matcher<M: Message, T>(patterns: Vec<JoinPattern<M, T>>) -> JoinMatcher<M, T> {
    let engine = Box::new(OracleEngine::new(shapes(&patterns)));
    JoinMatcher::from_engine("oracle", patterns, engine)
}

/// Fires of one matcher over a replayed trace.
#[derive(Clone, Debug)]
pub struct EngineRun {
    pub id: &'static str,
    pub fires: Vec<Fire>,
    pub stats: EngineStats,
    /// Fires whose candidate differed from the oracle minimum over the live buffer.
    pub unfair_fires: usize,
    /// Messages stamped during the run.
    pub arrivals: usize,
    /// Messages still buffered when the trace ran out.
    pub leftover: usize,
}

#[derive(Clone, Debug)]
pub struct Replay {
    pub oracle: EngineRun,
    pub engines: Vec<EngineRun>,
}

impl Replay {
    /// Engines whose fire sequence differs from the oracle's.
    pub fn diverging(&self) -> Vec<&'static str> {
        self.engines
            .iter()
            .filter(|e| e.fires != self.oracle.fires)
            .map(|e| e.id)
            .collect()
    }

    pub fn all_agree(&self) -> bool {
        self.diverging().is_empty() && self.engines.iter().all(|e| e.unfair_fires == 0)
    }
}

/// Feeds `trace` through a fresh matcher from every factory and through the oracle.
///
/// The trace is queued up front; right-hand-side self-sends land behind it. Each run
/// stops when its mailbox is empty and nothing more fires, or on `Stop`. Every fire
/// is also checked against the oracle minimum over the matcher's live messages.
pub fn differential_replay<M, T, F>(
    trace: &[M],
    make_patterns: F,
    factories: &[MatcherFactory],
) -> Result<Replay, MatcherError>
where
    M: Message + Clone,
    F: Fn() -> Vec<JoinPattern<M, T>>,
{
    let oracle = run_one(trace, oracle_matcher(make_patterns()));
    let engines = factories
        .iter()
        .map(|f| Ok(run_one(trace, f.instantiate(make_patterns())?)))
        .collect::<Result<_, MatcherError>>()?;
    Ok(Replay { oracle, engines })
}

/// Replays `trace` through one matcher, recording its fires and checking each
/// against the oracle.
pub fn run_one<M: Message + Clone, T>(trace: &[M], matcher: JoinMatcher<M, T>) -> EngineRun {
    replay_matcher(trace, matcher, true)
}

/// Like [`run_one`] without the per-fire oracle check, so that guards run only
/// inside the matcher.
pub fn run_unchecked<M: Message + Clone, T>(trace: &[M], matcher: JoinMatcher<M, T>) -> EngineRun {
    replay_matcher(trace, matcher, false)
}

fn replay_matcher<M: Message + Clone, T>(
    trace: &[M],
    mut matcher: JoinMatcher<M, T>,
    check: bool,
) -> EngineRun {
    let shapes: Vec<Arc<Pattern<M>>> = matcher.shapes();
    let (mb, me) = mailbox();
    for m in trace {
        me.send(m.clone());
    }
    let mut live = MessageBuffer::new();
    let first = matcher.next_index();
    let mut next = first;
    let mut fires = Vec::new();
    let mut unfair = 0;
    'run: loop {
        let fired = match matcher.drain() {
            Some(f) => f,
            None => loop {
                let Some(msg) = mb.try_take() else { break 'run };
                live.insert(next, msg.clone());
                next += 1;
                if let Some(f) = matcher.offer(msg) {
                    break f;
                }
            },
        };
        if check && fairest_match(&live, &shapes).as_ref() != Some(&fired.candidate) {
            unfair += 1;
        }
        for i in &fired.candidate.key {
            live.remove(i);
        }
        fires.push(Fire::from(&fired.candidate));
        if let ResultControl::Stop(_) = matcher.fire(&fired, &me) {
            break;
        }
    }
    EngineRun {
        id: matcher.name(),
        fires,
        stats: matcher.stats(),
        unfair_fires: unfair,
        arrivals: (next - first) as usize,
        leftover: matcher.buffered(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_pattern, SlotDescriptor, Tag};
    use crate::record::Record;

    const A: Tag = Tag(0);
    const B: Tag = Tag(1);
    const C: Tag = Tag(2);
    const D: Tag = Tag(3);

    fn abc() -> Vec<Arc<Pattern<Record>>> {
        let slots = [A, B, C].map(SlotDescriptor::new).to_vec();
        vec![Arc::new(build_pattern(slots, None).unwrap())]
    }

    fn buf(tags: &[(u64, Tag)]) -> MessageBuffer<Record> {
        tags.iter().map(|&(i, t)| (i, Record::new(t))).collect()
    }

    #[test]
    fn figure_one_buffer_has_one_candidate() {
        let b = buf(&[(1, A), (2, C), (3, B), (4, D)]);
        let all = enumerate_matches(&b, &abc());
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].key.as_slice(), &[1, 2, 3]);
        assert_eq!(all[0].slot_tuple.as_slice(), &[1, 3, 2]);
        assert!(enumerate_matches(&MessageBuffer::new(), &abc()).is_empty());
    }

    #[test]
    fn oldest_duplicate_wins() {
        let p = vec![Arc::new(
            build_pattern(vec![SlotDescriptor::new(A), SlotDescriptor::new(B)], None).unwrap(),
        )];
        let b = buf(&[(0, A), (1, A), (2, B)]);
        let all = enumerate_matches(&b, &p);
        let keys: Vec<_> = all.iter().map(|c| c.key.to_vec()).collect();
        assert_eq!(keys, vec![vec![0, 2], vec![1, 2]]);
        assert_eq!(fairest_match(&b, &p).unwrap().key.as_slice(), &[0, 2]);
    }

    #[test]
    fn declaration_order_breaks_key_ties() {
        let unary = || Arc::new(build_pattern(vec![SlotDescriptor::<Record>::new(A)], None).unwrap());
        let p = vec![unary(), unary()];
        let got = fairest_match(&buf(&[(0, A)]), &p).unwrap();
        assert_eq!(got.pattern_index, 0);
    }

    #[test]
    fn fire_parses_and_prints() {
        let f: Fire = "fire 1 [3,4]".parse().unwrap();
        assert_eq!(f.to_string(), "fire 1 [3,4]");
        assert_eq!("fire 0 []".parse::<Fire>().unwrap().key.len(), 0);
    }
}
