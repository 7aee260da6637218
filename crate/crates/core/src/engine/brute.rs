use std::sync::Arc;

use smallvec::SmallVec;

use super::{Engine, EngineStats, MessageStore};
use crate::model::{assemble_env, ArrivalIndex, CandidateMatch, IndexVec, Message, MessageInstance, Pattern};

/// Buffers every message and recomputes the fairest match from scratch on each
/// arrival, re-checking combinations that failed before.
pub struct BruteForceEngine<M> {
    patterns: Vec<Arc<Pattern<M>>>,
    store: MessageStore<M>,
    stats: EngineStats,
}

impl<M: Message> BruteForceEngine<M> {
    pub fn new(patterns: Vec<Arc<Pattern<M>>>) -> Self {
        Self {
            patterns,
            store: MessageStore::new(),
            stats: EngineStats::default(),
        }
    }

    fn search(&mut self) -> Option<CandidateMatch> {
        let mut best: Option<CandidateMatch> = None;
        for (pi, pattern) in self.patterns.iter().enumerate() {
            if self.store.len() < pattern.size() {
                continue;
            }
            let mut per_slot: SmallVec<[Vec<ArrivalIndex>; 6]> =
                (0..pattern.size()).map(|_| Vec::new()).collect();
            for (i, m) in self.store.iter() {
                if let Some(positions) = pattern.positions_for(m.tag()) {
                    for &p in positions {
                        per_slot[p].push(i);
                    }
                }
            }
            if per_slot.iter().any(Vec::is_empty) {
                continue;
            }
            let mut search = Search {
                pattern,
                pattern_index: pi,
                per_slot: &per_slot,
                store: &self.store,
                tuple: IndexVec::new(),
                best: &mut best,
                guard_evals: &mut self.stats.guard_evals,
            };
            search.descend();
        }
        best
    }
}

struct Search<'a, M> {
    pattern: &'a Pattern<M>,
    pattern_index: usize,
    per_slot: &'a [Vec<ArrivalIndex>],
    store: &'a MessageStore<M>,
    tuple: IndexVec,
    best: &'a mut Option<CandidateMatch>,
    guard_evals: &'a mut u64,
}

impl<M: Message> Search<'_, M> {
    fn descend(&mut self) {
        let depth = self.tuple.len();
        if depth == self.per_slot.len() {
            let candidate = CandidateMatch::new(self.pattern_index, self.tuple.clone());
            if self.best.as_ref().is_some_and(|b| *b <= candidate) {
                return;
            }
            let pass = self.pattern.is_unguarded() || {
                let env = assemble_env(self.pattern, &self.tuple, |i| self.store.get(i))
                    .expect("brute-force buffer lost a message");
                *self.guard_evals += 1;
                self.pattern.eval_guard(&env)
            };
            if pass {
                *self.best = Some(candidate);
            }
            return;
        }
        for &i in &self.per_slot[depth] {
            if self.tuple.contains(&i) {
                continue;
            }
            self.tuple.push(i);
            self.descend();
            self.tuple.pop();
        }
    }
}

impl<M: Message> Engine<M> for BruteForceEngine<M> {
    fn ingest(&mut self, msg: MessageInstance<M>) -> Option<CandidateMatch> {
        self.store.insert(msg.index, msg.payload);
        self.search()
    }

    fn drain(&mut self) -> Option<CandidateMatch> {
        self.search()
    }

    fn consume(&mut self, fire: &CandidateMatch) -> Vec<M> {
        self.stats.fires += 1;
        self.store.take_matched(fire)
    }

    fn stats(&self) -> EngineStats {
        self.stats
    }

    fn buffered(&self) -> usize {
        self.store.len()
    }
}
