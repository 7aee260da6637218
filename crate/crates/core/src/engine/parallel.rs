use std::sync::Arc;

use super::{Engine, EngineStats};
use crate::model::{CandidateMatch, Message, MessageInstance, Pattern};
use crate::parallel::{admit_one, parallel_lazy_match, Admission, ParallelConfig, ParallelRound};
use crate::tree::{Forest, MatchingTree};

/// Lazy ramification split over fairness-ordered partitions.
pub struct LazyParallelEngine<M> {
    forest: Forest<M>,
    config: ParallelConfig,
    last_rounds: Vec<ParallelRound>,
}

impl<M: Message> LazyParallelEngine<M> {
    pub fn new(patterns: Vec<Arc<Pattern<M>>>, config: ParallelConfig) -> Self {
        Self {
            forest: Forest::new(patterns),
            config,
            last_rounds: Vec::new(),
        }
    }

    pub fn trees(&self) -> &[MatchingTree] {
        &self.forest.trees
    }

    pub fn audit(&self) -> Result<(), String> {
        self.forest.audit()
    }

    /// Per-pattern worker reports of the most recent arrival.
    pub fn last_rounds(&self) -> &[ParallelRound] {
        &self.last_rounds
    }

    fn ramify(&mut self, msg: MessageInstance<M>, admitted: Option<&[bool]>) -> Option<CandidateMatch> {
        let tag = msg.payload.tag();
        self.forest.repair();
        let f = &mut self.forest;
        f.store.insert(msg.index, msg.payload);
        self.last_rounds.clear();
        for (pi, (tree, pattern)) in f.trees.iter_mut().zip(&f.patterns).enumerate() {
            if admitted.is_some_and(|a| !a[pi]) || !pattern.fits(tag) {
                continue;
            }
            let round = parallel_lazy_match(tree, msg.index, tag, pattern, &f.store, &self.config);
            f.stats.guard_evals += round.guard_evals;
            self.last_rounds.push(round);
        }
        f.best()
    }
}

impl<M: Message> Engine<M> for LazyParallelEngine<M> {
    fn ingest(&mut self, msg: MessageInstance<M>) -> Option<CandidateMatch> {
        if !self.forest.fits_any(msg.payload.tag()) {
            self.forest.stats.discarded += 1;
            return self.forest.best();
        }
        self.ramify(msg, None)
    }

    fn drain(&mut self) -> Option<CandidateMatch> {
        self.forest.best()
    }

    fn consume(&mut self, fire: &CandidateMatch) -> Vec<M> {
        self.forest.consume(fire)
    }

    fn stats(&self) -> EngineStats {
        self.forest.stats
    }

    fn buffered(&self) -> usize {
        self.forest.store.len()
    }
}

/// The parallel lazy engine plus per-slot filtering clauses applied on arrival.
pub struct FilteringParallelEngine<M> {
    inner: LazyParallelEngine<M>,
}

impl<M: Message> FilteringParallelEngine<M> {
    pub fn new(patterns: Vec<Arc<Pattern<M>>>, config: ParallelConfig) -> Self {
        Self {
            inner: LazyParallelEngine::new(patterns, config),
        }
    }

    pub fn trees(&self) -> &[MatchingTree] {
        self.inner.trees()
    }

    pub fn audit(&self) -> Result<(), String> {
        self.inner.audit()
    }
}

impl<M: Message> Engine<M> for FilteringParallelEngine<M> {
    fn ingest(&mut self, msg: MessageInstance<M>) -> Option<CandidateMatch> {
        let mut fits = false;
        let mut any_admitted = false;
        let admitted: Vec<bool> = self
            .inner
            .forest
            .patterns
            .iter()
            .map(|p| match admit_one(&msg.payload, p) {
                Admission::NoFit => false,
                Admission::Discard => {
                    fits = true;
                    false
                }
                Admission::Admit => {
                    fits = true;
                    any_admitted = true;
                    true
                }
            })
            .collect();
        if !any_admitted {
            let stats = &mut self.inner.forest.stats;
            if fits {
                stats.filtered += 1;
            } else {
                stats.discarded += 1;
            }
            return self.inner.forest.best();
        }
        self.inner.ramify(msg, Some(&admitted))
    }

    fn drain(&mut self) -> Option<CandidateMatch> {
        self.inner.drain()
    }

    fn consume(&mut self, fire: &CandidateMatch) -> Vec<M> {
        self.inner.consume(fire)
    }

    fn stats(&self) -> EngineStats {
        self.inner.stats()
    }

    fn buffered(&self) -> usize {
        self.inner.buffered()
    }
}
