use std::sync::Arc;

use super::{Engine, EngineStats};
use crate::model::{CandidateMatch, Message, MessageInstance, Pattern};
use crate::tree::{Forest, MatchingTree};

/// Fully ramifies every applicable tree on each arrival, then picks the fairest
/// passing leaf across trees.
pub struct StatefulTreeEngine<M> {
    forest: Forest<M>,
}

impl<M: Message> StatefulTreeEngine<M> {
    pub fn new(patterns: Vec<Arc<Pattern<M>>>) -> Self {
        Self {
            forest: Forest::new(patterns),
        }
    }

    pub fn trees(&self) -> &[MatchingTree] {
        &self.forest.trees
    }

    pub fn audit(&self) -> Result<(), String> {
        self.forest.audit()
    }
}

impl<M: Message> Engine<M> for StatefulTreeEngine<M> {
    fn ingest(&mut self, msg: MessageInstance<M>) -> Option<CandidateMatch> {
        let tag = msg.payload.tag();
        if !self.forest.fits_any(tag) {
            self.forest.stats.discarded += 1;
            return self.forest.best();
        }
        let f = &mut self.forest;
        f.store.insert(msg.index, msg.payload);
        for (tree, pattern) in f.trees.iter_mut().zip(&f.patterns) {
            tree.ramify(msg.index, tag, pattern, &f.store);
        }
        f.best()
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
