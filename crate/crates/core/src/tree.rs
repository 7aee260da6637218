//! Per-pattern matching trees.
//!
//! A node is keyed by the ascending arrival indices it covers. Since every new
//! node extends an existing one with the newest message, a key is always its
//! parent's key plus one larger index, so the whole tree is a trie over keys and
//! the subtree below a node is a contiguous key range.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::ops::Bound;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use smallvec::{smallvec, SmallVec};

use crate::engine::{EngineStats, MessageStore};
use crate::model::{assemble_env, ArrivalIndex, CandidateMatch, IndexVec, Message, Pattern, Tag};

/// Sorted arrival indices identifying a node. The root is the empty key.
pub type Key = IndexVec;

/// Marks an unassigned slot inside a partial assignment.
pub const UNFILLED: ArrivalIndex = ArrivalIndex::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeafState {
    Unchecked,
    Passed,
}

/// A complete assignment awaiting (or having passed) its single guard evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaf {
    pub slots: IndexVec,
    pub state: LeafState,
}

/// Staged mutations of one ramification pass. Workers fill these independently and
/// the owner merges them.
#[derive(Debug, Default)]
pub(crate) struct RoundLog {
    nodes: Vec<(Key, Vec<IndexVec>)>,
    leaves: Vec<(Key, Vec<Leaf>)>,
    failed: Vec<(Key, Vec<IndexVec>)>,
    pub(crate) guard_evals: u64,
    pub(crate) visited: usize,
    pub(crate) found: bool,
    pub(crate) interrupted: bool,
}

impl RoundLog {
    pub(crate) fn absorb(&mut self, other: RoundLog) {
        self.nodes.extend(other.nodes);
        self.leaves.extend(other.leaves);
        self.failed.extend(other.failed);
        self.guard_evals += other.guard_evals;
        self.visited += other.visited;
        self.found |= other.found;
        self.interrupted |= other.interrupted;
    }
}

#[derive(Clone, Debug)]
struct Pending {
    index: ArrivalIndex,
    class: usize,
    found: Option<Key>,
}

#[derive(Clone, Debug)]
pub struct MatchingTree {
    pattern_index: usize,
    size: usize,
    classes: SmallVec<[(Tag, SmallVec<[usize; 4]>); 4]>,
    nodes: BTreeMap<Key, Vec<IndexVec>>,
    /// Per tag class, the nodes with at least one free slot of that class.
    open: SmallVec<[BTreeSet<Key>; 4]>,
    complete: BTreeMap<Key, Vec<Leaf>>,
    failed: BTreeMap<Key, Vec<IndexVec>>,
    /// Keys created while ramifying each arrival; consuming that arrival removes
    /// exactly the subtrees rooted at them.
    by_last: FxHashMap<ArrivalIndex, Vec<Key>>,
    /// Arrival whose lazy ramification stopped early, with its tag class and the
    /// fairest passing key it found. Skipped parents can only matter once that key
    /// is gone while the arrival is still live.
    pending: Option<Pending>,
}

impl MatchingTree {
    pub fn new<M>(pattern_index: usize, pattern: &Pattern<M>) -> Self {
        let classes: SmallVec<[_; 4]> = pattern.positions_by_tag().iter().cloned().collect();
        Self {
            pattern_index,
            size: pattern.size(),
            open: classes.iter().map(|_| BTreeSet::new()).collect(),
            classes,
            nodes: BTreeMap::new(),
            complete: BTreeMap::new(),
            failed: BTreeMap::new(),
            by_last: FxHashMap::default(),
            pending: None,
        }
    }

    pub fn pattern_index(&self) -> usize {
        self.pattern_index
    }

    pub(crate) fn class_of(&self, tag: Tag) -> Option<usize> {
        self.classes.iter().position(|(t, _)| *t == tag)
    }

    /// Partial nodes plus keys holding unevaluated or passed complete assignments.
    pub fn node_count(&self) -> usize {
        self.nodes.len() + self.complete.len()
    }

    pub fn failed_count(&self) -> usize {
        self.failed.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.complete.is_empty() && self.failed.is_empty()
    }

    pub fn contains_key(&self, key: &[ArrivalIndex]) -> bool {
        self.nodes.contains_key(key) || self.complete.contains_key(key) || self.failed.contains_key(key)
    }

    /// Extends every compatible node with `index` and returns the new complete
    /// assignments. Guards are not evaluated here.
    pub fn ramify<M: Message>(
        &mut self,
        index: ArrivalIndex,
        tag: Tag,
        pattern: &Pattern<M>,
        store: &MessageStore<M>,
    ) -> Vec<CandidateMatch> {
        let Some(class) = self.class_of(tag) else {
            return Vec::new();
        };
        let mut log = RoundLog::default();
        for parent in self.parent_iter(class) {
            self.visit(parent, index, class, pattern, store, false, &mut log);
        }
        let completed = log
            .leaves
            .iter()
            .flat_map(|(key, leaves)| {
                leaves
                    .iter()
                    .map(|l| CandidateMatch::with_key(self.pattern_index, l.slots.clone(), key.clone()))
            })
            .collect();
        self.apply(log, index);
        completed
    }

    /// Ramifies fairest parent first and stops at the first guard-true completion.
    /// Returns the number of guard evaluations performed.
    pub fn lazy_ramify<M: Message>(
        &mut self,
        index: ArrivalIndex,
        tag: Tag,
        pattern: &Pattern<M>,
        store: &MessageStore<M>,
    ) -> u64 {
        let Some(class) = self.class_of(tag) else {
            return 0;
        };
        let log = self.lazy_pass(self.parent_iter(class), index, class, pattern, store, None);
        let evals = log.guard_evals;
        self.commit(log, index, class);
        evals
    }

    /// Parents eligible for an arrival of tag class `class`, fairest first.
    pub(crate) fn parent_iter(&self, class: usize) -> impl Iterator<Item = Option<&Key>> + '_ {
        std::iter::once(None).chain(self.open[class].iter().map(Some))
    }

    pub(crate) fn parent_count(&self, class: usize) -> usize {
        1 + self.open[class].len()
    }

    pub(crate) fn parents(&self, class: usize) -> Vec<Option<&Key>> {
        self.parent_iter(class).collect()
    }

    pub(crate) fn lazy_pass<'a, M, I>(
        &'a self,
        parents: I,
        index: ArrivalIndex,
        class: usize,
        pattern: &Pattern<M>,
        store: &MessageStore<M>,
        cancel: Option<(&crate::parallel::CancellationToken, usize)>,
    ) -> RoundLog
    where
        M: Message,
        I: Iterator<Item = Option<&'a Key>>,
    {
        let mut log = RoundLog::default();
        for parent in parents {
            if let Some((token, rank)) = cancel {
                if token.is_cancelled(rank) {
                    log.interrupted = true;
                    break;
                }
            }
            if self.visit(parent, index, class, pattern, store, true, &mut log) {
                log.found = true;
                if let Some((token, rank)) = cancel {
                    token.cancel_above(rank);
                }
                break;
            }
        }
        log
    }

    /// Merges a lazy pass, remembering that the arrival may be only partly ramified.
    pub(crate) fn commit(&mut self, log: RoundLog, index: ArrivalIndex, class: usize) {
        if log.found || log.interrupted {
            let found = log
                .leaves
                .iter()
                .filter(|(_, leaves)| leaves.iter().any(|l| l.state == LeafState::Passed))
                .map(|(k, _)| k)
                .min()
                .cloned();
            self.pending = Some(Pending { index, class, found });
        }
        self.apply(log, index);
    }

    /// Extends one parent; returns true when a lazy visit found a guard-true completion.
    #[allow(clippy::too_many_arguments)]
    fn visit<M: Message>(
        &self,
        parent: Option<&Key>,
        index: ArrivalIndex,
        class: usize,
        pattern: &Pattern<M>,
        store: &MessageStore<M>,
        lazy: bool,
        log: &mut RoundLog,
    ) -> bool {
        log.visited += 1;
        let root: [IndexVec; 1];
        let assignments: &[IndexVec] = match parent {
            Some(k) => &self.nodes[k],
            None => {
                root = [smallvec![UNFILLED; self.size]];
                &root
            }
        };
        let positions = &self.classes[class].1;
        let mut exts = Vec::new();
        for a in assignments {
            for &p in positions {
                if a[p] == UNFILLED {
                    let mut b = a.clone();
                    b[p] = index;
                    exts.push(b);
                }
            }
        }
        let mut key: Key = parent.cloned().unwrap_or_default();
        key.push(index);
        if key.len() < self.size {
            log.nodes.push((key, exts));
            return false;
        }
        exts.sort_unstable();
        if !lazy {
            log.leaves.push((key, exts.into_iter().map(Leaf::unchecked).collect()));
            return false;
        }
        let mut leaves = Vec::new();
        let mut failed = Vec::new();
        let mut found = false;
        for slots in exts {
            if found {
                leaves.push(Leaf::unchecked(slots));
            } else if check_guard(pattern, &slots, store, &mut log.guard_evals) {
                leaves.push(Leaf { slots, state: LeafState::Passed });
                found = true;
            } else {
                failed.push(slots);
            }
        }
        if !leaves.is_empty() {
            log.leaves.push((key.clone(), leaves));
        }
        if !failed.is_empty() {
            log.failed.push((key, failed));
        }
        found
    }

    pub(crate) fn apply(&mut self, log: RoundLog, index: ArrivalIndex) {
        let mut created: Vec<Key> =
            Vec::with_capacity(log.nodes.len() + log.leaves.len() + log.failed.len());
        for (key, assignments) in log.nodes {
            let sample = &assignments[0];
            for (c, (_, positions)) in self.classes.iter().enumerate() {
                if positions.iter().any(|&p| sample[p] == UNFILLED) {
                    self.open[c].insert(key.clone());
                }
            }
            created.push(key.clone());
            self.nodes.insert(key, assignments);
        }
        for (key, leaves) in log.leaves {
            created.push(key.clone());
            self.complete.entry(key).or_default().extend(leaves);
        }
        for (key, slots) in log.failed {
            created.push(key.clone());
            self.failed.entry(key).or_default().extend(slots);
        }
        if created.is_empty() {
            return;
        }
        created.sort_unstable();
        created.dedup();
        self.by_last.entry(index).or_default().extend(created);
    }

    /// Visits complete assignments fairest first, evaluating each unchecked guard
    /// once. Failures move to `failed`; the first passing assignment is returned
    /// and kept until a fire prunes it.
    pub fn traverse_fairest<M: Message>(
        &mut self,
        pattern: &Pattern<M>,
        store: &MessageStore<M>,
        guard_evals: &mut u64,
    ) -> Option<CandidateMatch> {
        let mut found = None;
        let mut emptied: Vec<Key> = Vec::new();
        for (key, leaves) in self.complete.iter_mut() {
            while let Some(leaf) = leaves.first_mut() {
                if leaf.state == LeafState::Unchecked {
                    if check_guard(pattern, &leaf.slots, store, guard_evals) {
                        leaf.state = LeafState::Passed;
                    } else {
                        let gone = leaves.remove(0);
                        self.failed.entry(key.clone()).or_default().push(gone.slots);
                        continue;
                    }
                }
                found = Some(CandidateMatch::with_key(
                    self.pattern_index,
                    leaves[0].slots.clone(),
                    key.clone(),
                ));
                break;
            }
            if leaves.is_empty() {
                emptied.push(key.clone());
            }
            if found.is_some() {
                break;
            }
        }
        for key in emptied {
            self.complete.remove(&key);
        }
        found
    }

    /// Drops every node, leaf and failure whose key contains a consumed index.
    pub fn prune_on_fire(&mut self, consumed: &[ArrivalIndex]) {
        for c in consumed {
            if self.pending.as_ref().is_some_and(|p| p.index == *c) {
                self.pending = None;
            }
            let Some(roots) = self.by_last.remove(c) else {
                continue;
            };
            for root in &roots {
                remove_subtree(&mut self.nodes, root);
                remove_subtree(&mut self.complete, root);
                remove_subtree(&mut self.failed, root);
                for set in self.open.iter_mut() {
                    let doomed: Vec<Key> = set
                        .range::<[ArrivalIndex], _>((Bound::Included(root.as_slice()), Bound::Unbounded))
                        .take_while(|k| k.starts_with(root))
                        .cloned()
                        .collect();
                    for k in doomed {
                        set.remove(&k);
                    }
                }
            }
        }
    }

    /// Finishes an arrival whose lazy ramification stopped early, so that every
    /// parent has been extended with it. Completions are left unchecked.
    pub fn repair<M: Message>(&mut self, pattern: &Pattern<M>, store: &MessageStore<M>) {
        let Some(Pending { index, class, .. }) = self.pending.take() else {
            return;
        };
        let mut log = RoundLog::default();
        for parent in self.parents(class) {
            if parent.is_some_and(|k| k.last() == Some(&index)) {
                continue;
            }
            let mut child: Key = parent.cloned().unwrap_or_default();
            child.push(index);
            if self.contains_key(&child) {
                continue;
            }
            self.visit(parent, index, class, pattern, store, false, &mut log);
        }
        self.apply(log, index);
    }

    /// Repairs only if the early stop is no longer covered by a live passing leaf.
    pub(crate) fn repair_if_stale<M: Message>(&mut self, pattern: &Pattern<M>, store: &MessageStore<M>) {
        let covered = match &self.pending {
            None => return,
            Some(p) => p.found.as_ref().is_some_and(|k| self.complete.contains_key(k)),
        };
        if !covered {
            self.repair(pattern, store);
        }
    }

    /// Checks the structural invariants against the live buffer.
    pub fn audit<M: Message>(
        &self,
        pattern: &Pattern<M>,
        store: &MessageStore<M>,
    ) -> Result<(), String> {
        let check = |key: &Key, slots: &IndexVec, complete: bool| -> Result<(), String> {
            if !key.windows(2).all(|w| w[0] < w[1]) {
                return Err(format!("key {key:?} is not strictly ascending"));
            }
            if complete != (key.len() == self.size) {
                return Err(format!("key {key:?} has the wrong length"));
            }
            let mut filled: IndexVec = slots.iter().copied().filter(|&i| i != UNFILLED).collect();
            filled.sort_unstable();
            if &filled != key {
                return Err(format!("assignment {slots:?} does not span key {key:?}"));
            }
            for (pos, &i) in slots.iter().enumerate() {
                if i == UNFILLED {
                    continue;
                }
                let msg = store
                    .get(i)
                    .ok_or_else(|| format!("key {key:?} references dead message {i}"))?;
                if msg.tag() != pattern.slots()[pos].tag() {
                    return Err(format!("message {i} in slot {pos} has the wrong tag"));
                }
            }
            Ok(())
        };
        for (key, assignments) in &self.nodes {
            for a in assignments {
                check(key, a, false)?;
            }
            for (c, (_, positions)) in self.classes.iter().enumerate() {
                let has_room = positions.iter().any(|&p| assignments[0][p] == UNFILLED);
                if has_room != self.open[c].contains(key) {
                    return Err(format!("open index out of sync for {key:?}"));
                }
            }
        }
        for set in &self.open {
            if let Some(k) = set.iter().find(|k| !self.nodes.contains_key(*k)) {
                return Err(format!("open index lists missing node {k:?}"));
            }
        }
        for (key, leaves) in &self.complete {
            for l in leaves {
                check(key, &l.slots, true)?;
            }
        }
        for (key, slots) in &self.failed {
            for s in slots {
                check(key, s, true)?;
            }
        }
        Ok(())
    }

    /// Deterministic rendering: one line per assignment, keys ascending.
    pub fn dump(&self) -> String {
        let mut rows: Vec<(&Key, &IndexVec, &str)> = Vec::new();
        for (key, assignments) in &self.nodes {
            rows.extend(assignments.iter().map(|a| (key, a, "")));
        }
        for (key, leaves) in &self.complete {
            rows.extend(leaves.iter().map(|l| {
                let label = match l.state {
                    LeafState::Unchecked => " complete",
                    LeafState::Passed => " passed",
                };
                (key, &l.slots, label)
            }));
        }
        for (key, slots) in &self.failed {
            rows.extend(slots.iter().map(|s| (key, s, " failed")));
        }
        rows.sort();
        let mut out = String::new();
        for (key, slots, label) in rows {
            let keys: Vec<String> = key.iter().map(u64::to_string).collect();
            let slots: Vec<String> = slots
                .iter()
                .map(|&i| if i == UNFILLED { "_".to_owned() } else { i.to_string() })
                .collect();
            let _ = writeln!(out, "{{{}}} [{}]{label}", keys.join(","), slots.join(","));
        }
        out
    }
}

fn remove_subtree<V>(map: &mut BTreeMap<Key, V>, root: &Key) {
    let doomed: Vec<Key> = map
        .range::<[ArrivalIndex], _>((Bound::Included(root.as_slice()), Bound::Unbounded))
        .take_while(|(k, _)| k.starts_with(root))
        .map(|(k, _)| k.clone())
        .collect();
    for k in doomed {
        map.remove(&k);
    }
}

impl Leaf {
    fn unchecked(slots: IndexVec) -> Self {
        Self {
            slots,
            state: LeafState::Unchecked,
        }
    }
}

pub(crate) fn check_guard<M: Message>(
    pattern: &Pattern<M>,
    slots: &[ArrivalIndex],
    store: &MessageStore<M>,
    guard_evals: &mut u64,
) -> bool {
    if pattern.is_unguarded() {
        return true;
    }
    let env = assemble_env(pattern, slots, |i| store.get(i))
        .unwrap_or_else(|e| panic!("matching tree out of sync: {e}"));
    *guard_evals += 1;
    pattern.eval_guard(&env)
}

/// One tree per pattern over a shared buffer: the state common to tree engines.
pub(crate) struct Forest<M> {
    pub(crate) patterns: Vec<Arc<Pattern<M>>>,
    pub(crate) trees: Vec<MatchingTree>,
    pub(crate) store: MessageStore<M>,
    pub(crate) stats: EngineStats,
}

impl<M: Message> Forest<M> {
    pub(crate) fn new(patterns: Vec<Arc<Pattern<M>>>) -> Self {
        let trees = patterns
            .iter()
            .enumerate()
            .map(|(i, p)| MatchingTree::new(i, p))
            .collect();
        Self {
            patterns,
            trees,
            store: MessageStore::new(),
            stats: EngineStats::default(),
        }
    }

    pub(crate) fn fits_any(&self, tag: Tag) -> bool {
        self.patterns.iter().any(|p| p.fits(tag))
    }

    pub(crate) fn repair(&mut self) {
        for (tree, pattern) in self.trees.iter_mut().zip(&self.patterns) {
            tree.repair(pattern, &self.store);
        }
    }

    /// Fairest guard-true complete assignment over all trees.
    pub(crate) fn best(&mut self) -> Option<CandidateMatch> {
        for (tree, pattern) in self.trees.iter_mut().zip(&self.patterns) {
            tree.repair_if_stale(pattern, &self.store);
        }
        let mut best: Option<CandidateMatch> = None;
        for (tree, pattern) in self.trees.iter_mut().zip(&self.patterns) {
            if let Some(c) = tree.traverse_fairest(pattern, &self.store, &mut self.stats.guard_evals) {
                if best.as_ref().map_or(true, |b| c < *b) {
                    best = Some(c);
                }
            }
        }
        best
    }

    pub(crate) fn consume(&mut self, fire: &CandidateMatch) -> Vec<M> {
        let msgs = self.store.take_matched(fire);
        for tree in &mut self.trees {
            tree.prune_on_fire(&fire.key);
        }
        self.stats.fires += 1;
        msgs
    }

    pub(crate) fn audit(&self) -> Result<(), String> {
        for (tree, pattern) in self.trees.iter().zip(&self.patterns) {
            tree.audit(pattern, &self.store)?;
        }
        Ok(())
    }
}
