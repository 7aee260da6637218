use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use joinmatch::engine::{
    BruteForceEngine, Engine, FilteringParallelEngine, LazyParallelEngine, StatefulTreeEngine,
    WhileLazyEngine,
};
use joinmatch::model::{build_pattern, CandidateMatch, MessageInstance, Pattern, SlotDescriptor, Tag};
use joinmatch::oracle::OracleEngine;
use joinmatch::parallel::ParallelConfig;
use joinmatch::record::{field_slot, Record};
use joinmatch::testkit::{CaseShape, RandomCase};
use joinmatch::tree::MatchingTree;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const A: Tag = Tag(0);
const B: Tag = Tag(1);

type Shapes = Vec<Arc<Pattern<Record>>>;

trait Checked: Engine<Record> {
    fn check(&self) -> Result<(), String> {
        Ok(())
    }
}

impl Checked for OracleEngine<Record> {}
impl Checked for BruteForceEngine<Record> {}
impl Checked for StatefulTreeEngine<Record> {
    fn check(&self) -> Result<(), String> {
        self.audit()
    }
}
impl Checked for WhileLazyEngine<Record> {
    fn check(&self) -> Result<(), String> {
        self.audit()
    }
}
impl Checked for LazyParallelEngine<Record> {
    fn check(&self) -> Result<(), String> {
        self.audit()
    }
}
impl Checked for FilteringParallelEngine<Record> {
    fn check(&self) -> Result<(), String> {
        self.audit()
    }
}

struct Audited {
    name: &'static str,
    engine: Box<dyn Checked>,
}

fn all_engines(shapes: &Shapes) -> Vec<Audited> {
    let s = || shapes.clone();
    let engines: Vec<(&'static str, Box<dyn Checked>)> = vec![
        ("oracle", Box::new(OracleEngine::new(s()))),
        ("brute-force", Box::new(BruteForceEngine::new(s()))),
        ("stateful-tree", Box::new(StatefulTreeEngine::new(s()))),
        ("while-lazy", Box::new(WhileLazyEngine::new(s()))),
        ("lazy-parallel", Box::new(LazyParallelEngine::new(s(), ParallelConfig::eager(3)))),
        ("filtering-parallel", Box::new(FilteringParallelEngine::new(s(), ParallelConfig::eager(2)))),
    ];
    engines.into_iter().map(|(name, engine)| Audited { name, engine }).collect()
}

fn shapes_of(case: &RandomCase) -> Shapes {
    case.build(None).iter().map(|p| p.pattern().clone()).collect()
}

#[test]
fn deferred_consumption_keeps_engines_in_step() {
    for seed in 0..400 {
        let case = RandomCase::generate(90_000 + seed, CaseShape::default());
        let shapes = shapes_of(&case);
        let mut engines = all_engines(&shapes);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, msg) in case.messages.iter().enumerate() {
            let mut got: Vec<Option<CandidateMatch>> = Vec::new();
            for e in &mut engines {
                got.push(e.engine.ingest(MessageInstance { index: i as u64, payload: msg.clone() }));
            }
            // Sometimes leave the match unconsumed and let the next arrivals pile up.
            let consume = rng.gen_bool(0.6);
            loop {
                for (e, g) in engines.iter().zip(&got) {
                    assert_eq!(g, &got[0], "seed {seed} step {i}: {} disagrees", e.name);
                }
                let Some(fire) = got[0].clone() else { break };
                if !consume {
                    break;
                }
                got.clear();
                for e in &mut engines {
                    let msgs = e.engine.consume(&fire);
                    assert_eq!(msgs.len(), fire.slot_tuple.len());
                    e.engine.check().unwrap_or_else(|err| panic!("seed {seed}: {}: {err}", e.name));
                    got.push(e.engine.drain());
                }
            }
        }
    }
}

fn ab_shapes(guard_value: Option<i64>) -> Shapes {
    let slots = vec![field_slot(A, &[("v", "a")]), field_slot(B, &[("v", "b")])];
    let guard = guard_value.map(|want| -> joinmatch::model::Guard {
        Arc::new(move |env| env.int("a") + env.int("b") == want)
    });
    vec![Arc::new(build_pattern(slots, guard).unwrap())]
}

fn rec(tag: Tag, v: i64) -> Record {
    Record::new(tag).with("v", v)
}

#[test]
fn drain_fires_buffered_matches_without_new_arrivals() {
    let shapes = ab_shapes(None);
    let trace = [rec(A, 0), rec(B, 0), rec(A, 0), rec(B, 0)];
    for mut e in all_engines(&shapes) {
        let mut pending = Vec::new();
        for (i, m) in trace.iter().enumerate() {
            pending.extend(e.engine.ingest(MessageInstance { index: i as u64, payload: m.clone() }));
        }
        // Two disjoint matches are complete; only the fairer one is reported.
        let first = pending.last().cloned().unwrap();
        assert_eq!(first.key.as_slice(), &[0, 1], "{}", e.name);
        e.engine.consume(&first);
        let second = e.engine.drain().unwrap_or_else(|| panic!("{} lost the second match", e.name));
        assert_eq!(second.key.as_slice(), &[2, 3], "{}", e.name);
        e.engine.consume(&second);
        assert!(e.engine.drain().is_none());
        assert_eq!(e.engine.buffered(), 0);
    }
}

fn ramify_all(tree: &mut MatchingTree, lazy: bool, shapes: &Shapes, msgs: &[Record]) -> String {
    let mut store = joinmatch::engine::MessageStore::new();
    let mut evals = 0;
    for (i, m) in msgs.iter().enumerate() {
        store.insert(i as u64, m.clone());
        if lazy {
            evals += tree.lazy_ramify(i as u64, m.tag, &shapes[0], &store);
        } else {
            tree.ramify(i as u64, m.tag, &shapes[0], &store);
            assert!(tree.traverse_fairest(&shapes[0], &store, &mut evals).is_none());
        }
        tree.audit(&shapes[0], &store).unwrap();
    }
    tree.dump()
}

#[test]
fn lazy_equals_full_ramification_when_guards_fail() {
    let shapes = ab_shapes(Some(-1));
    let msgs: Vec<Record> = (0..9).map(|i| rec(if i % 3 == 0 { B } else { A }, i)).collect();
    let full = ramify_all(&mut MatchingTree::new(0, &shapes[0]), false, &shapes, &msgs);
    let lazy = ramify_all(&mut MatchingTree::new(0, &shapes[0]), true, &shapes, &msgs);
    assert_eq!(full, lazy);
    assert!(full.contains("failed"));
}

#[test]
fn failed_leaf_is_pruned_and_never_rechecked() {
    let shapes = ab_shapes(Some(100));
    let mut tree = MatchingTree::new(0, &shapes[0]);
    let mut store = joinmatch::engine::MessageStore::new();
    store.insert(0, rec(A, 1));
    store.insert(1, rec(B, 2));
    tree.ramify(0, A, &shapes[0], &store);
    let completed = tree.ramify(1, B, &shapes[0], &store);
    assert_eq!(completed.len(), 1);
    let before = tree.node_count();
    let mut evals = 0;
    assert!(tree.traverse_fairest(&shapes[0], &store, &mut evals).is_none());
    assert_eq!(evals, 1);
    assert_eq!(tree.node_count(), before - 1);
    assert_eq!(tree.failed_count(), 1);
    assert!(tree.traverse_fairest(&shapes[0], &store, &mut evals).is_none());
    assert_eq!(evals, 1);
    tree.prune_on_fire(&[5]);
    assert_eq!(tree.failed_count(), 1);
    tree.prune_on_fire(&[0]);
    assert_eq!(tree.failed_count(), 0);
    assert_eq!(tree.dump(), "{1} [_,1]\n");
}

#[test]
fn overlapping_patterns_both_lose_shared_nodes() {
    let p0 = build_pattern(vec![SlotDescriptor::<Record>::new(A), SlotDescriptor::new(B)], None).unwrap();
    let p1 = build_pattern(vec![SlotDescriptor::<Record>::new(A), SlotDescriptor::new(Tag(2))], None).unwrap();
    let mut e = StatefulTreeEngine::new(vec![Arc::new(p0), Arc::new(p1)]);
    e.ingest(MessageInstance { index: 0, payload: Record::new(A) });
    assert!(e.trees().iter().all(|t| t.node_count() == 1));
    let fire = e.ingest(MessageInstance { index: 1, payload: Record::new(B) }).unwrap();
    e.consume(&fire);
    assert!(e.trees().iter().all(|t| t.is_empty()));
}

#[test]
fn higher_ranks_stop_once_rank_zero_reports() {
    let slow_evals = Arc::new(AtomicU64::new(0));
    let counter = slow_evals.clone();
    let slots = vec![field_slot(A, &[("v", "a")]), field_slot(B, &[("v", "b")])];
    let guard: joinmatch::model::Guard = Arc::new(move |env| {
        if env.int("a") == 0 {
            return true;
        }
        counter.fetch_add(1, Ordering::SeqCst);
        std::thread::sleep(Duration::from_millis(2));
        false
    });
    let shapes = vec![Arc::new(build_pattern(slots, Some(guard)).unwrap())];
    let mut e = LazyParallelEngine::new(shapes.clone(), ParallelConfig::eager(4));
    let n = 200;
    for i in 0..n {
        e.ingest(MessageInstance { index: i, payload: rec(A, i as i64) });
    }
    let fire = e.ingest(MessageInstance { index: n, payload: rec(B, 0) }).unwrap();
    assert_eq!(fire.key.as_slice(), &[0, n]);

    let rounds = e.last_rounds();
    assert_eq!(rounds.len(), 1);
    let workers = &rounds[0].workers;
    assert_eq!(workers.len(), 4);
    assert!(workers[0].found && !workers[0].interrupted);
    let higher: u64 = workers[1..].iter().map(|w| w.guard_evals).sum();
    let assigned: usize = workers[1..].iter().map(|w| w.assigned).sum();
    assert!(workers[1..].iter().all(|w| w.interrupted || w.visited < w.assigned));
    assert!(
        (higher as usize) < assigned / 4,
        "higher ranks kept evaluating: {higher} of {assigned}"
    );
    assert_eq!(higher, slow_evals.load(Ordering::SeqCst));

    let mut lazy = WhileLazyEngine::new(shapes);
    for i in 0..n {
        lazy.ingest(MessageInstance { index: i, payload: rec(A, i as i64) });
    }
    assert_eq!(lazy.ingest(MessageInstance { index: n, payload: rec(B, 0) }), Some(fire));
}

#[test]
fn early_stop_is_completed_when_its_match_is_stolen() {
    const C: Tag = Tag(2);
    let pair = |x, y| Arc::new(build_pattern(vec![SlotDescriptor::<Record>::new(x), SlotDescriptor::new(y)], None).unwrap());
    let shapes = vec![pair(A, B), pair(A, C)];
    let trace = [A, C, A, B].map(Record::new);
    for mut e in all_engines(&shapes) {
        let mut last = None;
        for (i, m) in trace.iter().enumerate() {
            last = e.engine.ingest(MessageInstance { index: i as u64, payload: m.clone() });
        }
        // B@3 stops lazy ramification at {0,3}; the older A&&C match then takes A@0.
        let first = last.unwrap();
        assert_eq!((first.pattern_index, first.key.as_slice()), (1, &[0, 1][..]), "{}", e.name);
        e.engine.consume(&first);
        let second = e.engine.drain().unwrap_or_else(|| panic!("{} missed {{2,3}}", e.name));
        assert_eq!((second.pattern_index, second.key.as_slice()), (0, &[2, 3][..]), "{}", e.name);
        e.engine.check().unwrap();
    }
}
