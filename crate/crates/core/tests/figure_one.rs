use std::sync::Arc;

use joinmatch::engine::{Engine, MatcherFactory, MatcherKind, StatefulTreeEngine, WhileLazyEngine};
use joinmatch::model::{build_pattern, JoinPattern, MessageInstance, ResultControl, SlotDescriptor, Tag};
use joinmatch::oracle::{run_one, Fire};
use joinmatch::record::Record;

const A: Tag = Tag(0);
const B: Tag = Tag(1);
const C: Tag = Tag(2);
const D: Tag = Tag(3);

fn abc_shape() -> Vec<Arc<joinmatch::model::Pattern<Record>>> {
    let slots = [A, B, C].map(SlotDescriptor::new).to_vec();
    vec![Arc::new(build_pattern(slots, None).unwrap())]
}

fn abc() -> Vec<JoinPattern<Record, ()>> {
    vec![JoinPattern::builder()
        .slots([A, B, C].map(SlotDescriptor::new))
        .rhs(|_, _| ResultControl::Continue)
        .build()
        .unwrap()]
}

fn arrive(index: u64, tag: Tag) -> MessageInstance<Record> {
    MessageInstance {
        index,
        payload: Record::new(tag),
    }
}

#[test]
fn stateful_tree_follows_the_figure() {
    let mut e = StatefulTreeEngine::new(abc_shape());
    assert!(e.ingest(arrive(1, A)).is_none());
    assert!(e.ingest(arrive(2, C)).is_none());
    assert_eq!(e.trees()[0].dump(), "{1} [1,_,_]\n{1,2} [1,_,2]\n{2} [_,_,2]\n");

    let fire = e.ingest(arrive(3, B)).expect("B completes the pattern");
    assert_eq!(fire.key.as_slice(), &[1, 2, 3]);
    assert_eq!(fire.slot_tuple.as_slice(), &[1, 3, 2]);
    let before = e.trees()[0].dump();
    assert!(before.contains("{1,2,3} [1,3,2] passed"));
    assert!(before.contains("{2,3} [_,3,2]"));

    let msgs = e.consume(&fire);
    assert_eq!(msgs.iter().map(|m| m.tag).collect::<Vec<_>>(), [A, B, C]);
    assert!(e.trees()[0].is_empty(), "left: {}", e.trees()[0].dump());

    assert!(e.ingest(arrive(4, D)).is_none());
    assert!(e.trees()[0].is_empty());
    assert_eq!(e.stats().discarded, 1);
    e.audit().unwrap();
}

#[test]
fn lazy_tree_stops_after_the_completing_parent() {
    let mut e = WhileLazyEngine::new(abc_shape());
    e.ingest(arrive(1, A));
    e.ingest(arrive(2, C));
    assert_eq!(e.trees()[0].dump(), "{1} [1,_,_]\n{1,2} [1,_,2]\n{2} [_,_,2]\n");
    let fire = e.ingest(arrive(3, B)).unwrap();
    assert_eq!(fire.key.as_slice(), &[1, 2, 3]);
    // Parent {2} sorts after {1,2} and is never extended.
    let dump = e.trees()[0].dump();
    assert!(!dump.contains("{2,3}"), "{dump}");
    assert!(dump.contains("{1,3} [1,3,_]"));
    e.consume(&fire);
    assert!(e.trees()[0].is_empty());
}

#[test]
fn every_engine_fires_once_with_key_one_two_three() {
    let trace = [A, C, B, D].map(Record::new);
    for kind in MatcherKind::ALL {
        let matcher = MatcherFactory::new(kind).instantiate(abc()).unwrap().with_first_index(1);
        let run = run_one(&trace, matcher);
        let want = vec![Fire {
            pattern_index: 0,
            key: [1, 2, 3].into_iter().collect(),
        }];
        assert_eq!(run.fires, want, "{kind}");
        assert_eq!(run.unfair_fires, 0);
    }
}
