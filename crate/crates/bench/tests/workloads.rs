use std::time::Duration;

use joinmatch::engine::{Engine, FilteringParallelEngine, LazyParallelEngine, MatcherFactory, MatcherKind};
use joinmatch::model::MessageInstance;
use joinmatch::oracle::{oracle_matcher, run_one, shapes};
use joinmatch::parallel::ParallelConfig;
use joinmatch_bench::config::ActorMode;
use joinmatch_bench::differential::{random_replays, smart_house_replays, synthetic_replays};
use joinmatch_bench::workload::bounded_buffer::run_buffer_once;
use joinmatch_bench::workload::micro::{chameneos, ping_pong, Color};
use joinmatch_bench::workload::smart_house::{gen_smart_house_traffic, run_smart_house, smart_house_patterns, Action, Room};
use joinmatch_bench::workload::synthetic::{gen_synthetic_traffic, run_synthetic, synthetic_patterns, NOISE_TAG};
use joinmatch_bench::Workload;

const T: Duration = Duration::from_secs(60);

#[test]
fn size_five_clean_is_fifty_messages_and_ten_fires() {
    let t = gen_synthetic_traffic(5, Workload::Clean, 10, 0, 1);
    assert_eq!(t.len(), 50);
    for kind in MatcherKind::ALL {
        let trial = run_synthetic(5, Workload::Clean, true, 0, 10, 1, &MatcherFactory::new(kind), T).unwrap();
        assert_eq!(trial.matches, 10, "{kind}");
    }
}

#[test]
fn guardless_size_three_fires_ten_times_on_every_engine() {
    for kind in MatcherKind::ALL {
        for workload in [Workload::Clean, Workload::NoiseTag] {
            let trial = run_synthetic(3, workload, false, 20, 10, 4, &MatcherFactory::new(kind), T).unwrap();
            assert_eq!(trial.matches, 10, "{kind} {workload:?}");
        }
    }
}

#[test]
fn size_one_fires_every_clean_message_alone() {
    for workload in [Workload::Clean, Workload::NoiseTag, Workload::NoisePayload] {
        let t = gen_synthetic_traffic(1, workload, 10, 4, 2);
        let run = run_one(&t, oracle_matcher(synthetic_patterns(1, true, 10)));
        assert_eq!(run.fires.len(), 10, "{workload:?}");
        for f in &run.fires {
            assert_eq!(f.key.len(), 1);
            assert!(t[f.key[0] as usize].value >= 0, "noise fired");
        }
    }
}

#[test]
fn noise_tag_traffic_uses_the_spare_tag() {
    let t = gen_synthetic_traffic(2, Workload::NoiseTag, 3, 7, 0);
    assert_eq!(t.iter().filter(|m| m.tag == NOISE_TAG).count(), 21);
}

#[test]
fn seeds_fix_the_traffic() {
    for w in [Workload::Clean, Workload::NoiseTag, Workload::NoisePayload] {
        assert_eq!(gen_synthetic_traffic(4, w, 10, 5, 11), gen_synthetic_traffic(4, w, 10, 5, 11));
        assert_ne!(gen_synthetic_traffic(4, w, 10, 5, 11), gen_synthetic_traffic(4, w, 10, 5, 12));
    }
    assert_eq!(gen_smart_house_traffic(10, 8, 3), gen_smart_house_traffic(10, 8, 3));
}

#[test]
fn benchmark_traces_agree_across_engines() {
    let synthetic = synthetic_replays(6, Some(4), 5, 3);
    let house = smart_house_replays(5, &[0, 4, 8], 5, 3);
    let random = random_replays(777, 50, 2);
    for r in synthetic.iter().chain(&house).chain(&random) {
        assert!(r.agrees(), "{}: {:?}", r.trace, r.diverging);
    }
    assert!(synthetic.iter().all(|r| r.fires == 6));
}

#[test]
fn clean_smart_house_fires_once_per_triple() {
    for kind in MatcherKind::ALL {
        let trial = run_smart_house(0, 12, 9, &MatcherFactory::new(kind), T).unwrap();
        assert_eq!(trial.matches, 12, "{kind}");
    }
}

#[test]
fn gate_door_contact_costs_the_filtering_engine_no_guard_calls() {
    let motion = |room, t| Action::Motion { id: 0, status: true, room, t };
    let prefix = [motion(Room::FrontDoor, 10), motion(Room::EntranceHall, 30)];
    let gate = Action::Contact { id: 9, status: true, room: Room::GateDoor, t: 20 };
    let cfg = ParallelConfig::with_workers(1);
    let feed = |engine: &mut dyn Engine<Action>| {
        for (i, m) in prefix.iter().cloned().enumerate() {
            engine.ingest(MessageInstance { index: i as u64, payload: m });
        }
        let before = engine.stats().guard_evals;
        engine.ingest(MessageInstance { index: 2, payload: gate.clone() });
        (before, engine.stats())
    };
    let shapes = shapes(&smart_house_patterns());
    let (before, after) = feed(&mut FilteringParallelEngine::new(shapes.clone(), cfg.clone()));
    assert_eq!(after.guard_evals, before);
    assert_eq!(after.filtered, 1);
    let (before, after) = feed(&mut LazyParallelEngine::new(shapes, cfg));
    assert!(after.guard_evals > before, "the unfiltered engine checks the E5 guards");
}

#[test]
fn tiny_buffer_delivers_in_order() {
    for kind in MatcherKind::ALL {
        let out = run_buffer_once(1, 1, 1, 3, &MatcherFactory::new(kind), T).unwrap();
        assert_eq!(out.delivered, vec![vec![0, 1, 2]], "{kind}");
        out.check(1).unwrap();
        assert_eq!(out.peak_items, 1);
    }
}

#[test]
fn contended_buffer_never_overflows() {
    for kind in MatcherKind::ALL {
        let out = run_buffer_once(3, 4, 3, 40, &MatcherFactory::new(kind), T).unwrap();
        out.check(3).unwrap_or_else(|e| panic!("{kind}: {e}"));
    }
}

#[test]
fn ping_pong_counts_agree_between_modes() {
    let f = MatcherFactory::new(MatcherKind::WhileLazy);
    for mode in [ActorMode::Simple, ActorMode::Join(MatcherKind::WhileLazy)] {
        let (trial, counts) = ping_pong(10_000, mode, &f, T).unwrap();
        assert_eq!(counts, [10_000, 10_000]);
        assert_eq!(trial.matches, 10_000);
    }
}

#[test]
fn chameneos_meets_n_times_in_both_modes() {
    for (mode, kind) in [(ActorMode::Simple, MatcherKind::BruteForce), (ActorMode::Join(MatcherKind::StatefulTree), MatcherKind::StatefulTree)] {
        let (_, meetings, per_creature) = chameneos(500, mode, &MatcherFactory::new(kind), T).unwrap();
        assert_eq!(meetings, 500);
        assert_eq!(per_creature, 1000);
    }
}

#[test]
fn complements() {
    assert_eq!(Color::Red.complement(Color::Red), Color::Red);
    assert_eq!(Color::Red.complement(Color::Blue), Color::Yellow);
    assert_eq!(Color::Yellow.complement(Color::Blue), Color::Red);
}
