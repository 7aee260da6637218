use std::cmp::Ordering;

use joinmatch::model::{compare_matches, CandidateMatch, IndexVec, Stamper};
use proptest::prelude::*;

fn candidate() -> impl Strategy<Value = CandidateMatch> {
    (0usize..3, prop::collection::btree_set(0u64..12, 1..4), any::<u64>()).prop_map(|(p, set, seed)| {
        let mut slots: Vec<u64> = set.into_iter().collect();
        // Deterministic permutation so slot tuples vary over the same key.
        let len = slots.len();
        for i in 0..len {
            slots.swap(i, (seed as usize >> (i * 3)) % len);
        }
        CandidateMatch::new(p, slots.into_iter().collect::<IndexVec>())
    })
}

proptest! {
    #[test]
    fn comparator_is_a_total_order(a in candidate(), b in candidate(), c in candidate()) {
        let ab = compare_matches(&a, &b);
        prop_assert_eq!(ab, compare_matches(&b, &a).reverse());
        prop_assert_eq!(ab == Ordering::Equal, a == b);
        if ab != Ordering::Greater && compare_matches(&b, &c) != Ordering::Greater {
            prop_assert_ne!(compare_matches(&a, &c), Ordering::Greater);
        }
    }

    #[test]
    fn fairer_of_disjoint_matches_holds_the_oldest_index(a in candidate(), b in candidate()) {
        prop_assume!(a.key.iter().all(|i| !b.key.contains(i)));
        let oldest = a.key[0].min(b.key[0]);
        let fairer = if compare_matches(&a, &b) == Ordering::Less { &a } else { &b };
        prop_assert!(fairer.key.contains(&oldest));
    }

    #[test]
    fn stamping_never_repeats(n in 1usize..500, first in 0u64..1000) {
        let mut s = Stamper::starting_at(first);
        let idx: Vec<u64> = (0..n).map(|i| s.stamp(i).index).collect();
        prop_assert!(idx.windows(2).all(|w| w[1] == w[0] + 1));
    }
}
