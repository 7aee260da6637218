//! Seeded random workloads for differential testing.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{JoinPattern, LookupEnv, ResultControl, SlotDescriptor, Tag};
use crate::record::{field_slot, Record};

const ID: [&str; 4] = ["id0", "id1", "id2", "id3"];
const V: [&str; 4] = ["v0", "v1", "v2", "v3"];

/// One conjunct of a random guard over slot values `v0..v3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    Const(bool),
    Eq(usize, usize),
    Lt(usize, usize),
    SumMod { modulus: i64, rest: i64 },
    /// Depends on one slot only; becomes a filtering clause when that slot's tag is unique.
    AtLeast(usize, i64),
}

impl Atom {
    fn eval(&self, v: &[i64]) -> bool {
        match *self {
            Atom::Const(b) => b,
            Atom::Eq(a, b) => v[a] == v[b],
            Atom::Lt(a, b) => v[a] < v[b],
            Atom::SumMod { modulus, rest } => v.iter().sum::<i64>().rem_euclid(modulus) == rest,
            Atom::AtLeast(a, t) => v[a] >= t,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PatternSpec {
    pub tags: Vec<Tag>,
    /// Empty means unguarded.
    pub guard: Vec<Atom>,
    pub filters: bool,
}

/// Counts guard evaluations per (pattern, assignment).
#[derive(Clone, Debug, Default)]
pub struct GuardCounter {
    calls: Arc<Mutex<HashMap<(usize, Vec<i64>), u32>>>,
}

impl GuardCounter {
    fn hit(&self, pattern: usize, env: &LookupEnv) {
        let ids: Vec<i64> = env
            .iter()
            .filter(|(n, _)| n.starts_with("id"))
            .map(|(_, v)| v.as_int().expect("ids are integers"))
            .collect();
        *self.calls.lock().unwrap().entry((pattern, ids)).or_default() += 1;
    }

    pub fn max_per_assignment(&self) -> u32 {
        self.calls.lock().unwrap().values().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.calls.lock().unwrap().values().map(|&c| u64::from(c)).sum()
    }

    pub fn reset(&self) {
        self.calls.lock().unwrap().clear();
    }
}

/// A random trace plus the pattern list it is replayed against.
#[derive(Clone, Debug)]
pub struct RandomCase {
    pub seed: u64,
    pub messages: Vec<Record>,
    pub patterns: Vec<PatternSpec>,
}

#[derive(Clone, Copy, Debug)]
pub struct CaseShape {
    pub max_messages: usize,
    pub max_patterns: usize,
    pub max_size: usize,
    pub tags: u32,
    pub max_value: i64,
}

impl Default for CaseShape {
    fn default() -> Self {
        Self {
            max_messages: 30,
            max_patterns: 3,
            max_size: 4,
            tags: 4,
            max_value: 3,
        }
    }
}

impl RandomCase {
    pub fn generate(seed: u64, shape: CaseShape) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_patterns = rng.gen_range(1..=shape.max_patterns);
        let patterns = (0..n_patterns)
            .map(|_| {
                let size = rng.gen_range(1..=shape.max_size.min(4));
                let tags: Vec<Tag> = (0..size).map(|_| Tag(rng.gen_range(0..shape.tags))).collect();
                let guard = if rng.gen_bool(0.2) {
                    Vec::new()
                } else {
                    (0..rng.gen_range(1..=2)).map(|_| random_atom(&mut rng, size, shape.max_value)).collect()
                };
                PatternSpec {
                    tags,
                    guard,
                    filters: rng.gen_bool(0.5),
                }
            })
            .collect();
        let n = rng.gen_range(0..=shape.max_messages);
        let messages = (0..n)
            .map(|i| {
                // One extra tag that no pattern is likely to mention.
                let tag = Tag(rng.gen_range(0..=shape.tags));
                Record::new(tag)
                    .with("id", i as i64)
                    .with("v", rng.gen_range(0..=shape.max_value))
            })
            .collect();
        Self {
            seed,
            messages,
            patterns,
        }
    }

    /// Fresh join patterns; guards report to `counter` when given.
    pub fn build(&self, counter: Option<&GuardCounter>) -> Vec<JoinPattern<Record, ()>> {
        self.patterns
            .iter()
            .enumerate()
            .map(|(pi, spec)| build_spec(pi, spec, counter.cloned()))
            .collect()
    }
}

fn random_atom(rng: &mut ChaCha8Rng, size: usize, max_value: i64) -> Atom {
    let a = rng.gen_range(0..size);
    let b = rng.gen_range(0..size);
    match rng.gen_range(0..10) {
        0 => Atom::Const(rng.gen_bool(0.7)),
        1 | 2 => Atom::Eq(a, b),
        3 | 4 => Atom::Lt(a, b),
        5 | 6 => {
            let modulus = rng.gen_range(2..=3);
            Atom::SumMod {
                modulus,
                rest: rng.gen_range(0..modulus),
            }
        }
        _ => Atom::AtLeast(a, rng.gen_range(0..=max_value)),
    }
}

fn build_spec(pi: usize, spec: &PatternSpec, counter: Option<GuardCounter>) -> JoinPattern<Record, ()> {
    let size = spec.tags.len();
    let slots: Vec<SlotDescriptor<Record>> = spec
        .tags
        .iter()
        .enumerate()
        .map(|(i, &tag)| {
            let mut slot = field_slot(tag, &[("id", ID[i]), ("v", V[i])]);
            let unique = spec.tags.iter().filter(|&&t| t == tag).count() == 1;
            if spec.filters && unique {
                // The filter restates this slot's own guard conjuncts.
                let own: Vec<i64> = spec
                    .guard
                    .iter()
                    .filter_map(|a| match *a {
                        Atom::AtLeast(s, t) if s == i => Some(t),
                        _ => None,
                    })
                    .collect();
                if !own.is_empty() {
                    slot = slot.filter(move |r: &Record| {
                        let v = r.int("v").unwrap_or(0);
                        own.iter().all(|&t| v >= t)
                    });
                }
            }
            slot
        })
        .collect();
    let mut builder = JoinPattern::builder().slots(slots);
    if !spec.guard.is_empty() || counter.is_some() {
        let atoms = spec.guard.clone();
        builder = builder.guard(move |env| {
            if let Some(c) = &counter {
                c.hit(pi, env);
            }
            let v: Vec<i64> = V[..size].iter().map(|n| env.int(n)).collect();
            atoms.iter().all(|a| a.eval(&v))
        });
    }
    builder
        .rhs(|_, _| ResultControl::Continue)
        .build()
        .expect("generated patterns are well formed")
}
