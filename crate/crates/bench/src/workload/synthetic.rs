//! A single pattern `A && B && ...` of size 1 to 5, with or without an
//! equality guard, fed clean or noisy traffic.

use std::time::Duration;

use joinmatch::engine::MatcherFactory;
use joinmatch::model::{JoinPattern, Message, ResultControl, SlotDescriptor, Tag, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{drive, Trial, TrialError};
use crate::config::Workload;

/// Tag of messages that fit no slot (`F` next to `A..E`).
pub const NOISE_TAG: Tag = Tag(5);

const VARS: [&str; 5] = ["x0", "x1", "x2", "x3", "x4"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Synth {
    pub tag: Tag,
    pub value: i64,
}

impl Message for Synth {
    fn tag(&self) -> Tag {
        self.tag
    }
}

/// `matches` groups, one message per slot tag, each group carrying its own
/// non-negative payload and `noise` extra messages, shuffled within the group.
///
/// Payload noise uses distinct negative values, so it can never satisfy the guard.
pub fn gen_synthetic_traffic(
    size: usize,
    workload: Workload,
    matches: usize,
    noise: usize,
    seed: u64,
) -> Vec<Synth> {
    assert!((1..=5).contains(&size), "pattern size out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = if workload == Workload::Clean { 0 } else { noise };
    let mut out = Vec::with_capacity(matches * (size + noise));
    let mut negative = 0i64;
    for g in 0..matches {
        let value = g as i64;
        let mut window: Vec<Synth> = (0..size)
            .map(|t| Synth {
                tag: Tag(t as u32),
                value,
            })
            .collect();
        for _ in 0..noise {
            window.push(match workload {
                Workload::Clean => unreachable!(),
                Workload::NoiseTag => Synth {
                    tag: NOISE_TAG,
                    value,
                },
                Workload::NoisePayload => {
                    negative -= 1;
                    Synth {
                        tag: Tag(rng.gen_range(0..size as u32)),
                        value: negative,
                    }
                }
            });
        }
        window.shuffle(&mut rng);
        out.extend(window);
    }
    out
}

fn bind_value(m: &Synth, out: &mut Vec<Value>) {
    out.push(Value::Int(m.value));
}

/// The measured pattern. Its right-hand side stops the actor after `matches`
/// fires and returns the fire count.
pub fn synthetic_patterns(size: usize, guarded: bool, matches: usize) -> Vec<JoinPattern<Synth, u64>> {
    let slots = (0..size).map(|t| SlotDescriptor::new(Tag(t as u32)).bind(&VARS[t..=t], bind_value));
    let mut fired = 0u64;
    let mut builder = JoinPattern::builder().slots(slots).rhs(move |_, _| {
        fired += 1;
        if fired == matches as u64 {
            ResultControl::Stop(fired)
        } else {
            ResultControl::Continue
        }
    });
    if guarded {
        builder = builder.guard(move |env| {
            let first = env.int(VARS[0]);
            first >= 0 && VARS[1..size].iter().all(|v| env.int(v) == first)
        });
    }
    vec![builder.build().expect("synthetic pattern is well formed")]
}

#[allow(clippy::too_many_arguments)]
pub fn run_synthetic(
    size: usize,
    workload: Workload,
    guarded: bool,
    noise: usize,
    matches: usize,
    seed: u64,
    factory: &MatcherFactory,
    timeout: Duration,
) -> Result<Trial, TrialError> {
    let traffic = gen_synthetic_traffic(size, workload, matches, noise, seed);
    let (fired, elapsed) = drive(synthetic_patterns(size, guarded, matches), factory, traffic, timeout)?;
    if fired != matches as u64 {
        return Err(TrialError::Assertion(format!("expected {matches} fires, got {fired}")));
    }
    Ok(Trial {
        elapsed,
        matches: fired,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_layout() {
        let t = gen_synthetic_traffic(3, Workload::NoisePayload, 4, 2, 9);
        assert_eq!(t.len(), 4 * 5);
        for (g, w) in t.chunks(5).enumerate() {
            assert_eq!(w.iter().filter(|m| m.value == g as i64).count(), 3);
            assert_eq!(w.iter().filter(|m| m.value < 0).count(), 2);
        }
        let mut neg: Vec<i64> = t.iter().filter(|m| m.value < 0).map(|m| m.value).collect();
        neg.dedup();
        assert_eq!(neg.len(), 8);
    }
}
