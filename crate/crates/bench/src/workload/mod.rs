//! Message generators and actor setups for each benchmark.

pub mod bounded_buffer;
pub mod micro;
pub mod smart_house;
pub mod synthetic;

use std::time::{Duration, Instant};

use joinmatch::actor::{spawn_actor, ActorFailure};
use joinmatch::engine::{MatcherError, MatcherFactory};
use joinmatch::model::{JoinPattern, Message};
use thiserror::Error;

/// One measured run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trial {
    pub elapsed: Duration,
    pub matches: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrialError {
    #[error("timed out")]
    Timeout,
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error(transparent)]
    Matcher(#[from] MatcherError),
}

impl From<ActorFailure> for TrialError {
    fn from(f: ActorFailure) -> Self {
        TrialError::Assertion(f.to_string())
    }
}

/// Spawns an actor, sends `messages` as fast as possible, and waits for it to stop.
/// The clock starts at the first send.
pub fn drive<M, T>(
    patterns: Vec<JoinPattern<M, T>>,
    factory: &MatcherFactory,
    messages: Vec<M>,
    timeout: Duration,
) -> Result<(T, Duration), TrialError>
where
    M: Message,
    T: Send + 'static,
{
    let (done, me) = spawn_actor(patterns, factory)?;
    let start = Instant::now();
    for m in messages {
        me.send(m);
    }
    match done.wait_timeout(timeout.saturating_sub(start.elapsed())) {
        None => Err(TrialError::Timeout),
        Some(result) => Ok((result?, start.elapsed())),
    }
}

/// Time left before `deadline`, zero once it has passed.
pub(crate) fn remaining(deadline: Instant) -> Duration {
    deadline.saturating_duration_since(Instant::now())
}
