//! Minimal actor runtime: one thread per actor, unbounded mailboxes.

use std::any::Any;
use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::thread;
use std::time::Duration;

use crossbeam_channel::{Receiver, RecvTimeoutError, Sender, TryRecvError};
use thiserror::Error;

use crate::engine::{Disconnected, Matcher, MatcherError, MatcherFactory};
use crate::model::{JoinPattern, Message, ResultControl};

/// Send endpoint of an actor. Cheap to clone and share between threads.
pub struct ActorRef<M> {
    tx: Sender<M>,
}

impl<M> Clone for ActorRef<M> {
    fn clone(&self) -> Self {
        Self {
            tx: self.tx.clone(),
        }
    }
}

impl<M> fmt::Debug for ActorRef<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ActorRef(..)")
    }
}

impl<M> ActorRef<M> {
    /// Never blocks. Messages sent to a stopped actor are dropped.
    pub fn send(&self, msg: M) {
        let _ = self.tx.send(msg);
    }

    /// Messages waiting in the mailbox.
    pub fn pending(&self) -> usize {
        self.tx.len()
    }
}

/// Receive side of an actor's queue. Owned by exactly one loop.
pub struct Mailbox<M> {
    rx: Receiver<M>,
}

impl<M> fmt::Debug for Mailbox<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mailbox({} pending)", self.rx.len())
    }
}

/// Creates an unbounded mailbox and its first reference.
pub fn mailbox<M>() -> (Mailbox<M>, ActorRef<M>) {
    let (tx, rx) = crossbeam_channel::unbounded();
    (Mailbox { rx }, ActorRef { tx })
}

impl<M> Mailbox<M> {
    /// Blocks until a message arrives; `None` once every reference is gone.
    pub fn take(&self) -> Option<M> {
        self.rx.recv().ok()
    }

    pub fn try_take(&self) -> Option<M> {
        match self.rx.try_recv() {
            Ok(m) => Some(m),
            Err(TryRecvError::Empty | TryRecvError::Disconnected) => None,
        }
    }

    pub fn take_timeout(&self, timeout: Duration) -> Option<M> {
        match self.rx.recv_timeout(timeout) {
            Ok(m) => Some(m),
            Err(RecvTimeoutError::Timeout | RecvTimeoutError::Disconnected) => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rx.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rx.len()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActorFailure {
    #[error("actor panicked: {0}")]
    Panicked(String),
    #[error("actor mailbox disconnected before the actor stopped")]
    Disconnected,
}

/// One-shot slot completed with the actor's final value.
pub struct CompletionHandle<T> {
    rx: Receiver<Result<T, ActorFailure>>,
}

impl<T> fmt::Debug for CompletionHandle<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CompletionHandle(..)")
    }
}

impl<T> CompletionHandle<T> {
    fn pair() -> (Sender<Result<T, ActorFailure>>, Self) {
        let (tx, rx) = crossbeam_channel::bounded(1);
        (tx, Self { rx })
    }

    pub fn wait(self) -> Result<T, ActorFailure> {
        self.rx.recv().unwrap_or(Err(ActorFailure::Disconnected))
    }

    /// `None` if the actor has not finished within `timeout`.
    pub fn wait_timeout(&self, timeout: Duration) -> Option<Result<T, ActorFailure>> {
        match self.rx.recv_timeout(timeout) {
            Ok(r) => Some(r),
            Err(RecvTimeoutError::Timeout) => None,
            Err(RecvTimeoutError::Disconnected) => Some(Err(ActorFailure::Disconnected)),
        }
    }

    pub fn try_get(&self) -> Option<Result<T, ActorFailure>> {
        self.rx.try_recv().ok()
    }
}

fn panic_message(payload: Box<dyn Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_owned()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_owned()
    }
}

fn run_loop<M, T, F>(mailbox: Mailbox<M>, me: ActorRef<M>, done: Sender<Result<T, ActorFailure>>, mut step: F)
where
    F: FnMut(&Mailbox<M>, &ActorRef<M>) -> Result<ResultControl<T>, Disconnected>,
{
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| loop {
        match step(&mailbox, &me) {
            Ok(ResultControl::Continue) => {}
            Ok(ResultControl::Stop(v)) => break Ok(v),
            Err(Disconnected) => break Err(ActorFailure::Disconnected),
        }
    }));
    let result = outcome.unwrap_or_else(|p| Err(ActorFailure::Panicked(panic_message(p))));
    // Release the mailbox before publishing, so later sends are dropped.
    drop(mailbox);
    let _ = done.send(result);
}

/// Starts an actor driving `matcher` on its own thread.
pub fn start<M, T, X>(mut matcher: X) -> (CompletionHandle<T>, ActorRef<M>)
where
    M: Send + 'static,
    T: Send + 'static,
    X: Matcher<M, T> + 'static,
{
    let (mb, me) = mailbox();
    let (done, handle) = CompletionHandle::pair();
    let loop_ref = me.clone();
    thread::Builder::new()
        .name("join-actor".into())
        .spawn(move || run_loop(mb, loop_ref, done, |mb, me| matcher.run_until_fire(mb, me)))
        .expect("failed to spawn actor thread");
    (handle, me)
}

/// Builds a matcher for `patterns` with `factory` and starts an actor around it.
pub fn spawn_actor<M, T>(
    patterns: Vec<JoinPattern<M, T>>,
    factory: &MatcherFactory,
) -> Result<(CompletionHandle<T>, ActorRef<M>), MatcherError>
where
    M: Message,
    T: Send + 'static,
{
    let matcher = factory.instantiate(patterns)?;
    Ok(start(matcher))
}

/// One step of the one-message-at-a-time baseline actor: messages the handler does
/// not accept are dropped.
pub fn simple_actor_step<M, T, H>(
    handler: &mut H,
    mailbox: &Mailbox<M>,
    me: &ActorRef<M>,
) -> Result<ResultControl<T>, Disconnected>
where
    H: FnMut(M, &ActorRef<M>) -> Option<ResultControl<T>>,
{
    let msg = mailbox.take().ok_or(Disconnected)?;
    Ok(handler(msg, me).unwrap_or(ResultControl::Continue))
}

/// Starts a baseline actor that handles each message individually.
pub fn spawn_simple<M, T, H>(mut handler: H) -> (CompletionHandle<T>, ActorRef<M>)
where
    M: Send + 'static,
    T: Send + 'static,
    H: FnMut(M, &ActorRef<M>) -> Option<ResultControl<T>> + Send + 'static,
{
    let (mb, me) = mailbox();
    let (done, handle) = CompletionHandle::pair();
    let loop_ref = me.clone();
    thread::Builder::new()
        .name("simple-actor".into())
        .spawn(move || {
            run_loop(mb, loop_ref, done, |mb, me| simple_actor_step(&mut handler, mb, me))
        })
        .expect("failed to spawn actor thread");
    (handle, me)
}
