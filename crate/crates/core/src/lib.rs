//! Actors that react to combinations of messages through guarded join patterns,
//! matched fairly: among all guard-true matches, the one consuming the oldest
//! messages fires.
//!
//! ```
//! use joinmatch::prelude::*;
//!
//! #[derive(Debug)]
//! enum Msg { Left(i64), Right(i64), Done }
//! impl Message for Msg {
//!     fn tag(&self) -> Tag {
//!         match self { Msg::Left(_) => Tag(0), Msg::Right(_) => Tag(1), Msg::Done => Tag(2) }
//!     }
//! }
//! fn val(m: &Msg, out: &mut Vec<Value>) {
//!     if let Msg::Left(v) | Msg::Right(v) = m { out.push(Value::Int(*v)) }
//! }
//!
//! let sum = JoinPattern::builder()
//!     .slot(SlotDescriptor::new(Tag(0)).bind(&["a"], val))
//!     .slot(SlotDescriptor::new(Tag(1)).bind(&["b"], val))
//!     .guard(|env| env.int("a") == env.int("b"))
//!     .rhs(|env, _| ResultControl::Stop(env.int("a") * 2))
//!     .build()
//!     .unwrap();
//! let (done, me) = spawn_actor(vec![sum], &MatcherFactory::new(MatcherKind::WhileLazy)).unwrap();
//! me.send(Msg::Right(4));
//! me.send(Msg::Left(3));
//! me.send(Msg::Left(4));
//! assert_eq!(done.wait(), Ok(8));
//! # let _ = Msg::Done;
//! ```

pub mod actor;
pub mod engine;
pub mod model;
pub mod oracle;
pub mod parallel;
pub mod record;
pub mod testkit;
pub mod trace;
pub mod tree;

pub mod prelude {
    pub use crate::actor::{spawn_actor, spawn_simple, ActorFailure, ActorRef, CompletionHandle};
    pub use crate::engine::{JoinMatcher, Matcher, MatcherFactory, MatcherKind};
    pub use crate::model::{
        JoinPattern, LookupEnv, Message, ResultControl, SlotDescriptor, Tag, Value,
    };
    pub use crate::parallel::ParallelConfig;
}
