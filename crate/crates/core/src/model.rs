//! Messages, join patterns, binding environments and the fairness order.

use std::any::Any;
use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;
use thiserror::Error;

use crate::actor::ActorRef;

/// Position of a message in the order a matcher received it.
pub type ArrivalIndex = u64;

/// Inline storage for index tuples; patterns rarely exceed a handful of slots.
pub type IndexVec = SmallVec<[ArrivalIndex; 6]>;

/// Message-type identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tag(pub u32);

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Bidirectional name table for tags, used by the textual trace format.
#[derive(Clone, Debug, Default)]
pub struct TagTable {
    names: Vec<String>,
}

impl TagTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            names: names.into_iter().map(Into::into).collect(),
        }
    }

    /// Returns the tag for `name`, registering it if unseen.
    pub fn intern(&mut self, name: &str) -> Tag {
        if let Some(tag) = self.lookup(name) {
            return tag;
        }
        self.names.push(name.to_owned());
        Tag((self.names.len() - 1) as u32)
    }

    pub fn lookup(&self, name: &str) -> Option<Tag> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| Tag(i as u32))
    }

    pub fn name(&self, tag: Tag) -> Option<&str> {
        self.names.get(tag.0 as usize).map(String::as_str)
    }
}

/// Anything an actor can receive. The tag decides which slots a message may fill.
pub trait Message: Send + Sync + 'static {
    fn tag(&self) -> Tag;
}

/// A payload stamped with its arrival index.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageInstance<M> {
    pub index: ArrivalIndex,
    pub payload: M,
}

/// Monotone arrival counter owned by one matcher.
#[derive(Clone, Debug, Default)]
pub struct Stamper {
    next: ArrivalIndex,
}

impl Stamper {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(first: ArrivalIndex) -> Self {
        Self { next: first }
    }

    pub fn stamp<M>(&mut self, payload: M) -> MessageInstance<M> {
        let index = self.next;
        self.next += 1;
        MessageInstance { index, payload }
    }

    pub fn peek(&self) -> ArrivalIndex {
        self.next
    }
}

/// Dynamically typed binding value.
#[derive(Clone)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(i64),
    Str(Arc<str>),
    /// Arbitrary shared data (actor references and the like). Equality is pointer identity.
    Any(Arc<dyn Any + Send + Sync>),
}

impl Value {
    pub fn any<T: Any + Send + Sync>(value: T) -> Self {
        Value::Any(Arc::new(value))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(v) => Some(v),
            _ => None,
        }
    }

    pub fn downcast_ref<T: Any>(&self) -> Option<&T> {
        match self {
            Value::Any(v) => v.downcast_ref(),
            _ => None,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Unit, Value::Unit) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Any(a), Value::Any(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Str(v) => write!(f, "{v:?}"),
            Value::Any(_) => f.write_str("<any>"),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.into())
    }
}

impl From<Arc<str>> for Value {
    fn from(v: Arc<str>) -> Self {
        Value::Str(v)
    }
}

/// Variables bound by a pattern's slots, in slot order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LookupEnv {
    names: Vec<&'static str>,
    values: Vec<Value>,
}

impl LookupEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            names: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
        }
    }

    pub fn bind(&mut self, name: &'static str, value: Value) {
        self.names.push(name);
        self.values.push(value);
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.names
            .iter()
            .position(|n| *n == name)
            .map(|i| &self.values[i])
    }

    /// Integer binding; panics when absent or of another kind, like a failed downcast.
    pub fn int(&self, name: &str) -> i64 {
        self.expect(name)
            .as_int()
            .unwrap_or_else(|| panic!("binding `{name}` is not an integer"))
    }

    pub fn bool(&self, name: &str) -> bool {
        self.expect(name)
            .as_bool()
            .unwrap_or_else(|| panic!("binding `{name}` is not a boolean"))
    }

    pub fn str(&self, name: &str) -> &str {
        self.expect(name)
            .as_str()
            .unwrap_or_else(|| panic!("binding `{name}` is not a string"))
    }

    fn expect(&self, name: &str) -> &Value {
        self.get(name)
            .unwrap_or_else(|| panic!("no binding named `{name}`"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &Value)> {
        self.names.iter().copied().zip(self.values.iter())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

pub type Binder<M> = Arc<dyn Fn(&M, &mut Vec<Value>) + Send + Sync>;
pub type Filter<M> = Arc<dyn Fn(&M) -> bool + Send + Sync>;
pub type Guard = Arc<dyn Fn(&LookupEnv) -> bool + Send + Sync>;
pub type Rhs<M, T> = Box<dyn FnMut(&LookupEnv, &ActorRef<M>) -> ResultControl<T> + Send>;

/// One message position of a join pattern.
pub struct SlotDescriptor<M> {
    tag: Tag,
    names: Vec<&'static str>,
    binder: Option<Binder<M>>,
    filter: Option<Filter<M>>,
}

impl<M> Clone for SlotDescriptor<M> {
    fn clone(&self) -> Self {
        Self {
            tag: self.tag,
            names: self.names.clone(),
            binder: self.binder.clone(),
            filter: self.filter.clone(),
        }
    }
}

impl<M> fmt::Debug for SlotDescriptor<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlotDescriptor")
            .field("tag", &self.tag)
            .field("names", &self.names)
            .field("filtered", &self.filter.is_some())
            .finish()
    }
}

impl<M> SlotDescriptor<M> {
    /// A slot accepting messages tagged `tag`, binding nothing.
    pub fn new(tag: Tag) -> Self {
        Self {
            tag,
            names: Vec::new(),
            binder: None,
            filter: None,
        }
    }

    /// Declares the variables this slot binds. `binder` must push exactly one value
    /// per name, in the same order.
    pub fn bind<F>(mut self, names: &[&'static str], binder: F) -> Self
    where
        F: Fn(&M, &mut Vec<Value>) + Send + Sync + 'static,
    {
        self.names = names.to_vec();
        self.binder = Some(Arc::new(binder));
        self
    }

    /// Attaches a filtering clause: a predicate over this slot's payload alone.
    pub fn filter<F>(mut self, filter: F) -> Self
    where
        F: Fn(&M) -> bool + Send + Sync + 'static,
    {
        self.filter = Some(Arc::new(filter));
        self
    }

    pub fn tag(&self) -> Tag {
        self.tag
    }

    pub fn names(&self) -> &[&'static str] {
        &self.names
    }

    pub fn has_filter(&self) -> bool {
        self.filter.is_some()
    }

    /// Evaluates the filtering clause; slots without one admit everything.
    pub fn admits(&self, payload: &M) -> bool {
        self.filter.as_ref().map_or(true, |f| f(payload))
    }

    pub(crate) fn bind_into(&self, payload: &M, env: &mut LookupEnv, scratch: &mut Vec<Value>) {
        let Some(binder) = &self.binder else { return };
        scratch.clear();
        binder(payload, scratch);
        debug_assert_eq!(
            scratch.len(),
            self.names.len(),
            "binder produced a different number of values than declared names"
        );
        for (name, value) in self.names.iter().zip(scratch.drain(..)) {
            env.bind(name, value);
        }
    }
}

/// The bindings a slot would produce for `msg`, or `None` when the tag does not fit.
pub fn slot_fits<M: Message>(
    slot: &SlotDescriptor<M>,
    msg: &MessageInstance<M>,
) -> Option<Vec<(&'static str, Value)>> {
    if msg.payload.tag() != slot.tag {
        return None;
    }
    let mut env = LookupEnv::with_capacity(slot.names.len());
    slot.bind_into(&msg.payload, &mut env, &mut Vec::new());
    Some(env.iter().map(|(n, v)| (n, v.clone())).collect())
}

/// The matching half of a join pattern: slots plus guard. Shared with engine workers.
pub struct Pattern<M> {
    slots: Vec<SlotDescriptor<M>>,
    guard: Option<Guard>,
    by_tag: Vec<(Tag, SmallVec<[usize; 4]>)>,
    bindings: usize,
}

impl<M> fmt::Debug for Pattern<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pattern")
            .field("slots", &self.slots)
            .field("guarded", &self.guard.is_some())
            .finish()
    }
}

impl<M> Pattern<M> {
    pub fn size(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[SlotDescriptor<M>] {
        &self.slots
    }

    /// Slot positions grouped by expected tag, in first-occurrence order.
    pub fn positions_by_tag(&self) -> &[(Tag, SmallVec<[usize; 4]>)] {
        &self.by_tag
    }

    pub fn positions_for(&self, tag: Tag) -> Option<&[usize]> {
        self.by_tag
            .iter()
            .find(|(t, _)| *t == tag)
            .map(|(_, p)| p.as_slice())
    }

    pub fn fits(&self, tag: Tag) -> bool {
        self.by_tag.iter().any(|(t, _)| *t == tag)
    }

    /// True when no guard was supplied; engines may skip environment assembly.
    pub fn is_unguarded(&self) -> bool {
        self.guard.is_none()
    }

    pub fn eval_guard(&self, env: &LookupEnv) -> bool {
        self.guard.as_ref().map_or(true, |g| g(env))
    }

    /// Builds the environment from payloads listed in slot order.
    pub fn env_from<'a, I>(&self, payloads: I) -> LookupEnv
    where
        I: IntoIterator<Item = &'a M>,
        M: 'a,
    {
        let mut env = LookupEnv::with_capacity(self.bindings);
        let mut scratch = Vec::new();
        for (slot, payload) in self.slots.iter().zip(payloads) {
            slot.bind_into(payload, &mut env, &mut scratch);
        }
        env
    }

    /// Rejects filters attached to slots whose tag occurs more than once.
    pub fn validate_filters(&self) -> Result<(), BuildError> {
        for (position, slot) in self.slots.iter().enumerate() {
            if !slot.has_filter() {
                continue;
            }
            let occurrences = self.slots.iter().filter(|s| s.tag == slot.tag).count();
            if occurrences != 1 {
                return Err(BuildError::InvalidFilter {
                    slot: position,
                    tag: slot.tag,
                });
            }
        }
        Ok(())
    }
}

/// A complete join pattern: matching half plus the right-hand side.
pub struct JoinPattern<M, T> {
    pub(crate) pattern: Arc<Pattern<M>>,
    pub(crate) rhs: Rhs<M, T>,
}

impl<M, T> fmt::Debug for JoinPattern<M, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.pattern.fmt(f)
    }
}

impl<M: Message, T> JoinPattern<M, T> {
    pub fn builder() -> PatternBuilder<M, T> {
        PatternBuilder {
            slots: Vec::new(),
            guard: None,
            rhs: None,
        }
    }

    pub fn pattern(&self) -> &Arc<Pattern<M>> {
        &self.pattern
    }

    pub fn size(&self) -> usize {
        self.pattern.size()
    }

    pub(crate) fn run_rhs(&mut self, env: &LookupEnv, me: &ActorRef<M>) -> ResultControl<T> {
        (self.rhs)(env, me)
    }
}

pub struct PatternBuilder<M, T> {
    slots: Vec<SlotDescriptor<M>>,
    guard: Option<Guard>,
    rhs: Option<Rhs<M, T>>,
}

impl<M: Message, T> PatternBuilder<M, T> {
    pub fn slot(mut self, slot: SlotDescriptor<M>) -> Self {
        self.slots.push(slot);
        self
    }

    pub fn slots<I: IntoIterator<Item = SlotDescriptor<M>>>(mut self, slots: I) -> Self {
        self.slots.extend(slots);
        self
    }

    pub fn guard<G>(mut self, guard: G) -> Self
    where
        G: Fn(&LookupEnv) -> bool + Send + Sync + 'static,
    {
        self.guard = Some(Arc::new(guard));
        self
    }

    pub fn shared_guard(mut self, guard: Guard) -> Self {
        self.guard = Some(guard);
        self
    }

    pub fn rhs<F>(mut self, rhs: F) -> Self
    where
        F: FnMut(&LookupEnv, &ActorRef<M>) -> ResultControl<T> + Send + 'static,
    {
        self.rhs = Some(Box::new(rhs));
        self
    }

    pub fn build(self) -> Result<JoinPattern<M, T>, BuildError> {
        let pattern = build_pattern(self.slots, self.guard)?;
        let rhs = self.rhs.ok_or(BuildError::MissingRhs)?;
        Ok(JoinPattern {
            pattern: Arc::new(pattern),
            rhs,
        })
    }
}

/// Validates slots and guard into the matching half of a pattern.
pub fn build_pattern<M>(
    slots: Vec<SlotDescriptor<M>>,
    guard: Option<Guard>,
) -> Result<Pattern<M>, BuildError> {
    if slots.is_empty() {
        return Err(BuildError::EmptyPattern);
    }
    let mut seen: Vec<&'static str> = Vec::new();
    for name in slots.iter().flat_map(|s| s.names.iter()) {
        if seen.contains(name) {
            return Err(BuildError::DuplicateBinding(name));
        }
        seen.push(name);
    }
    let mut by_tag: Vec<(Tag, SmallVec<[usize; 4]>)> = Vec::new();
    for (position, slot) in slots.iter().enumerate() {
        match by_tag.iter_mut().find(|(t, _)| *t == slot.tag) {
            Some((_, positions)) => positions.push(position),
            None => by_tag.push((slot.tag, smallvec::smallvec![position])),
        }
    }
    let pattern = Pattern {
        bindings: seen.len(),
        slots,
        guard,
        by_tag,
    };
    pattern.validate_filters()?;
    Ok(pattern)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuildError {
    #[error("a join pattern needs at least one slot")]
    EmptyPattern,
    #[error("binding `{0}` is declared by more than one slot")]
    DuplicateBinding(&'static str),
    #[error("slot {slot} carries a filter but its tag {tag} occurs more than once in the pattern")]
    InvalidFilter { slot: usize, tag: Tag },
    #[error("join pattern has no right-hand side")]
    MissingRhs,
}

/// Assembles the guard environment for a complete assignment.
pub fn assemble_env<'a, M, F>(
    pattern: &Pattern<M>,
    slot_tuple: &[ArrivalIndex],
    lookup: F,
) -> Result<LookupEnv, MissingMessage>
where
    M: 'a,
    F: Fn(ArrivalIndex) -> Option<&'a M>,
{
    let payloads = slot_tuple
        .iter()
        .map(|&i| lookup(i).ok_or(MissingMessage(i)))
        .collect::<Result<SmallVec<[&M; 6]>, _>>()?;
    Ok(pattern.env_from(payloads))
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("message {0} is referenced by an assignment but not buffered")]
pub struct MissingMessage(pub ArrivalIndex);

/// A complete, tag-consistent assignment of buffered messages to one pattern's slots.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CandidateMatch {
    pub pattern_index: usize,
    /// Arrival index per slot, in slot order.
    pub slot_tuple: IndexVec,
    /// The same indices sorted ascending.
    pub key: IndexVec,
}

impl CandidateMatch {
    pub fn new(pattern_index: usize, slot_tuple: IndexVec) -> Self {
        let mut key = slot_tuple.clone();
        key.sort_unstable();
        Self {
            pattern_index,
            slot_tuple,
            key,
        }
    }

    pub(crate) fn with_key(pattern_index: usize, slot_tuple: IndexVec, key: IndexVec) -> Self {
        debug_assert!(key.windows(2).all(|w| w[0] < w[1]));
        Self {
            pattern_index,
            slot_tuple,
            key,
        }
    }
}

/// Fairness order: `Less` means `a` is fairer. Compares sorted keys lexicographically,
/// then declaration order, then the slot tuple.
pub fn compare_matches(a: &CandidateMatch, b: &CandidateMatch) -> Ordering {
    a.key
        .as_slice()
        .cmp(b.key.as_slice())
        .then(a.pattern_index.cmp(&b.pattern_index))
        .then_with(|| a.slot_tuple.as_slice().cmp(b.slot_tuple.as_slice()))
}

impl Ord for CandidateMatch {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_matches(self, other)
    }
}

impl PartialOrd for CandidateMatch {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// What a right-hand side tells the actor loop to do next.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ResultControl<T> {
    Continue,
    Stop(T),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, Debug)]
    enum Pay {
        Requested(i64),
        Merchant(i64),
        Customer(i64),
        Shutdown,
    }

    const REQ: Tag = Tag(0);
    const MER: Tag = Tag(1);
    const CUS: Tag = Tag(2);
    const SHUT: Tag = Tag(3);

    impl Message for Pay {
        fn tag(&self) -> Tag {
            match self {
                Pay::Requested(_) => REQ,
                Pay::Merchant(_) => MER,
                Pay::Customer(_) => CUS,
                Pay::Shutdown => SHUT,
            }
        }
    }

    fn id_of(m: &Pay) -> i64 {
        match m {
            Pay::Requested(i) | Pay::Merchant(i) | Pay::Customer(i) => *i,
            Pay::Shutdown => unreachable!(),
        }
    }

    fn id_slot(tag: Tag, name: &'static str) -> SlotDescriptor<Pay> {
        SlotDescriptor::new(tag).bind(&[name], |m: &Pay, out| out.push(id_of(m).into()))
    }

    fn payment() -> JoinPattern<Pay, ()> {
        JoinPattern::builder()
            .slot(id_slot(REQ, "id1"))
            .slot(id_slot(MER, "id2"))
            .slot(id_slot(CUS, "id3"))
            .guard(|env| env.int("id1") == env.int("id2") && env.int("id2") == env.int("id3"))
            .rhs(|_, _| ResultControl::Continue)
            .build()
            .unwrap()
    }

    fn cm(p: usize, slots: &[u64]) -> CandidateMatch {
        CandidateMatch::new(p, slots.iter().copied().collect())
    }

    #[test]
    fn stamping_is_monotone_from_zero() {
        let mut s = Stamper::new();
        let idx: Vec<_> = (0..3).map(|i| s.stamp(i).index).collect();
        assert_eq!(idx, [0, 1, 2]);
        let mut s = Stamper::starting_at(1);
        let idx: Vec<_> = ["A", "C", "B", "D"].into_iter().map(|p| s.stamp(p).index).collect();
        assert_eq!(idx, [1, 2, 3, 4]);
    }

    #[test]
    fn comparator_examples() {
        assert_eq!(compare_matches(&cm(0, &[1, 2, 3]), &cm(0, &[1, 2, 4])), Ordering::Less);
        assert_eq!(compare_matches(&cm(0, &[3, 1]), &cm(2, &[1, 3])), Ordering::Less);
        assert_eq!(compare_matches(&cm(1, &[9, 0]), &cm(0, &[1, 2])), Ordering::Less);
        assert_eq!(compare_matches(&cm(0, &[2, 1]), &cm(0, &[1, 2])), Ordering::Greater);
        assert_eq!(compare_matches(&cm(0, &[1, 2]), &cm(0, &[1, 2])), Ordering::Equal);
    }

    #[test]
    fn payment_pattern_has_size_three() {
        assert_eq!(payment().size(), 3);
        let unary: JoinPattern<Pay, ()> = JoinPattern::builder()
            .slot(SlotDescriptor::new(SHUT))
            .rhs(|_, _| ResultControl::Stop(()))
            .build()
            .unwrap();
        assert_eq!(unary.size(), 1);
        assert!(unary.pattern().is_unguarded());
    }

    #[test]
    fn duplicate_bindings_are_rejected() {
        let err = JoinPattern::<Pay, ()>::builder()
            .slot(id_slot(REQ, "x"))
            .slot(id_slot(MER, "x"))
            .rhs(|_, _| ResultControl::Continue)
            .build()
            .unwrap_err();
        assert_eq!(err, BuildError::DuplicateBinding("x"));
    }

    #[test]
    fn filters_on_repeated_tags_are_rejected() {
        let foo = Tag(10);
        let bar = Tag(11);
        let slot = |t| SlotDescriptor::<Pay>::new(t);
        let ok = build_pattern(
            vec![slot(foo).filter(|_| true), slot(bar), slot(bar)],
            None,
        );
        assert!(ok.is_ok());
        let err = build_pattern(
            vec![slot(foo), slot(bar).filter(|_| true), slot(bar)],
            None,
        )
        .unwrap_err();
        assert_eq!(err, BuildError::InvalidFilter { slot: 1, tag: bar });
        assert!(build_pattern(vec![slot(foo).filter(|_| false)], None).is_ok());
        assert_eq!(
            build_pattern::<Pay>(vec![], None).unwrap_err(),
            BuildError::EmptyPattern
        );
    }

    #[test]
    fn slot_fits_checks_tag_and_binds() {
        let p = payment();
        let msg = MessageInstance { index: 0, payload: Pay::Requested(7) };
        let bound = slot_fits(&p.pattern().slots()[0], &msg).unwrap();
        assert_eq!(bound, vec![("id1", Value::Int(7))]);
        assert!(slot_fits(&p.pattern().slots()[1], &msg).is_none());
        let shut = MessageInstance { index: 1, payload: Pay::Shutdown };
        assert_eq!(slot_fits(&SlotDescriptor::new(SHUT), &shut), Some(vec![]));
    }

    #[test]
    fn env_assembly_feeds_the_guard() {
        let p = payment();
        let buf = [Pay::Requested(5), Pay::Merchant(5), Pay::Customer(5), Pay::Customer(6)];
        let look = |i: u64| buf.get(i as usize);
        let env = assemble_env(p.pattern(), &[0, 1, 2], look).unwrap();
        assert_eq!(env.int("id1"), 5);
        assert_eq!(env.int("id3"), 5);
        assert!(p.pattern().eval_guard(&env));
        let env = assemble_env(p.pattern(), &[0, 1, 3], look).unwrap();
        assert!(!p.pattern().eval_guard(&env));
        assert_eq!(
            assemble_env(p.pattern(), &[0, 1, 9], look).unwrap_err(),
            MissingMessage(9)
        );
        let unary = build_pattern::<Pay>(vec![SlotDescriptor::new(SHUT)], None).unwrap();
        assert!(assemble_env(&unary, &[0], |_| Some(&Pay::Shutdown)).unwrap().is_empty());
    }

    #[test]
    fn tag_table_round_trips_names() {
        let mut t = TagTable::from_names(["A", "B"]);
        assert_eq!(t.intern("B"), Tag(1));
        assert_eq!(t.intern("Z"), Tag(2));
        assert_eq!(t.name(Tag(2)), Some("Z"));
        assert_eq!(t.lookup("Q"), None);
    }
}
