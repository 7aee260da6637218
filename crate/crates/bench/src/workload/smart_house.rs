//! Smart house monitor: bathroom lighting and home arrival / departure
//! detection over overlapping three-message patterns.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use joinmatch::engine::MatcherFactory;
use joinmatch::model::{JoinPattern, LookupEnv, Message, ResultControl, SlotDescriptor, Tag, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{drive, Trial, TrialError};

/// Noise levels swept by default.
pub const NOISE_LEVELS: [usize; 7] = [0, 4, 8, 12, 16, 20, 24];

/// First timestamp of a generated run, in milliseconds since the epoch.
const EPOCH_MS: i64 = 1_700_000_000_000;
const GROUP_SPAN_MS: i64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Room {
    Bathroom,
    FrontDoor,
    EntranceHall,
    Kitchen,
    LivingRoom,
    Bedroom,
    Garage,
    GateDoor,
}

impl Room {
    pub const ALL: [Room; 8] = [
        Room::Bathroom,
        Room::FrontDoor,
        Room::EntranceHall,
        Room::Kitchen,
        Room::LivingRoom,
        Room::Bedroom,
        Room::Garage,
        Room::GateDoor,
    ];

    fn code(self) -> i64 {
        self as i64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Motion { id: u32, status: bool, room: Room, t: i64 },
    AmbientLight { id: u32, value: i64, room: Room, t: i64 },
    Light { id: u32, status: bool, room: Room, t: i64 },
    Contact { id: u32, status: bool, room: Room, t: i64 },
    ShutOff,
}

pub const MOTION: Tag = Tag(0);
pub const AMBIENT_LIGHT: Tag = Tag(1);
pub const LIGHT: Tag = Tag(2);
pub const CONTACT: Tag = Tag(3);
pub const SHUT_OFF: Tag = Tag(4);

impl Message for Action {
    fn tag(&self) -> Tag {
        match self {
            Action::Motion { .. } => MOTION,
            Action::AmbientLight { .. } => AMBIENT_LIGHT,
            Action::Light { .. } => LIGHT,
            Action::Contact { .. } => CONTACT,
            Action::ShutOff => SHUT_OFF,
        }
    }
}

impl Action {
    pub fn room(&self) -> Option<Room> {
        match *self {
            Action::Motion { room, .. }
            | Action::AmbientLight { room, .. }
            | Action::Light { room, .. }
            | Action::Contact { room, .. } => Some(room),
            Action::ShutOff => None,
        }
    }
}

/// Binds (status or value, room, time) in that order.
fn bind_reading(m: &Action, out: &mut Vec<Value>) {
    let (reading, room, t) = match *m {
        Action::Motion { status, room, t, .. }
        | Action::Light { status, room, t, .. }
        | Action::Contact { status, room, t, .. } => (Value::Bool(status), room, t),
        Action::AmbientLight { value, room, t, .. } => (Value::Int(value), room, t),
        Action::ShutOff => unreachable!("ShutOff binds nothing"),
    };
    out.extend([reading, Value::Int(room.code()), Value::Int(t)]);
}

fn slot(tag: Tag, names: &[&'static str; 3]) -> SlotDescriptor<Action> {
    SlotDescriptor::new(tag).bind(names, bind_reading)
}

fn in_room(room: Room) -> impl Fn(&Action) -> bool + Send + Sync + 'static {
    move |m| m.room() == Some(room)
}

fn is_sorted(env: &LookupEnv) -> bool {
    let (a, b, c) = (env.int("t0"), env.int("t1"), env.int("t2"));
    a <= b && b <= c
}

fn bathroom_occupied(env: &LookupEnv) -> bool {
    let bath = Room::Bathroom.code();
    is_sorted(env)
        && [env.int("mRoom"), env.int("lRoom"), env.int("alRoom")].iter().all(|&r| r == bath)
        && env.bool("mStatus")
        && !env.bool("lStatus")
        && env.int("value") <= 40
}

fn statuses_on(env: &LookupEnv) -> bool {
    env.bool("mStatus0") && env.bool("mStatus1") && env.bool("cStatus")
}

fn occupied_home(env: &LookupEnv) -> bool {
    is_sorted(env)
        && statuses_on(env)
        && env.int("mRoom0") == Room::FrontDoor.code()
        && env.int("cRoom") == Room::FrontDoor.code()
        && env.int("mRoom1") == Room::EntranceHall.code()
}

fn empty_home(env: &LookupEnv) -> bool {
    is_sorted(env)
        && statuses_on(env)
        && env.int("mRoom0") == Room::EntranceHall.code()
        && env.int("cRoom") == Room::FrontDoor.code()
        && env.int("mRoom1") == Room::FrontDoor.code()
}

fn counting(fired: &Arc<AtomicU64>) -> impl FnMut(&LookupEnv, &joinmatch::actor::ActorRef<Action>) -> ResultControl<u64> + Send + 'static {
    let fired = fired.clone();
    move |_, _| {
        fired.fetch_add(1, Ordering::Relaxed);
        ResultControl::Continue
    }
}

fn arrival_slots() -> Vec<SlotDescriptor<Action>> {
    vec![
        slot(MOTION, &["mStatus0", "mRoom0", "t0"]),
        slot(CONTACT, &["cStatus", "cRoom", "t1"]).filter(in_room(Room::FrontDoor)),
        slot(MOTION, &["mStatus1", "mRoom1", "t2"]),
    ]
}

/// Lighting, arrival, departure and shut-off, in that order. The first three count
/// fires; shut-off stops the actor with the count. Room constraints on slots whose
/// tag is unique in the pattern are also given as filtering clauses.
pub fn smart_house_patterns() -> Vec<JoinPattern<Action, u64>> {
    let fired = Arc::new(AtomicU64::new(0));
    let lighting = JoinPattern::builder()
        .slot(slot(MOTION, &["mStatus", "mRoom", "t0"]).filter(in_room(Room::Bathroom)))
        .slot(slot(AMBIENT_LIGHT, &["value", "alRoom", "t1"]).filter(in_room(Room::Bathroom)))
        .slot(slot(LIGHT, &["lStatus", "lRoom", "t2"]).filter(in_room(Room::Bathroom)))
        .guard(bathroom_occupied)
        .rhs(counting(&fired));
    let arrive = JoinPattern::builder()
        .slots(arrival_slots())
        .guard(occupied_home)
        .rhs(counting(&fired));
    let leave = JoinPattern::builder()
        .slots(arrival_slots())
        .guard(empty_home)
        .rhs(counting(&fired));
    let total = fired.clone();
    let shut_off = JoinPattern::builder()
        .slot(SlotDescriptor::new(SHUT_OFF))
        .rhs(move |_, _| ResultControl::Stop(total.load(Ordering::Relaxed)));
    [lighting, arrive, leave, shut_off]
        .into_iter()
        .map(|b| b.build().expect("smart house patterns are well formed"))
        .collect()
}

/// `matches` matchable triples (each satisfying one of the three guards, times
/// ascending in slot order), each with `noise` random readings, shuffled within
/// the group, then a final ShutOff.
pub fn gen_smart_house_traffic(matches: usize, noise: usize, seed: u64) -> Vec<Action> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(matches * (3 + noise) + 1);
    let mut id = 0u32;
    let mut next_id = || {
        id += 1;
        id
    };
    for g in 0..matches {
        let base = EPOCH_MS + g as i64 * GROUP_SPAN_MS;
        let mut window = match rng.gen_range(0..3) {
            0 => vec![
                Action::Motion { id: next_id(), status: true, room: Room::Bathroom, t: base },
                Action::AmbientLight { id: next_id(), value: rng.gen_range(0..=40), room: Room::Bathroom, t: base + 1 },
                Action::Light { id: next_id(), status: false, room: Room::Bathroom, t: base + 2 },
            ],
            k => {
                let (first, last) = if k == 1 {
                    (Room::FrontDoor, Room::EntranceHall)
                } else {
                    (Room::EntranceHall, Room::FrontDoor)
                };
                vec![
                    Action::Motion { id: next_id(), status: true, room: first, t: base },
                    Action::Contact { id: next_id(), status: true, room: Room::FrontDoor, t: base + 1 },
                    Action::Motion { id: next_id(), status: true, room: last, t: base + 2 },
                ]
            }
        };
        for _ in 0..noise {
            let room = *Room::ALL.choose(&mut rng).expect("rooms");
            let t = base + rng.gen_range(0..GROUP_SPAN_MS);
            let status = rng.gen_bool(0.5);
            let id = next_id();
            window.push(match rng.gen_range(0..4) {
                0 => Action::Motion { id, status, room, t },
                1 => Action::AmbientLight { id, value: rng.gen_range(0..100), room, t },
                2 => Action::Light { id, status, room, t },
                _ => Action::Contact { id, status, room, t },
            });
        }
        window.shuffle(&mut rng);
        out.extend(window);
    }
    out.push(Action::ShutOff);
    out
}

/// Runs until ShutOff. Random noise may complete extra matches, so the fire count
/// is only pinned down when `noise` is 0.
pub fn run_smart_house(
    noise: usize,
    matches: usize,
    seed: u64,
    factory: &MatcherFactory,
    timeout: Duration,
) -> Result<Trial, TrialError> {
    let traffic = gen_smart_house_traffic(matches, noise, seed);
    let (fired, elapsed) = drive(smart_house_patterns(), factory, traffic, timeout)?;
    if noise == 0 && fired != matches as u64 {
        return Err(TrialError::Assertion(format!("expected {matches} fires, got {fired}")));
    }
    Ok(Trial {
        elapsed,
        matches: fired,
    })
}
