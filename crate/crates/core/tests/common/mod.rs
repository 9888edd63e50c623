//! Fixtures and brute-force oracles shared by the integration tests. The
//! oracles walk parent pointers directly and enumerate subsets; they do not
//! use the library's index, views or solvers.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simstream::{Action, Engine, Stream, UserId};

/// The ten-action running example. Users are interned u1..u6 in order.
///
/// a1=<u1,-> a2=<u2,a1> a3=<u3,-> a4=<u3,a1> a5=<u4,a3>
/// a6=<u1,a3> a7=<u5,a3> a8=<u2,-> a9=<u6,a8> a10=<u6,a9>
pub fn ten_actions() -> Stream {
    let mut s = Stream::new();
    for u in ["u1", "u2", "u3", "u4", "u5", "u6"] {
        s.users.intern(u);
    }
    let actions: [(&str, Option<u64>); 10] = [
        ("u1", None),
        ("u2", Some(1)),
        ("u3", None),
        ("u3", Some(1)),
        ("u4", Some(3)),
        ("u1", Some(3)),
        ("u5", Some(3)),
        ("u2", None),
        ("u6", Some(8)),
        ("u6", Some(9)),
    ];
    for (u, p) in actions {
        s.push(u, p);
    }
    s
}

pub fn id(s: &Stream, name: &str) -> UserId {
    s.users.get(name).unwrap_or_else(|| panic!("no user {name}"))
}

pub fn names(s: &Stream, ids: &[UserId]) -> BTreeSet<String> {
    s.users.names_of(ids).map(String::from).collect()
}

pub fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Random stream: `users` users, `len` actions, each a reply to a uniformly
/// chosen earlier action with probability `p_reply`.
pub fn random_stream(rng: &mut ChaCha8Rng, users: u32, len: usize, p_reply: f64) -> Stream {
    let mut s = Stream::new();
    for i in 0..len {
        let u = format!("u{}", rng.random_range(0..users));
        let parent = if i > 0 && rng.random_bool(p_reply) { Some(rng.random_range(1..=i as u64)) } else { None };
        s.push(&u, parent);
    }
    s
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Influence sets over the actions at 1-based positions `lo..=hi`, straight
/// from the definition: every user on the response path of an in-range
/// action (including its own user) influences that action's user.
pub fn influence_sets(s: &Stream, lo: u64, hi: u64) -> BTreeMap<UserId, BTreeSet<UserId>> {
    let by_seq: HashMap<u64, &Action> = s.actions.iter().map(|a| (a.seq, a)).collect();
    let mut sets: BTreeMap<UserId, BTreeSet<UserId>> = BTreeMap::new();
    let hi = hi.min(s.actions.len() as u64);
    for pos in lo.max(1)..=hi {
        let a = &s.actions[pos as usize - 1];
        let mut cur = Some(a);
        while let Some(x) = cur {
            sets.entry(x.user).or_default().insert(a.user);
            cur = x.parent.and_then(|p| by_seq.get(&p).copied());
        }
    }
    sets
}

/// Weighted coverage of the union of the seeds' sets.
pub fn coverage(sets: &BTreeMap<UserId, BTreeSet<UserId>>, seeds: &[UserId], weight: &dyn Fn(UserId) -> f64) -> f64 {
    let union: BTreeSet<UserId> = seeds.iter().filter_map(|u| sets.get(u)).flatten().copied().collect();
    union.into_iter().map(weight).sum()
}

/// Brute-force optimum over all seed sets of size at most `k`.
pub fn brute_opt(sets: &BTreeMap<UserId, BTreeSet<UserId>>, k: usize, weight: &dyn Fn(UserId) -> f64) -> (f64, Vec<UserId>) {
    let owners: Vec<UserId> = sets.keys().copied().collect();
    let mut best = (0.0, Vec::new());
    let mut chosen = Vec::new();
    fn rec(
        owners: &[UserId],
        from: usize,
        k: usize,
        chosen: &mut Vec<UserId>,
        sets: &BTreeMap<UserId, BTreeSet<UserId>>,
        weight: &dyn Fn(UserId) -> f64,
        best: &mut (f64, Vec<UserId>),
    ) {
        let v = coverage(sets, chosen, weight);
        if v > best.0 {
            *best = (v, chosen.clone());
        }
        if chosen.len() == k {
            return;
        }
        for i in from..owners.len() {
            chosen.push(owners[i]);
            rec(owners, i + 1, k, chosen, sets, weight, best);
            chosen.pop();
        }
    }
    rec(&owners, 0, k, &mut chosen, sets, weight, &mut best);
    best
}

pub fn unit(_: UserId) -> f64 {
    1.0
}

/// Brute-force optimum of the cardinality function over positions `lo..=hi`.
pub fn opt(s: &Stream, lo: u64, hi: u64, k: usize) -> f64 {
    brute_opt(&influence_sets(s, lo, hi), k, &unit).0
}

/// Slides `engine` over `s` in batches of `l`, calling `each` after every
/// slide with the ordinal of the last ingested action. A trailing partial
/// batch is dropped.
pub fn replay<E: Engine + ?Sized>(engine: &mut E, s: &Stream, l: usize, mut each: impl FnMut(&mut E, u64)) {
    for batch in s.actions.chunks_exact(l) {
        engine.slide(batch).expect("slide");
        let current = engine.current();
        each(engine, current);
    }
}
