//! Influence views and the monotone submodular functions evaluated over them.
//!
//! Every checkpoint covers an append-only suffix of the stream starting at
//! some ordinal `start`. Rather than materializing a user -> members map per
//! checkpoint, a single [`InfluenceLog`] stores, for every pair `(u, v)`, the
//! latest ordinal at which `v` acted under the influence of `u`. Then
//! `v ∈ I_start(u)` iff that ordinal is `>= start`, which makes the views of
//! all suffixes available from one structure. Each checkpoint only keeps the
//! cached function value of each user's view ([`SuffixViews`]).
//!
//! [`MaterializedViews`] is the from-scratch path: explicit member sets built
//! over a fixed range of actions, used by the baselines and by differential
//! tests.

use std::collections::{HashMap, HashSet, VecDeque};
use std::io::Read;
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::stream::{Ordinal, UserId, UserTable};

/// Per-user weights; users without an entry weigh 1.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Weights {
    by_user: Vec<f64>,
}

impl Weights {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, user: UserId, weight: f64) -> Result<()> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::Config(format!("weight of {user} must be finite and nonnegative, got {weight}")));
        }
        if self.by_user.len() <= user.index() {
            self.by_user.resize(user.index() + 1, 1.0);
        }
        self.by_user[user.index()] = weight;
        Ok(())
    }

    #[inline]
    pub fn get(&self, user: UserId) -> f64 {
        self.by_user.get(user.index()).copied().unwrap_or(1.0)
    }

    /// Loads a `user,weight` CSV (header required), interning unseen users.
    pub fn read_csv<R: Read>(reader: R, users: &mut UserTable) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut weights = Self::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let line = i + 2;
            let name = row.get(0).filter(|s| !s.is_empty()).ok_or_else(|| Error::Parse {
                line,
                message: "missing user".into(),
            })?;
            let weight: f64 = row
                .get(1)
                .unwrap_or("")
                .parse()
                .map_err(|e| Error::Parse { line, message: format!("bad weight: {e}") })?;
            weights.set(users.intern(name), weight)?;
        }
        Ok(weights)
    }
}

/// Influence function `f(I(S))`: the size of the joint influence set, or the
/// total weight of its members.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum InfluenceFunction {
    #[default]
    Cardinality,
    Weighted(Arc<Weights>),
}

impl InfluenceFunction {
    pub fn weighted(weights: Weights) -> Self {
        InfluenceFunction::Weighted(Arc::new(weights))
    }

    /// Contribution of one influenced user.
    #[inline]
    pub fn weight(&self, user: UserId) -> f64 {
        match self {
            InfluenceFunction::Cardinality => 1.0,
            InfluenceFunction::Weighted(w) => w.get(user),
        }
    }

    /// `f` over a set of members.
    pub fn of_members<'a, I>(&self, members: I) -> f64
    where
        I: IntoIterator<Item = &'a UserId>,
    {
        members.into_iter().map(|&v| self.weight(v)).sum()
    }

    /// `f(∪ views)`.
    pub fn eval<'a, I>(&self, views: I) -> f64
    where
        I: IntoIterator<Item = &'a HashSet<UserId>>,
    {
        let mut union: HashSet<UserId> = HashSet::new();
        for view in views {
            union.extend(view.iter().copied());
        }
        self.of_members(&union)
    }

    /// `f(base ∪ candidate) − f(base)`.
    pub fn marginal<'a, I>(&self, base: I, candidate: &HashSet<UserId>) -> f64
    where
        I: IntoIterator<Item = &'a HashSet<UserId>>,
    {
        let mut union: HashSet<UserId> = HashSet::new();
        for view in base {
            union.extend(view.iter().copied());
        }
        candidate.iter().filter(|v| !union.contains(v)).map(|&v| self.weight(v)).sum()
    }
}

/// One owner touched by an action, with the ordinal of the previous evidence
/// that the influenced user belongs to this owner's influence set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evidence {
    pub owner: UserId,
    pub previous: Option<Ordinal>,
}

impl Evidence {
    /// Whether the influenced user is new to the owner's view over the
    /// suffix starting at `start`.
    #[inline]
    pub fn gained_since(&self, start: Ordinal) -> bool {
        self.previous.is_none_or(|p| p < start)
    }
}

/// Shared evidence log: `owner -> influenced -> latest ordinal`.
#[derive(Debug, Default, Clone)]
pub struct InfluenceLog {
    owners: FxHashMap<UserId, OwnerLog>,
}

#[derive(Debug, Default, Clone)]
struct OwnerLog {
    latest: FxHashMap<UserId, Ordinal>,
    /// Every `(ordinal, influenced)` recorded, ascending; superseded entries
    /// stay until eviction and are skipped on read.
    events: VecDeque<(Ordinal, UserId)>,
}

impl InfluenceLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records that `influenced` acted at `ordinal` with the given ancestor
    /// chain; `out` receives one [`Evidence`] per owner, in chain order.
    pub fn record(&mut self, ordinal: Ordinal, influenced: UserId, chain: &[UserId], out: &mut Vec<Evidence>) {
        out.clear();
        for &owner in chain {
            let log = self.owners.entry(owner).or_default();
            let previous = log.latest.insert(influenced, ordinal);
            log.events.push_back((ordinal, influenced));
            out.push(Evidence { owner, previous });
        }
    }

    /// Members of `owner`'s view over the suffix starting at `start`. Costs
    /// time proportional to the owner's evidence in that suffix.
    pub fn members(&self, owner: UserId, start: Ordinal) -> impl Iterator<Item = UserId> + '_ {
        self.owners.get(&owner).into_iter().flat_map(move |log| {
            let from = log.events.partition_point(|&(at, _)| at < start);
            log.events.range(from..).filter(|(at, v)| log.latest.get(v) == Some(at)).map(|&(_, v)| v)
        })
    }

    pub fn contains(&self, owner: UserId, influenced: UserId, start: Ordinal) -> bool {
        self.owners
            .get(&owner)
            .and_then(|log| log.latest.get(&influenced))
            .is_some_and(|&at| at >= start)
    }

    /// Drops evidence older than `horizon`; no suffix starting at or after
    /// `horizon` can observe it.
    pub fn evict_before(&mut self, horizon: Ordinal) {
        self.owners.retain(|_, log| {
            while log.events.front().is_some_and(|&(at, _)| at < horizon) {
                let (at, v) = log.events.pop_front().expect("front exists");
                if log.latest.get(&v) == Some(&at) {
                    log.latest.remove(&v);
                }
            }
            !log.latest.is_empty()
        });
    }

    /// Total number of stored `(owner, influenced)` pairs.
    pub fn len(&self) -> usize {
        self.owners.values().map(|log| log.latest.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.owners.is_empty()
    }
}

/// Cached `f(I_start(u))` for every user with a nonempty view over one
/// checkpoint's suffix.
#[derive(Debug, Clone)]
pub struct SuffixViews {
    start: Ordinal,
    values: FxHashMap<UserId, f64>,
}

impl SuffixViews {
    pub fn new(start: Ordinal) -> Self {
        Self { start, values: FxHashMap::default() }
    }

    pub fn start(&self) -> Ordinal {
        self.start
    }

    /// Applies one action's evidence; `out` receives `(owner, gained)` per owner.
    pub fn apply(&mut self, f: &InfluenceFunction, influenced: UserId, evidence: &[Evidence], out: &mut Vec<(UserId, bool)>) {
        out.clear();
        for ev in evidence {
            let gained = ev.gained_since(self.start);
            if gained {
                *self.values.entry(ev.owner).or_insert(0.0) += f.weight(influenced);
            }
            out.push((ev.owner, gained));
        }
    }

    #[inline]
    pub fn value(&self, owner: UserId) -> f64 {
        self.values.get(&owner).copied().unwrap_or(0.0)
    }

    /// Users with a nonempty view.
    pub fn owners(&self) -> impl Iterator<Item = UserId> + '_ {
        self.values.keys().copied()
    }
}

/// Explicit influence sets over a fixed range of actions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterializedViews {
    views: HashMap<UserId, HashSet<UserId>>,
}

impl MaterializedViews {
    /// Builds views from `(influenced user, ancestor chain)` pairs.
    pub fn build<'a, I>(actions: I) -> Self
    where
        I: IntoIterator<Item = (UserId, &'a [UserId])>,
    {
        let mut views: HashMap<UserId, HashSet<UserId>> = HashMap::new();
        for (influenced, chain) in actions {
            for &owner in chain {
                views.entry(owner).or_default().insert(influenced);
            }
        }
        Self { views }
    }

    pub fn view(&self, owner: UserId) -> Option<&HashSet<UserId>> {
        self.views.get(&owner)
    }

    /// Users with a nonempty view, ascending.
    pub fn owners(&self) -> Vec<UserId> {
        let mut owners: Vec<_> = self.views.keys().copied().collect();
        owners.sort_unstable();
        owners
    }

    /// `f(I(seeds))`.
    pub fn value_of(&self, f: &InfluenceFunction, seeds: &[UserId]) -> f64 {
        f.eval(seeds.iter().filter_map(|s| self.views.get(s)))
    }

    /// Union of the seeds' views.
    pub fn covered(&self, seeds: &[UserId]) -> FxHashSet<UserId> {
        seeds.iter().filter_map(|s| self.views.get(s)).flatten().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }
}
