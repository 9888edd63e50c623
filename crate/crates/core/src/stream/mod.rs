//! Social actions, the sliding window over them, and the propagation index
//! that maps every action to the users whose influence sets it extends.

mod index;
pub mod io;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use index::{AncestorChain, PropagationIndex};

/// Sequence number of an action as it appears in the input.
pub type Seq = u64;

/// Dense, 1-based position of an action among the actions an engine has
/// accepted. Windows and checkpoints are expressed in ordinals so that a
/// filtered stream with gaps in `seq` still slides one action at a time.
pub type Ordinal = u64;

/// Interned user identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId(pub u32);

impl UserId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Maps external user names to [`UserId`]s in first-seen order.
#[derive(Debug, Default, Clone)]
pub struct UserTable {
    ids: HashMap<String, UserId>,
    names: Vec<String>,
}

impl UserTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> UserId {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = UserId(self.names.len() as u32);
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<UserId> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: UserId) -> &str {
        &self.names[id.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Names of `ids`, in the given order.
    pub fn names_of<'a>(&'a self, ids: &'a [UserId]) -> impl Iterator<Item = &'a str> + 'a {
        ids.iter().map(move |&id| self.name(id))
    }
}

/// One stream event: `user` acts at `seq`, optionally responding to the
/// action `parent`.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub seq: Seq,
    pub user: UserId,
    pub parent: Option<Seq>,
    pub tags: Vec<String>,
    pub pos: Option<[f64; 2]>,
}

impl Action {
    pub fn root(seq: Seq, user: UserId) -> Self {
        Self { seq, user, parent: None, tags: Vec::new(), pos: None }
    }

    pub fn reply(seq: Seq, user: UserId, parent: Seq) -> Self {
        Self { seq, user, parent: Some(parent), tags: Vec::new(), pos: None }
    }
}

/// A parsed stream: the interned users plus the actions in input order.
#[derive(Debug, Clone, Default)]
pub struct Stream {
    pub users: UserTable,
    pub actions: Vec<Action>,
}

impl Stream {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an action by `user`; the sequence number is the next dense one.
    pub fn push(&mut self, user: &str, parent: Option<Seq>) -> Seq {
        let seq = self.actions.last().map_or(1, |a| a.seq + 1);
        let user = self.users.intern(user);
        self.actions.push(Action { seq, user, parent, tags: Vec::new(), pos: None });
        seq
    }
}

/// Sliding-window parameters shared by every engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Window size `N`, in actions.
    pub size: u64,
    /// Actions per slide `L`.
    pub slide: u64,
    /// Seed-set cardinality bound.
    pub k: usize,
    /// Trade-off parameter shared by the oracle lattice and checkpoint pruning.
    pub beta: f64,
}

impl WindowConfig {
    pub fn new(size: u64, slide: u64, k: usize, beta: f64) -> Result<Self> {
        let cfg = Self { size, slide, k, beta };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.slide == 0 || self.slide > self.size {
            return Err(Error::Config(format!(
                "slide must satisfy 1 <= L <= N (L={}, N={})",
                self.slide, self.size
            )));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Config(format!("beta must lie in (0,1), got {}", self.beta)));
        }
        Ok(())
    }

    /// Inclusive bounds of the window ending at `current` (`current >= 1`).
    pub fn bounds(&self, current: Ordinal) -> (Ordinal, Ordinal) {
        window_bounds(current, self.size)
    }

    /// Number of checkpoints a dense engine keeps at steady state, `ceil(N/L)`.
    pub fn dense_checkpoints(&self) -> usize {
        self.size.div_ceil(self.slide) as usize
    }

    /// Earliest ordinal still covered when the stream has advanced to `current`
    /// in whole slides. Equals the window's lower bound whenever `L` divides
    /// `N`; otherwise the window is rounded up to `ceil(N/L)` slides.
    pub fn live_floor(&self, current: Ordinal) -> Ordinal {
        let span = self.dense_checkpoints() as u64 * self.slide;
        (current + 1).saturating_sub(span).max(1)
    }
}

/// Inclusive bounds `(lo, hi)` of the latest `size` actions up to `current`.
pub fn window_bounds(current: Ordinal, size: u64) -> (Ordinal, Ordinal) {
    let lo = (current + 1).saturating_sub(size).max(1);
    (lo, current)
}
