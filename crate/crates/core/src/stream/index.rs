use std::collections::HashMap;

use super::{Action, Seq, UserId};
use crate::error::{Error, Result};

/// Distinct users whose influence sets gain the acting user: the actor first,
/// then the users of every transitive parent, first occurrence kept.
pub type AncestorChain = Vec<UserId>;

/// Maps each ingested action to its ancestor-user chain.
///
/// Chains are built incrementally from the parent's stored chain, so ingest
/// costs `O(d)` for a chain of length `d`. Entries older than the retention
/// horizon may be evicted; a reply whose parent is unknown (never seen or
/// evicted) degrades to root semantics and is counted as orphaned.
#[derive(Debug, Default, Clone)]
pub struct PropagationIndex {
    chains: HashMap<Seq, Box<[UserId]>>,
    last_seq: Option<Seq>,
    orphaned: u64,
    evicted_below: Seq,
}

impl PropagationIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `action` and returns its ancestor chain.
    pub fn ingest(&mut self, action: &Action) -> Result<AncestorChain> {
        if let Some(last) = self.last_seq {
            if action.seq <= last {
                return Err(Error::OutOfOrder { seq: action.seq, last });
            }
        }
        if let Some(parent) = action.parent {
            if parent >= action.seq {
                return Err(Error::ParentNotEarlier { seq: action.seq, parent });
            }
        }

        let mut chain = vec![action.user];
        match action.parent.map(|p| self.chains.get(&p)) {
            Some(Some(parent_chain)) => {
                chain.extend(parent_chain.iter().copied().filter(|&u| u != action.user));
            }
            Some(None) => self.orphaned += 1,
            None => {}
        }

        self.chains.insert(action.seq, chain.clone().into_boxed_slice());
        self.last_seq = Some(action.seq);
        Ok(chain)
    }

    pub fn chain(&self, seq: Seq) -> Option<&[UserId]> {
        self.chains.get(&seq).map(|c| &c[..])
    }

    /// Number of replies whose parent was not in the index.
    pub fn orphaned(&self) -> u64 {
        self.orphaned
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    /// Drops every entry with `seq < horizon`. Replies to dropped actions are
    /// treated as orphans afterwards.
    pub fn evict_before(&mut self, horizon: Seq) {
        if horizon <= self.evicted_below {
            return;
        }
        self.chains.retain(|&seq, _| seq >= horizon);
        self.evicted_below = horizon;
    }
}
