//! Ingest plumbing shared by the engines and the engine-facing interface.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::influence::{Evidence, InfluenceFunction, InfluenceLog};
use crate::oracle::ActionUpdate;
use crate::stream::{Action, AncestorChain, Ordinal, PropagationIndex, Seq, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Ic,
    Sic,
    Greedy,
    Exact,
}

impl EngineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::Ic => "ic",
            EngineKind::Sic => "sic",
            EngineKind::Greedy => "greedy",
            EngineKind::Exact => "exact",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ic" => Ok(EngineKind::Ic),
            "sic" => Ok(EngineKind::Sic),
            "greedy" => Ok(EngineKind::Greedy),
            "exact" => Ok(EngineKind::Exact),
            other => Err(Error::Config(format!("unknown engine `{other}`"))),
        }
    }
}

/// Which checkpoint answered a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckpointRef {
    pub id: u64,
    pub start: Ordinal,
    /// Threshold exponent of the winning oracle instance.
    pub instance: Option<i32>,
}

/// Answer to a query: at most `k` seeds and their influence value.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub seeds: Vec<UserId>,
    pub value: f64,
    pub engine: EngineKind,
    pub checkpoint: Option<CheckpointRef>,
}

/// A sliding-window SIM engine.
pub trait Engine {
    fn kind(&self) -> EngineKind;

    /// Advances the window by one batch of exactly `L` actions.
    fn slide(&mut self, batch: &[Action]) -> Result<()>;

    fn query(&self) -> Result<SeedResult>;

    /// Live checkpoints (0 for recomputing baselines).
    fn checkpoint_count(&self) -> usize;

    /// Ordinal of the latest ingested action.
    fn current(&self) -> Ordinal;
}

/// Turns actions into ordinals, ancestor chains and evidence.
#[derive(Debug, Default)]
pub struct Pipeline {
    index: PropagationIndex,
    log: InfluenceLog,
    function: InfluenceFunction,
    ordinal: Ordinal,
    last_seq: Option<Seq>,
    evidence: Vec<Evidence>,
    /// `seq` of every ordinal from `seq_base` on.
    seqs: VecDeque<Seq>,
    seq_base: Ordinal,
    retention_grace: Option<u64>,
}

impl Pipeline {
    pub fn new(function: InfluenceFunction) -> Self {
        Self { function, seq_base: 1, ..Default::default() }
    }

    /// Keeps index entries only down to `grace` actions before the oldest
    /// live checkpoint. `None` (the default) never evicts.
    pub fn set_retention_grace(&mut self, grace: Option<u64>) {
        self.retention_grace = grace;
    }

    pub fn function(&self) -> &InfluenceFunction {
        &self.function
    }

    pub fn index(&self) -> &PropagationIndex {
        &self.index
    }

    pub fn log(&self) -> &InfluenceLog {
        &self.log
    }

    pub fn current(&self) -> Ordinal {
        self.ordinal
    }

    /// Rejects a batch that does not hold exactly `len` actions or is not
    /// strictly after the last ingested action, before anything is mutated.
    pub fn validate_batch(&self, batch: &[Action], len: u64) -> Result<()> {
        if batch.len() as u64 != len {
            return Err(Error::Config(format!("a slide takes exactly {len} actions, got {}", batch.len())));
        }
        let mut last = self.last_seq;
        for a in batch {
            if let Some(l) = last {
                if a.seq <= l {
                    return Err(Error::OutOfOrder { seq: a.seq, last: l });
                }
            }
            if let Some(p) = a.parent {
                if p >= a.seq {
                    return Err(Error::ParentNotEarlier { seq: a.seq, parent: p });
                }
            }
            last = Some(a.seq);
        }
        Ok(())
    }

    /// Ingests one action and hands its update to `fan_out`.
    pub fn ingest<F>(&mut self, action: &Action, fan_out: F) -> Result<AncestorChain>
    where
        F: FnOnce(&ActionUpdate<'_>),
    {
        let chain = self.index.ingest(action)?;
        self.ordinal += 1;
        self.last_seq = Some(action.seq);
        self.seqs.push_back(action.seq);
        self.log.record(self.ordinal, action.user, &chain, &mut self.evidence);
        let update = ActionUpdate {
            ordinal: self.ordinal,
            influenced: action.user,
            evidence: &self.evidence,
            log: &self.log,
            function: &self.function,
        };
        fan_out(&update);
        Ok(chain)
    }

    /// Releases state no checkpoint starting at or after `oldest_start` can
    /// observe. Cheap to call often; the sweep runs once per `every` actions.
    pub fn maybe_evict(&mut self, oldest_start: Ordinal, every: u64) {
        if every == 0 || !self.ordinal.is_multiple_of(every) {
            return;
        }
        self.log.evict_before(oldest_start);
        if let Some(grace) = self.retention_grace {
            let horizon_ord = oldest_start.saturating_sub(grace).max(1);
            if horizon_ord > self.seq_base {
                let drop = (horizon_ord - self.seq_base) as usize;
                let drop = drop.min(self.seqs.len());
                self.seqs.drain(..drop);
                self.seq_base += drop as u64;
                if let Some(&seq) = self.seqs.front() {
                    self.index.evict_before(seq);
                }
            }
        } else {
            // Without a grace bound the index keeps everything; the ordinal ->
            // seq map is only needed for index eviction.
            let keep_from = oldest_start.max(self.seq_base);
            let drop = ((keep_from - self.seq_base) as usize).min(self.seqs.len());
            self.seqs.drain(..drop);
            self.seq_base += drop as u64;
        }
    }
}
