//! Influential Checkpoints: one oracle per slide position.
//!
//! On every slide the oldest checkpoint is deleted once the ring holds
//! `ceil(N/L)` of them, a fresh checkpoint starting at the batch's first
//! action is appended, and every live checkpoint absorbs the whole batch. The
//! oldest checkpoint covers exactly the current window and answers queries.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::engine::{CheckpointRef, Engine, EngineKind, Pipeline, SeedResult};
use crate::error::{Error, Result};
use crate::influence::InfluenceFunction;
use crate::oracle::{CheckpointOracle, OracleConfig};
use crate::sieve::SieveCheckpoint;
use crate::stream::{Action, Ordinal, WindowConfig};

#[derive(Debug)]
pub struct IcEngine<O: CheckpointOracle = SieveCheckpoint> {
    cfg: WindowConfig,
    pipeline: Pipeline,
    ring: VecDeque<O>,
    next_id: u64,
    parallel: bool,
    oracle_updates: u64,
}

impl<O: CheckpointOracle> IcEngine<O> {
    pub fn new(cfg: WindowConfig, function: InfluenceFunction) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            pipeline: Pipeline::new(function),
            ring: VecDeque::new(),
            next_id: 0,
            parallel: false,
            oracle_updates: 0,
        })
    }

    /// Fans each action out to the checkpoints on the rayon pool.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn config(&self) -> &WindowConfig {
        &self.cfg
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn pipeline_mut(&mut self) -> &mut Pipeline {
        &mut self.pipeline
    }

    pub fn checkpoints(&self) -> impl Iterator<Item = &O> {
        self.ring.iter()
    }

    /// Total `(checkpoint, owner)` oracle updates performed so far.
    pub fn oracle_updates(&self) -> u64 {
        self.oracle_updates
    }
}

impl<O: CheckpointOracle> Engine for IcEngine<O> {
    fn kind(&self) -> EngineKind {
        EngineKind::Ic
    }

    fn slide(&mut self, batch: &[Action]) -> Result<()> {
        self.pipeline.validate_batch(batch, self.cfg.slide)?;

        if self.ring.len() >= self.cfg.dense_checkpoints() {
            self.ring.pop_front();
        }
        let start: Ordinal = self.pipeline.current() + 1;
        let oracle_cfg = OracleConfig { k: self.cfg.k, beta: self.cfg.beta };
        self.ring.push_back(O::create(self.next_id, start, oracle_cfg));
        self.next_id += 1;

        let ring = &mut self.ring;
        let parallel = self.parallel;
        for action in batch {
            let chain = self.pipeline.ingest(action, |update| {
                if parallel {
                    ring.par_iter_mut().for_each(|cp| cp.process(update));
                } else {
                    ring.iter_mut().for_each(|cp| cp.process(update));
                }
            })?;
            self.oracle_updates += (ring.len() * chain.len()) as u64;
        }

        let oldest = self.ring.front().map_or(1, |cp| cp.start());
        self.pipeline.maybe_evict(oldest, self.cfg.size.max(1024));
        Ok(())
    }

    fn query(&self) -> Result<SeedResult> {
        let cp = self.ring.front().ok_or(Error::NoCheckpoint)?;
        let sol = cp.solution();
        Ok(SeedResult {
            seeds: sol.seeds,
            value: sol.value,
            engine: EngineKind::Ic,
            checkpoint: Some(CheckpointRef { id: cp.id(), start: cp.start(), instance: sol.instance }),
        })
    }

    fn checkpoint_count(&self) -> usize {
        self.ring.len()
    }

    fn current(&self) -> Ordinal {
        self.pipeline.current()
    }
}
