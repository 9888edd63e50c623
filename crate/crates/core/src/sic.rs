//! Sparse Influential Checkpoints.
//!
//! Like the dense engine, every slide appends one checkpoint and feeds the
//! batch to all live checkpoints, including one retained expired checkpoint
//! `x_0` whose suffix is longer than the window. Afterwards checkpoints are
//! pruned by value: scanning anchors `x_i` in order, successors `x_j` are
//! deleted while both `x_j` and `x_{j+1}` are worth at least `(1−β)` of the
//! anchor. Finally `x_0` is dropped once its successor has expired too.
//! Queries are answered by `x_1`, the earliest checkpoint still inside the
//! window.

use rayon::prelude::*;

use crate::engine::{CheckpointRef, Engine, EngineKind, Pipeline, SeedResult};
use crate::error::{Error, Result};
use crate::influence::InfluenceFunction;
use crate::oracle::{CheckpointOracle, OracleConfig};
use crate::sieve::SieveCheckpoint;
use crate::stream::{Action, Ordinal, WindowConfig};

/// Upper bound on the live checkpoint count, `2·ln N / ln(1/(1−β))`, without
/// the additive slack.
pub fn checkpoint_bound(window: u64, beta: f64) -> f64 {
    2.0 * (window as f64).ln() / (1.0 / (1.0 - beta)).ln()
}

/// A neighbor triple (or final pair) that satisfies none of the three
/// admissible shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborViolation {
    /// Index of the anchor in the checkpoint list.
    pub position: usize,
    pub starts: Vec<Ordinal>,
    pub values: Vec<f64>,
}

#[derive(Debug)]
pub struct SicEngine<O: CheckpointOracle = SieveCheckpoint> {
    cfg: WindowConfig,
    pipeline: Pipeline,
    checkpoints: Vec<O>,
    next_id: u64,
    pruning: bool,
    parallel: bool,
    oracle_updates: u64,
    deleted: u64,
}

impl<O: CheckpointOracle> SicEngine<O> {
    pub fn new(cfg: WindowConfig, function: InfluenceFunction) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            pipeline: Pipeline::new(function),
            checkpoints: Vec::new(),
            next_id: 0,
            pruning: true,
            parallel: false,
            oracle_updates: 0,
            deleted: 0,
        })
    }

    /// Builds an engine around an existing checkpoint list (ordered by
    /// start), for exercising pruning on hand-made values.
    #[doc(hidden)]
    pub fn from_checkpoints(cfg: WindowConfig, checkpoints: Vec<O>) -> Result<Self> {
        let mut engine = Self::new(cfg, InfluenceFunction::Cardinality)?;
        engine.next_id = checkpoints.iter().map(|cp| cp.id() + 1).max().unwrap_or(0);
        engine.checkpoints = checkpoints;
        Ok(engine)
    }

    /// With pruning off the engine keeps every checkpoint and answers
    /// exactly like the dense engine.
    pub fn with_pruning(mut self, pruning: bool) -> Self {
        self.pruning = pruning;
        self
    }

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

    /// Live checkpoints ordered by start, the retained expired one first.
    pub fn checkpoints(&self) -> &[O] {
        &self.checkpoints
    }

    pub fn oracle_updates(&self) -> u64 {
        self.oracle_updates
    }

    /// Checkpoints removed by pruning so far.
    pub fn pruned(&self) -> u64 {
        self.deleted
    }

    /// Earliest ordinal inside the current window.
    pub fn window_floor(&self) -> Ordinal {
        self.cfg.live_floor(self.pipeline.current())
    }

    /// Position of `cp` in the current window: 1 for the window's first
    /// action, `<= 0` once expired.
    pub fn position(&self, cp: &O) -> i64 {
        cp.start() as i64 - self.window_floor() as i64 + 1
    }

    fn first_live(&self) -> Option<&O> {
        let floor = self.window_floor();
        self.checkpoints.iter().find(|cp| cp.start() >= floor)
    }

    /// Value-based deletion. Returns the starts of the deleted checkpoints.
    ///
    /// A deletion under anchor `i` can hand an earlier anchor a new deletable
    /// successor, so the scan repeats until a pass deletes nothing.
    pub fn prune(&mut self) -> Vec<Ordinal> {
        let keep = 1.0 - self.cfg.beta;
        let mut removed = Vec::new();
        loop {
            let before = removed.len();
            let mut i = 0;
            while i < self.checkpoints.len() {
                let bar = keep * self.checkpoints[i].value();
                let mut j = i + 1;
                while j + 1 < self.checkpoints.len()
                    && self.checkpoints[j].value() >= bar
                    && self.checkpoints[j + 1].value() >= bar
                {
                    j += 1;
                }
                if j > i + 1 {
                    removed.extend(self.checkpoints.drain(i + 1..j).map(|cp| cp.start()));
                }
                i += 1;
            }
            if removed.len() == before {
                break;
            }
        }
        self.deleted += removed.len() as u64;
        removed
    }

    /// Checks every neighbor triple against the three admissible shapes:
    ///
    /// 1. `Λ[x_{i+1}] >= (1−β)Λ[x_i]` and `Λ[x_{i+2}] < (1−β)Λ[x_i]`;
    /// 2. `x_{i+1}` not adjacent to `x_i`, `Λ[x_{i+1}] < (1−β)Λ[x_i]`, and
    ///    `Λ[x_{i+1}] >= ε(1−β)/2 · OPT[x_i]`;
    /// 3. `x_{i+1}` adjacent to `x_i` and `Λ[x_{i+1}] < (1−β)Λ[x_i]`.
    ///
    /// `opt`, when given, returns the optimum over the suffix starting at an
    /// ordinal; without it the optimum part of shape 2 is not checked.
    /// Adjacent means created on consecutive slides.
    pub fn neighbor_violations(&self, opt: Option<&dyn Fn(Ordinal) -> f64>, epsilon: f64) -> Vec<NeighborViolation> {
        let keep = 1.0 - self.cfg.beta;
        let cps = &self.checkpoints;
        let mut out = Vec::new();
        for i in 0..cps.len().saturating_sub(1) {
            let (a, b, c) = (&cps[i], &cps[i + 1], cps.get(i + 2));
            let bar = keep * a.value();
            let vb = b.value();
            let adjacent = b.id() == a.id() + 1;
            let shape1 = vb >= bar && c.is_none_or(|c| c.value() < bar);
            let shape3 = adjacent && vb < bar;
            let shape2 = !adjacent
                && vb < bar
                && opt.is_none_or(|opt| epsilon * keep / 2.0 * opt(a.start()) <= vb + 1e-9);
            if !(shape1 || shape2 || shape3) {
                let trio = cps[i..cps.len().min(i + 3)].iter();
                out.push(NeighborViolation {
                    position: i,
                    starts: trio.clone().map(|cp| cp.start()).collect(),
                    values: trio.map(|cp| cp.value()).collect(),
                });
            }
        }
        out
    }
}

impl<O: CheckpointOracle> Engine for SicEngine<O> {
    fn kind(&self) -> EngineKind {
        EngineKind::Sic
    }

    fn slide(&mut self, batch: &[Action]) -> Result<()> {
        self.pipeline.validate_batch(batch, self.cfg.slide)?;

        let start: Ordinal = self.pipeline.current() + 1;
        let oracle_cfg = OracleConfig { k: self.cfg.k, beta: self.cfg.beta };
        self.checkpoints.push(O::create(self.next_id, start, oracle_cfg));
        self.next_id += 1;

        let cps = &mut self.checkpoints;
        let parallel = self.parallel;
        for action in batch {
            let chain = self.pipeline.ingest(action, |update| {
                if parallel {
                    cps.par_iter_mut().for_each(|cp| cp.process(update));
                } else {
                    cps.iter_mut().for_each(|cp| cp.process(update));
                }
            })?;
            self.oracle_updates += (cps.len() * chain.len()) as u64;
        }

        if self.pruning {
            self.prune();
        }
        let floor = self.window_floor();
        while self.checkpoints.len() >= 2 && self.checkpoints[1].start() < floor {
            self.checkpoints.remove(0);
        }

        let oldest = self.checkpoints.first().map_or(1, |cp| cp.start());
        self.pipeline.maybe_evict(oldest, self.cfg.size.max(1024));
        Ok(())
    }

    fn query(&self) -> Result<SeedResult> {
        let cp = self.first_live().ok_or(Error::NoCheckpoint)?;
        let sol = cp.solution();
        Ok(SeedResult {
            seeds: sol.seeds,
            value: sol.value,
            engine: EngineKind::Sic,
            checkpoint: Some(CheckpointRef { id: cp.id(), start: cp.start(), instance: sol.instance }),
        })
    }

    fn checkpoint_count(&self) -> usize {
        self.checkpoints.len()
    }

    fn current(&self) -> Ordinal {
        self.pipeline.current()
    }
}
