//! The checkpoint-oracle contract shared by the engines.
//!
//! A checkpoint oracle maximizes the influence function over an append-only
//! suffix of the stream. It is fed through Set-Stream Mapping: every action
//! turns into the updated views of the owners on its ancestor chain, and the
//! oracle sees each of those views as one incoming set. The value reported by
//! [`CheckpointOracle::value`] must never decrease while actions append; the
//! sparse engine's pruning relies on it.

use crate::influence::{Evidence, InfluenceFunction, InfluenceLog};
use crate::stream::{Ordinal, UserId};

/// Everything an oracle needs to absorb one action.
#[derive(Debug, Clone, Copy)]
pub struct ActionUpdate<'a> {
    pub ordinal: Ordinal,
    pub influenced: UserId,
    /// One entry per owner on the ancestor chain, in chain order.
    pub evidence: &'a [Evidence],
    /// Already contains this action's evidence.
    pub log: &'a InfluenceLog,
    pub function: &'a InfluenceFunction,
}

/// Parameters every oracle receives at creation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub k: usize,
    pub beta: f64,
}

/// Seeds currently held by an oracle.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Solution {
    pub seeds: Vec<UserId>,
    pub value: f64,
    /// Threshold exponent of the instance that produced the seeds, if any.
    pub instance: Option<i32>,
}

pub trait CheckpointOracle: Send {
    fn create(id: u64, start: Ordinal, cfg: OracleConfig) -> Self
    where
        Self: Sized;

    /// Creation counter; consecutive ids are adjacent checkpoints.
    fn id(&self) -> u64;

    /// First ordinal of the covered suffix.
    fn start(&self) -> Ordinal;

    fn process(&mut self, update: &ActionUpdate<'_>);

    /// Current best value (non-decreasing over the oracle's lifetime).
    fn value(&self) -> f64;

    fn solution(&self) -> Solution;
}
