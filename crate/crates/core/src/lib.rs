//! Sliding-window stream influence maximization.
//!
//! Actions arrive in order; each may respond to an earlier action. A user
//! influences everyone who acted in the current window under a chain of
//! responses starting at one of the user's actions. The engines keep an
//! approximate top-`k` set of influential users as the window slides:
//!
//! * [`IcEngine`] keeps one SieveStreaming checkpoint per slide position and
//!   answers from the oldest, a `(1/2 − β)` approximation.
//! * [`SicEngine`] keeps `O(log N / β)` of those checkpoints, pruned by value,
//!   and still guarantees `(1/4 − β)`.
//! * [`baselines`] holds the greedy and exact reference solvers.

pub mod baselines;
pub mod engine;
pub mod error;
pub mod harness;
pub mod ic;
pub mod influence;
pub mod oracle;
pub mod sic;
pub mod sieve;
pub mod stream;
pub mod streamgen;

pub use engine::{CheckpointRef, Engine, EngineKind, SeedResult};
pub use error::{Error, Result};
pub use ic::IcEngine;
pub use influence::{InfluenceFunction, Weights};
pub use oracle::{CheckpointOracle, OracleConfig, Solution};
pub use sic::SicEngine;
pub use sieve::SieveCheckpoint;
pub use stream::{Action, Ordinal, Seq, Stream, UserId, UserTable, WindowConfig};
