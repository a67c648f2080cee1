//! Curriculum-driven reinforcement learning for Sokoban planning.
//!
//! The library solves hard Sokoban instances without labeled training data.
//! It generates unlabeled sub-instances of a target, selects training tasks
//! with a difficulty-momentum multi-armed bandit, and solves/learns with a
//! policy/value-guided Monte-Carlo tree search that can be augmented with
//! curiosity rewards from random network distillation.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`board`] / [`xsb`] / [`solver`] — exact push rules, the XSB text
//!   format, and an exhaustive optimal solver used as a test oracle.
//! - [`subcase`] — sub-instance generation to populate the task pool.
//! - [`bandit`] — the difficulty-momentum task selector.
//! - [`evaluator`] — policy/value networks (convolutional and graph
//!   message-passing variants) with in-repo forward/backward.
//! - [`rnd`] — random network distillation intrinsic rewards.
//! - [`mcts`] — PUCT search with remaining-steps backpropagation.
//! - [`trainer`] — replay buffer and the per-iteration training schedule.
//! - [`orchestrator`] — the end-to-end select/solve/feedback/train loop.
//!
//! See the crate `examples/` directory for one runnable example per major
//! capability, and the `sokorl` binary for the batch CLI.

pub mod bandit;
pub mod board;
pub mod evaluator;
pub mod mcts;
pub mod metrics;
pub mod nn;
pub mod orchestrator;
pub mod rnd;
pub mod solver;
pub mod subcase;
pub mod trainer;
pub mod xsb;

pub use board::{Board, BoardError, Cell, Direction, PushAction, StateKey};
pub use solver::{bfs_optimal_solve, OracleOutcome};
