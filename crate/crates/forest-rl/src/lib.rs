//! Batch and online reinforcement learning on continuous state/action spaces,
//! built around regression forests.
//!
//! The toolkit has three layers:
//!
//! * a regression layer: axis-aligned regression trees with constant or affine
//!   leaves, an Extra-Trees style randomized learner ([`extra_trees`]), and a
//!   closed algebra on trees (projection, weighted averaging, pruning, forest
//!   merging) in [`algebra`];
//! * a reinforcement-learning layer: fitted Q iteration over forests ([`fqi`]),
//!   policy extraction into small per-action-dimension forests ([`policy`]),
//!   and optimistic online exploration driven by a knownness forest
//!   ([`exploration`]);
//! * benchmark problems ([`envs`]) and an experiment harness ([`harness`])
//!   that collects data, learns, evaluates, and writes results to disk.
//!
//! Everything is deterministic under a master seed: randomness flows through
//! named sub-streams (see [`seeds`]) so that runs reproduce exactly, including
//! when tree growth is spread over worker threads.
//!
//! The `examples/` directory is the best starting point; each example is a
//! small end-to-end use of one capability (growing forests, merging trees,
//! batch learning on the benchmarks, online exploration, action timing).

pub mod algebra;
pub mod envs;
pub mod error;
pub mod exploration;
pub mod extra_trees;
pub mod fqi;
pub mod geometry;
pub mod harness;
pub mod policy;
pub mod seeds;
pub mod tree;

pub use error::{Error, Result};
pub use geometry::HyperRectangle;
pub use tree::{LeafModel, Node, RegressionForest, RegressionTree};
