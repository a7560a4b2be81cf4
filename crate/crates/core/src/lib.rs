//! Deterministic simulation and verification of self-organization in
//! dynamic distributed systems.
//!
//! The crate runs overlay and consensus protocols under churn demons,
//! records replayable traces, and classifies each trace as weakly
//! self-organizing, self-organizing, strongly self-organizing, or none of
//! these, with respect to a chosen evaluation criterion.
//!
//! Layout:
//!
//! - [`model`]: configurations, actions, traces and static fragments.
//! - [`demons`]: churn schedule generators and validators, including the
//!   adversarial demon that prevents convergence.
//! - [`criteria`]: local and global evaluation criteria, kernels and
//!   monotonic composition.
//! - [`monitors`]: p-stability, safety, liveness and kernel preservation
//!   checks, and the overall classification.
//! - [`lsa`]: the generic greedy local self-organization algorithm.
//! - [`overlays`]: CAN and Pastry maintenance protocols.
//! - [`protocols`]: eventual leader election and the DFS one-shot query.
//! - [`engine`]: scenarios, the event loop, trace and report files.

pub mod criteria;
pub mod demons;
pub mod engine;
pub mod lsa;
pub mod model;
pub mod monitors;
pub mod overlays;
pub mod protocols;

pub use model::{Action, ActionKind, Configuration, Fragment, NodeId, Trace};
