//! Reachability-aware topological navigation in a 2D depth-scan world.
//!
//! A local controller drives a nonholonomic vehicle toward target
//! observations; a Monte-Carlo reachability estimator measures how well
//! it does so. That single probabilistic metric sparsifies dense
//! trajectories into anchors, links anchors into a compact weighted
//! topological map, plans maximum-probability paths and supervises a
//! Search / Follow / Dead-reckoning trajectory follower.

pub mod config;
pub mod controller;
pub mod fixtures;
pub mod geometry;
pub mod reachability;
pub mod sim;

pub use config::{ControllerConfig, ControllerMode, NavConfig, Thresholds};
