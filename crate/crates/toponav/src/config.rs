//! Runtime configuration: simulator limits, controller gains, estimator
//! settings and the probability thresholds that drive sparsification,
//! map construction and following.
//!
//! All thresholds compare with strict `>` (or `<` for the dead-reckoning
//! entry check); defaults follow the values used throughout the
//! experiment suite: p_sparsify = p_edge = p_reuse = 0.99 and
//! p_search = p_follow = 0.92.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::sim::SimConfig;

/// Which waypoint predictor backs the local controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerMode {
    /// Privileged: ground-truth poses and shortest-path waypoints.
    Oracle,
    /// Non-privileged: correlative scan registration against context frames.
    Registration,
}

/// Parameters of the two-stage local controller.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub mode: ControllerMode,
    /// Context half-length k: a target carries 2k+1 frames.
    pub context_k: usize,
    /// Frame gap between context frames.
    pub context_delta_t: usize,
    /// Waypoint lookahead along the path toward the target, meters.
    pub waypoint_lookahead: f64,
    /// Attractor gain of the reactive controller.
    pub attractor_gain: f64,
    /// Velocity damping of the attractor.
    pub attractor_damping: f64,
    /// Repulsor gain (scales 1/d^2 obstacle terms).
    pub repulsor_gain: f64,
    /// Rays closer than this contribute repulsors, meters.
    pub clearance_radius: f64,
    /// Heading alignment gain for steering.
    pub heading_gain: f64,
    /// Steering rate damping.
    pub steering_damping: f64,
    /// Registration score below which a target is not actionable.
    pub match_threshold: f64,
    /// Consecutive NoMatch steps tolerated before a rollout aborts.
    pub no_match_grace: usize,
    /// Arrival: both overlap components must exceed this.
    pub arrival_overlap: f64,
    /// Arrival: distance to the anchor must be below this, meters.
    pub arrival_radius: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            mode: ControllerMode::Registration,
            context_k: 5,
            context_delta_t: 3,
            waypoint_lookahead: 1.0,
            attractor_gain: 2.0,
            attractor_damping: 2.8,
            repulsor_gain: 0.04,
            clearance_radius: 0.75,
            heading_gain: 6.0,
            steering_damping: 3.0,
            match_threshold: 0.35,
            no_match_grace: 10,
            arrival_overlap: 0.8,
            arrival_radius: 0.3,
        }
    }
}

impl ControllerConfig {
    pub fn with_mode_k(mode: ControllerMode, k: usize) -> Self {
        Self {
            mode,
            context_k: k,
            ..Self::default()
        }
    }
}

/// Monte-Carlo reachability estimation settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReachConfig {
    /// Rollouts per estimate during map construction.
    pub n_rollouts: usize,
    /// Start-position jitter std-dev, meters (truncated at 2 sigma).
    pub jitter_pos: f64,
    /// Start-heading jitter std-dev, radians (truncated at 2 sigma).
    pub jitter_heading: f64,
    /// Base seed for rollout fan-out.
    pub seed: u64,
}

impl Default for ReachConfig {
    fn default() -> Self {
        Self {
            n_rollouts: 16,
            jitter_pos: 0.1,
            jitter_heading: 0.1,
            seed: 0,
        }
    }
}

/// Probability thresholds of the mapping and following pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Thresholds {
    pub p_sparsify: f64,
    pub p_edge: f64,
    pub p_reuse: f64,
    pub p_search: f64,
    pub p_follow: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            p_sparsify: 0.99,
            p_edge: 0.99,
            p_reuse: 0.99,
            p_search: 0.92,
            p_follow: 0.92,
        }
    }
}

/// Planner settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Floor for virtual start/goal attachment edges. Distinct from the
    /// map's p_edge: attachment must admit mid-probability edges or no
    /// plan would ever leave the start.
    pub p_attach: f64,
    /// Keep only the best this-many attachment candidates per side.
    /// None disables the cap.
    pub attach_cap: Option<usize>,
    /// Abort when the best path probability is at or below this.
    pub abort_threshold: f64,
    /// Observation window length for sequence matching.
    pub sequence_window: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            p_attach: 0.05,
            attach_cap: Some(50),
            abort_threshold: 0.2,
            sequence_window: 3,
        }
    }
}

/// Follower settings beyond the shared thresholds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FollowerConfig {
    /// Overlap both-components floor for "within proximity" advancement.
    pub proximity_overlap: f64,
    /// Anchors scanned around the active one for last-visited tracking.
    pub visit_window: usize,
    /// Dead-reckoning steps tolerated before requesting a replan.
    pub discrepancy_limit: usize,
    /// Odometry drift: displacement noise as a fraction of distance.
    pub odom_drift: f64,
    /// Replans allowed per navigation.
    pub replan_budget: usize,
    /// Hard cap on simulation steps per navigation.
    pub step_budget: usize,
}

impl Default for FollowerConfig {
    fn default() -> Self {
        Self {
            proximity_overlap: 0.6,
            visit_window: 2,
            discrepancy_limit: 50,
            odom_drift: 0.02,
            replan_budget: 3,
            step_budget: 4000,
        }
    }
}

/// Top-level configuration document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NavConfig {
    pub sim: SimConfig,
    pub controller: ControllerConfig,
    pub reach: ReachConfig,
    pub thresholds: Thresholds,
    pub planner: PlannerConfig,
    pub follower: FollowerConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
}

impl NavConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Hash of everything that affects rollout outcomes. Reachability
    /// caches and maps are keyed by this so estimates never leak across
    /// controller or simulator configurations.
    pub fn rollout_hash(&self) -> u64 {
        let mut hasher = Sha256::new();
        let body = serde_json::to_string(&(&self.sim, &self.controller, &self.reach))
            .expect("config serializes");
        hasher.update(body.as_bytes());
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }
}
