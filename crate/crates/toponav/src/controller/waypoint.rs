//! High-level waypoint prediction over contextified targets. Two
//! interchangeable backends behind one interface: a privileged oracle
//! (ground-truth poses plus shortest-path waypoints) and non-privileged
//! correlative scan registration.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::config::ControllerConfig;
use crate::geometry::Pose2;
use crate::sim::{DistanceField, Environment, Observation, SimConfig};

use super::context::AnchorContext;
use super::overlap::{overlap_privileged, overlap_with_transform};
use super::registration::{FieldSet, MatchResult, ScanMatcher};

/// Predicted waypoint in the vehicle-local frame, with the auxiliary
/// quantities the follower and the reachability surrogate consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointPrediction {
    pub x: f64,
    pub y: f64,
    /// Predicted theta_target - theta_current.
    pub heading_diff: f64,
    /// Mutual overlap (current -> target, target -> current).
    pub overlap: (f64, f64),
    /// Estimated straight-line distance to the anchor.
    pub target_dist: f64,
    /// Registration score; 1.0 in oracle mode.
    pub score: f64,
}

/// The target is not locally actionable for this observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no registration match against the target context")]
pub struct NoMatch;

/// Shared store of per-anchor shortest-path fields, keyed by target cell.
#[derive(Clone)]
pub struct FieldCache {
    env: Arc<Environment>,
    fields: Arc<RwLock<HashMap<(i64, i64), Option<Arc<DistanceField>>>>>,
}

impl FieldCache {
    pub fn new(env: Arc<Environment>) -> Self {
        Self {
            env,
            fields: Arc::new(RwLock::new(HashMap::new())),
        }
    }

    pub fn env(&self) -> &Arc<Environment> {
        &self.env
    }

    /// Distance field toward a world position; None if its cell is occupied.
    pub fn field_to(&self, target: (f64, f64)) -> Option<Arc<DistanceField>> {
        let cell = self.env.world_to_cell(target.0, target.1);
        if let Some(hit) = self.fields.read().unwrap().get(&cell) {
            return hit.clone();
        }
        let built = DistanceField::build(&self.env, target).ok().map(Arc::new);
        self.fields
            .write()
            .unwrap()
            .entry(cell)
            .or_insert_with(|| built.clone());
        built
    }
}

/// Privileged waypoint oracle: the next waypoint along the ground-truth
/// shortest path toward the anchor, heading difference exact.
pub struct OraclePredictor {
    fields: FieldCache,
    target_pose: Pose2,
    field: Option<Arc<DistanceField>>,
    lookahead: f64,
    fov: f64,
}

impl OraclePredictor {
    pub fn new(fields: FieldCache, target: &AnchorContext, cfg: &ControllerConfig, sim: &SimConfig) -> Self {
        let target_pose = target.anchor_pose();
        let field = fields.field_to(target_pose.position());
        Self {
            fields,
            target_pose,
            field,
            lookahead: cfg.waypoint_lookahead,
            fov: sim.fov,
        }
    }

    pub fn predict(&self, current: &Observation, target: &AnchorContext) -> WaypointPrediction {
        let cur = current.privileged_pose.pose();
        let dist = cur.distance(&self.target_pose);
        let wp_world = match &self.field {
            Some(field) if dist > self.lookahead => field
                .waypoint_along(self.fields.env(), cur.x, cur.y, self.lookahead)
                .unwrap_or(self.target_pose.position()),
            _ => self.target_pose.position(),
        };
        let (mut wx, mut wy) = cur.inverse_transform_point(wp_world.0, wp_world.1);
        let norm = (wx * wx + wy * wy).sqrt();
        if norm > self.lookahead {
            wx *= self.lookahead / norm;
            wy *= self.lookahead / norm;
        }
        WaypointPrediction {
            x: wx,
            y: wy,
            heading_diff: crate::geometry::wrap_angle(self.target_pose.theta - cur.theta),
            overlap: overlap_privileged(current, target.center(), self.fov),
            target_dist: dist,
            score: 1.0,
        }
    }
}

/// Non-privileged predictor: correlative registration of the live scan
/// against the context frames; the best-scoring frame anchors the target
/// through the context's recorded relative offsets.
pub struct RegistrationPredictor {
    matcher: ScanMatcher,
    rel_poses: Vec<Pose2>,
    tracked: Option<MatchResult>,
    steps: usize,
    match_threshold: f64,
    lookahead: f64,
    fov: f64,
}

impl RegistrationPredictor {
    pub fn new(target: &AnchorContext, cfg: &ControllerConfig, sim: &SimConfig) -> Self {
        let fields = std::sync::Arc::new(FieldSet::build(&target.frames, sim.fov, sim.max_range));
        Self::with_fields(fields, target, cfg, sim)
    }

    /// Reuse prebuilt likelihood fields (e.g. cached per map vertex).
    pub fn with_fields(
        fields: std::sync::Arc<FieldSet>,
        target: &AnchorContext,
        cfg: &ControllerConfig,
        sim: &SimConfig,
    ) -> Self {
        Self {
            matcher: ScanMatcher::with_fields(fields),
            rel_poses: target.rel_poses.clone(),
            tracked: None,
            steps: 0,
            match_threshold: cfg.match_threshold,
            lookahead: cfg.waypoint_lookahead,
            fov: sim.fov,
        }
    }

    /// Seed the tracking lock, e.g. with a match computed once at an
    /// unjittered source pose and shared across that estimate's rollouts.
    pub fn seed_track(&mut self, m: MatchResult) {
        self.tracked = Some(m);
    }

    /// One full sweep against the target context, without touching the
    /// tracking state.
    pub fn full_match(&mut self, current: &Observation) -> Option<MatchResult> {
        self.matcher.match_full(current)
    }

    /// Raw best match for the current scan, updating the tracking lock.
    pub fn register(&mut self, current: &Observation) -> Option<MatchResult> {
        self.steps += 1;
        let probe = self.steps % 4 == 0;
        let candidate = match self.tracked {
            Some(prev) => {
                let tracked = self.matcher.match_tracked(current, &prev, probe);
                match tracked {
                    Some(m) if m.score >= self.match_threshold => Some(m),
                    // lock lost: pay for one full sweep
                    _ => self.matcher.match_full(current),
                }
            }
            None => self.matcher.match_full(current),
        };
        match candidate {
            Some(m) if m.score >= self.match_threshold => {
                self.tracked = Some(m);
                Some(m)
            }
            _ => {
                self.tracked = None;
                None
            }
        }
    }

    pub fn predict(
        &mut self,
        current: &Observation,
        target: &AnchorContext,
    ) -> Result<WaypointPrediction, NoMatch> {
        let m = self.register(current).ok_or(NoMatch)?;
        // pose of the live sensor in the anchor frame
        let in_anchor = self.rel_poses[m.frame_idx].compose(&m.pose_in_frame);
        let (mut wx, mut wy) = in_anchor.inverse_transform_point(0.0, 0.0);
        let dist = (wx * wx + wy * wy).sqrt();
        if dist > self.lookahead {
            wx *= self.lookahead / dist;
            wy *= self.lookahead / dist;
        }
        Ok(WaypointPrediction {
            x: wx,
            y: wy,
            heading_diff: crate::geometry::wrap_angle(-in_anchor.theta),
            overlap: overlap_with_transform(current, target.center(), &in_anchor, self.fov),
            target_dist: dist,
            score: m.score,
        })
    }
}

/// The configured waypoint predictor for one target context.
pub enum WaypointPredictor {
    Oracle(OraclePredictor),
    Registration(RegistrationPredictor),
}

impl WaypointPredictor {
    pub fn predict(
        &mut self,
        current: &Observation,
        target: &AnchorContext,
    ) -> Result<WaypointPrediction, NoMatch> {
        match self {
            WaypointPredictor::Oracle(p) => Ok(p.predict(current, target)),
            WaypointPredictor::Registration(p) => p.predict(current, target),
        }
    }
}
