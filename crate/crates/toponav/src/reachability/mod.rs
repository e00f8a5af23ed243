//! The reachability estimator: the probability that the local controller
//! drives the vehicle from one observation to another within the
//! shortest-path time budget. Realized as a seeded Monte-Carlo rollout
//! oracle with caching, plus a calibrated non-privileged surrogate for
//! online use.

mod cache;
mod surrogate;

pub use cache::{CacheEntry, ReachCache, CACHE_HEADER};
pub use surrogate::{
    CalibrationError, CalibrationTable, SurrogateFeatures, SurrogateReachability,
};

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{ControllerConfig, ControllerMode, ReachConfig};
use crate::controller::{
    make_predictor, run_to_target, AnchorContext, FieldCache, RegistrationPredictor,
    WaypointPredictor,
};
use crate::geometry::Pose2;
use crate::sim::{Environment, Observation, SimConfig, Simulator, VehicleState};

/// How an estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Oracle,
    Surrogate,
    Cached,
}

/// A reachability probability with its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachEstimate {
    pub p: f64,
    /// Rollout count behind an oracle estimate; 0 for the surrogate.
    pub n: u32,
    pub source_kind: SourceKind,
}

/// One reachability question.
pub struct ReachQuery<'a> {
    pub source: &'a Observation,
    pub target: &'a AnchorContext,
    pub n_rollouts: u32,
    pub jitter_pos: f64,
    pub jitter_heading: f64,
}

/// Anything that can answer reachability questions.
pub trait ReachEstimator: Sync {
    fn estimate(&self, source: &Observation, target: &AnchorContext) -> ReachEstimate;
}

/// Everything needed to spawn rollout simulators.
#[derive(Clone)]
pub struct RolloutWorld {
    pub env: Arc<Environment>,
    pub sim: SimConfig,
    pub ctl: ControllerConfig,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Monte-Carlo oracle: rollouts from jittered copies of the source state
/// with deadline t_max = shortest-path-length / v_min, memoized by frame
/// identity and configuration hash.
pub struct OracleReachability {
    world: RolloutWorld,
    fields: FieldCache,
    cache: ReachCache,
    reach: ReachConfig,
    config_hash: u64,
    /// Abort an estimate once exceeding this threshold is impossible.
    /// Sound for threshold comparisons; the recorded (p, n) keeps the
    /// rollouts actually run.
    early_stop_above: Option<f64>,
    rollouts_run: AtomicU64,
}

impl OracleReachability {
    pub fn new(world: RolloutWorld, reach: ReachConfig, config_hash: u64) -> Self {
        let fields = FieldCache::new(world.env.clone());
        Self {
            world,
            fields,
            cache: ReachCache::new(),
            reach,
            config_hash,
            early_stop_above: None,
            rollouts_run: AtomicU64::new(0),
        }
    }

    /// Enable deterministic early abort for strict-threshold queries.
    /// Mixed into the cache namespace: truncated and full estimates
    /// never collide.
    pub fn with_early_stop(mut self, threshold: f64) -> Self {
        self.early_stop_above = Some(threshold);
        self.config_hash = splitmix(self.config_hash ^ threshold.to_bits());
        self
    }

    pub fn with_cache(mut self, cache: ReachCache) -> Self {
        self.cache = cache;
        self
    }

    pub fn cache(&self) -> &ReachCache {
        &self.cache
    }

    pub fn config_hash(&self) -> u64 {
        self.config_hash
    }

    pub fn field_cache(&self) -> &FieldCache {
        &self.fields
    }

    pub fn world(&self) -> &RolloutWorld {
        &self.world
    }

    /// Total rollouts executed by this instance (cache hits run none).
    pub fn rollouts_run(&self) -> u64 {
        self.rollouts_run.load(Ordering::Relaxed)
    }

    fn seed_for(&self, source: &Observation, target: &AnchorContext, rollout: usize) -> u64 {
        let mut h = splitmix(self.reach.seed ^ self.config_hash);
        let pose = source.privileged_pose;
        for bits in [
            pose.x.to_bits(),
            pose.y.to_bits(),
            pose.theta.to_bits(),
            target.anchor_pose().x.to_bits(),
            target.anchor_pose().y.to_bits(),
            target.anchor_pose().theta.to_bits(),
        ] {
            h = splitmix(h ^ bits);
        }
        splitmix(h ^ rollout as u64)
    }

    /// Jittered start state; falls back to the unjittered pose when the
    /// jitter lands in collision. Jitter is truncated at two sigma so a
    /// jittered self-target still sits inside the arrival region.
    fn jitter_start(&self, base: Pose2, rng: &mut ChaCha8Rng) -> VehicleState {
        let pos = Normal::new(0.0, self.reach.jitter_pos.max(1e-12)).unwrap();
        let ang = Normal::new(0.0, self.reach.jitter_heading.max(1e-12)).unwrap();
        for _ in 0..10 {
            let cap_p = 2.0 * self.reach.jitter_pos;
            let cap_a = 2.0 * self.reach.jitter_heading;
            let dx = pos.sample(rng).clamp(-cap_p, cap_p);
            let dy = pos.sample(rng).clamp(-cap_p, cap_p);
            let dt = ang.sample(rng).clamp(-cap_a, cap_a);
            let pose = Pose2::new(base.x + dx, base.y + dy, base.theta + dt);
            if !self
                .world
                .env
                .disc_hits_static(pose.x, pose.y, self.world.sim.footprint_radius)
            {
                return VehicleState::at_pose(pose);
            }
        }
        VehicleState::at_pose(base)
    }

    /// Run the estimate without touching the cache.
    pub fn estimate_uncached(&self, q: &ReachQuery) -> ReachEstimate {
        let target_pose = q.target.anchor_pose();
        let field = self.fields.field_to(target_pose.position());
        let source_pose = q.source.privileged_pose.pose();
        let reachable = field
            .as_ref()
            .and_then(|f| f.distance_at(source_pose.x, source_pose.y))
            .is_some();
        if !reachable {
            return ReachEstimate {
                p: 0.0,
                n: q.n_rollouts,
                source_kind: SourceKind::Oracle,
            };
        }
        let field = field.unwrap();

        // registration rollouts share one full sweep from the unjittered
        // source; the tracked window absorbs the jitter
        let seed_match = match self.world.ctl.mode {
            ControllerMode::Registration => {
                let mut p =
                    RegistrationPredictor::new(q.target, &self.world.ctl, &self.world.sim);
                p.full_match(q.source)
            }
            ControllerMode::Oracle => None,
        };

        let needed = self
            .early_stop_above
            .map(|thr| (thr * q.n_rollouts as f64).floor() as u32 + 1);
        let mut reached = 0u32;
        let mut ran = 0u32;
        for i in 0..q.n_rollouts {
            if let Some(need) = needed {
                if reached + (q.n_rollouts - ran) < need {
                    break; // threshold unreachable; remaining rollouts moot
                }
            }
            let seed = self.seed_for(q.source, q.target, i as usize);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let start = self.jitter_start(source_pose, &mut rng);
            let t_max = field
                .distance_at(start.x, start.y)
                .map(|d| d / self.world.sim.v_min)
                .unwrap_or(0.0);
            let max_steps = (t_max / self.world.sim.dt).ceil() as usize;
            let mut sim = Simulator::with_seed(
                self.world.env.clone(),
                self.world.sim.clone(),
                start,
                splitmix(seed),
            );
            let mut predictor = make_predictor(&self.world.ctl, &self.world.sim, &self.fields, q.target);
            if let (WaypointPredictor::Registration(rp), Some(m)) = (&mut predictor, seed_match) {
                rp.seed_track(m);
            }
            let out = run_to_target(&mut sim, &mut predictor, q.target, max_steps, &self.world.ctl);
            ran += 1;
            self.rollouts_run.fetch_add(1, Ordering::Relaxed);
            if out.reached() {
                reached += 1;
            }
        }
        let n = ran.max(1);
        ReachEstimate {
            p: reached as f64 / n as f64,
            n,
            source_kind: SourceKind::Oracle,
        }
    }
}

impl ReachEstimator for OracleReachability {
    fn estimate(&self, source: &Observation, target: &AnchorContext) -> ReachEstimate {
        let key = source.frame_id.zip(target.frame_id());
        if let Some((s, t)) = key {
            if let Some(hit) = self.cache.get(s, t, self.config_hash) {
                return ReachEstimate {
                    p: hit.p,
                    n: hit.n,
                    source_kind: SourceKind::Cached,
                };
            }
        }
        let est = self.estimate_uncached(&ReachQuery {
            source,
            target,
            n_rollouts: self.reach.n_rollouts as u32,
            jitter_pos: self.reach.jitter_pos,
            jitter_heading: self.reach.jitter_heading,
        });
        if let Some((s, t)) = key {
            self.cache.insert(
                s,
                t,
                self.config_hash,
                CacheEntry {
                    p: est.p,
                    n: est.n,
                    seed: self.reach.seed,
                },
            );
        }
        est
    }
}
