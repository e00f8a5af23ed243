//! The two-stage local controller: waypoint prediction over contextified
//! targets feeding a reactive acceleration-policy sum.

mod context;
mod overlap;
mod registration;
mod rmp;
mod rollout;
mod waypoint;

pub use context::AnchorContext;
pub use overlap::{overlap_privileged, overlap_with_transform, OVERLAP_TOL};
pub use registration::{FieldSet, LikelihoodField, MatchResult, ScanMatcher};
pub use rmp::rmp_control;
pub use rollout::{arrived, run_to_target, RolloutOutcome};
pub use waypoint::{
    FieldCache, NoMatch, OraclePredictor, RegistrationPredictor, WaypointPrediction,
    WaypointPredictor,
};

use crate::config::{ControllerConfig, ControllerMode};
use crate::sim::SimConfig;

/// Build the configured predictor for one target context. Oracle mode
/// needs the shared field cache; registration mode is self-contained.
pub fn make_predictor(
    ctl: &ControllerConfig,
    sim: &SimConfig,
    fields: &FieldCache,
    target: &AnchorContext,
) -> WaypointPredictor {
    match ctl.mode {
        ControllerMode::Oracle => {
            WaypointPredictor::Oracle(OraclePredictor::new(fields.clone(), target, ctl, sim))
        }
        ControllerMode::Registration => {
            WaypointPredictor::Registration(RegistrationPredictor::new(target, ctl, sim))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ControllerConfig, ControllerMode};
    use crate::fixtures;
    use crate::geometry::Pose2;
    use crate::sim::{sense, Action, SimConfig, Simulator, Trajectory, VehicleState};
    use std::sync::Arc;

    fn corridor_traj(env: &crate::sim::Environment, cfg: &SimConfig, n: usize) -> Trajectory {
        let mut traj = Trajectory::new(1);
        for i in 0..n {
            let pose = Pose2::new(1.0 + 0.1 * i as f64, 2.5, 0.0);
            let state = VehicleState::at_pose(pose);
            traj.push(state, Action::ZERO, sense(env, &state, cfg, 0.0, i));
        }
        traj
    }

    #[test]
    fn rollout_reaches_identical_target_immediately() {
        let env = Arc::new(fixtures::corridor());
        let sim_cfg = SimConfig::default();
        let ctl = ControllerConfig::default();
        let traj = corridor_traj(&env, &sim_cfg, 40);
        let target = AnchorContext::from_trajectory(&traj, 20, ctl.context_k, ctl.context_delta_t);
        let start = VehicleState::at_pose(target.anchor_pose());
        let mut sim = Simulator::with_seed(env.clone(), sim_cfg.clone(), start, 0);
        let fields = FieldCache::new(env);
        let mut pred = make_predictor(&ctl, &sim_cfg, &fields, &target);
        let out = run_to_target(&mut sim, &mut pred, &target, 100, &ctl);
        assert_eq!(out, RolloutOutcome::Reached { steps: 0 });
    }

    #[test]
    fn rollout_never_reaches_across_wall() {
        // corridor split by a full-height wall
        let mut text = String::from("40 20 0.25\n");
        for r in 0..20 {
            for c in 0..40 {
                let wall = r == 0 || r == 19 || c == 20;
                text.push(if wall { '#' } else { '.' });
            }
            text.push('\n');
        }
        let env = Arc::new(crate::sim::Environment::parse(&text).unwrap());
        let sim_cfg = SimConfig::default();
        let ctl = ControllerConfig::default();
        // target on the far side
        let mut traj = Trajectory::new(2);
        let tp = Pose2::new(8.0, 2.5, 0.0);
        let ts = VehicleState::at_pose(tp);
        traj.push(ts, Action::ZERO, sense(&env, &ts, &sim_cfg, 0.0, 0));
        let target = AnchorContext::from_trajectory(&traj, 0, ctl.context_k, ctl.context_delta_t);
        let start = VehicleState::at_pose(Pose2::new(2.0, 2.5, 0.0));
        let mut sim = Simulator::with_seed(env.clone(), sim_cfg.clone(), start, 0);
        let fields = FieldCache::new(env);
        let mut pred = make_predictor(&ctl, &sim_cfg, &fields, &target);
        let out = run_to_target(&mut sim, &mut pred, &target, 200, &ctl);
        assert!(!out.reached(), "unreachable target produced {out:?}");
    }

    #[test]
    fn oracle_rollout_covers_two_meters() {
        let env = Arc::new(fixtures::corridor());
        let sim_cfg = SimConfig::default();
        let ctl = ControllerConfig {
            mode: ControllerMode::Oracle,
            ..ControllerConfig::default()
        };
        let traj = corridor_traj(&env, &sim_cfg, 60);
        let target = AnchorContext::from_trajectory(&traj, 50, ctl.context_k, ctl.context_delta_t);
        let start = VehicleState::at_pose(Pose2::new(4.0, 2.5, 0.0));
        let mut sim = Simulator::with_seed(env.clone(), sim_cfg.clone(), start, 0);
        let fields = FieldCache::new(env);
        let mut pred = make_predictor(&ctl, &sim_cfg, &fields, &target);
        let out = run_to_target(&mut sim, &mut pred, &target, 200, &ctl);
        assert!(out.reached(), "oracle rollout got {out:?}");
    }

    #[test]
    fn registration_rollout_covers_two_meters() {
        let env = Arc::new(fixtures::corridor());
        let sim_cfg = SimConfig::default();
        let ctl = ControllerConfig::default();
        let traj = corridor_traj(&env, &sim_cfg, 60);
        let target = AnchorContext::from_trajectory(&traj, 50, ctl.context_k, ctl.context_delta_t);
        let start = VehicleState::at_pose(Pose2::new(4.0, 2.5, 0.0));
        let mut sim = Simulator::with_seed(env.clone(), sim_cfg.clone(), start, 0);
        let fields = FieldCache::new(env);
        let mut pred = make_predictor(&ctl, &sim_cfg, &fields, &target);
        let out = run_to_target(&mut sim, &mut pred, &target, 200, &ctl);
        assert!(out.reached(), "registration rollout got {out:?}");
    }

    #[test]
    fn rollouts_deterministic_under_seed() {
        let env = Arc::new(fixtures::corridor());
        let sim_cfg = SimConfig {
            noise_sigma: 0.33,
            ..SimConfig::default()
        };
        let ctl = ControllerConfig::default();
        let traj = corridor_traj(&env, &sim_cfg, 60);
        let target = AnchorContext::from_trajectory(&traj, 45, ctl.context_k, ctl.context_delta_t);
        let fields = FieldCache::new(env.clone());
        let run = |seed: u64| {
            let start = VehicleState::at_pose(Pose2::new(3.5, 2.4, 0.1));
            let mut sim = Simulator::with_seed(env.clone(), sim_cfg.clone(), start, seed);
            let mut pred = make_predictor(&ctl, &sim_cfg, &fields, &target);
            let out = run_to_target(&mut sim, &mut pred, &target, 150, &ctl);
            (out, *sim.state())
        };
        assert_eq!(run(11), run(11));
    }
}
