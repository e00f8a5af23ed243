//! Closed-loop rollouts: sense, predict a waypoint, react, step — until
//! the target is reached, the vehicle collides, the deadline passes or
//! registration loses the target for too long.

use crate::config::ControllerConfig;
use crate::sim::{Observation, Simulator, StepOutcome};

use super::context::AnchorContext;
use super::overlap::overlap_privileged;
use super::rmp::rmp_control;
use super::waypoint::WaypointPredictor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RolloutOutcome {
    Reached { steps: usize },
    Collided { steps: usize },
    Timeout,
    NoMatch,
}

impl RolloutOutcome {
    pub fn reached(&self) -> bool {
        matches!(self, RolloutOutcome::Reached { .. })
    }
}

/// Privileged arrival judge: close to the anchor and seeing what it saw.
pub fn arrived(obs: &Observation, target: &AnchorContext, ctl: &ControllerConfig, fov: f64) -> bool {
    let dist = obs.privileged_pose.pose().distance(&target.anchor_pose());
    if dist > ctl.arrival_radius {
        return false;
    }
    let (r1, r2) = overlap_privileged(obs, target.center(), fov);
    r1 >= ctl.arrival_overlap && r2 >= ctl.arrival_overlap
}

/// Drive the simulator toward a target context until an outcome. The
/// deadline is exclusive: `max_steps` steps may be taken, arrival is
/// checked before each.
pub fn run_to_target(
    sim: &mut Simulator,
    predictor: &mut WaypointPredictor,
    target: &AnchorContext,
    max_steps: usize,
    ctl: &ControllerConfig,
) -> RolloutOutcome {
    let mut no_match_streak = 0usize;
    for t in 0..=max_steps {
        let obs = sim.sense();
        if arrived(&obs, target, ctl, sim.cfg().fov) {
            return RolloutOutcome::Reached { steps: t };
        }
        if t == max_steps {
            return RolloutOutcome::Timeout;
        }
        let waypoint = match predictor.predict(&obs, target) {
            Ok(p) => {
                no_match_streak = 0;
                (p.x, p.y)
            }
            Err(_) => {
                no_match_streak += 1;
                if no_match_streak > ctl.no_match_grace {
                    return RolloutOutcome::NoMatch;
                }
                (0.0, 0.0) // brake while blind
            }
        };
        let state = *sim.state();
        let action = rmp_control(&obs, waypoint, state.v, state.omega, ctl, sim.cfg());
        if let StepOutcome::Collision = sim.step(&action) {
            return RolloutOutcome::Collided { steps: t + 1 };
        }
    }
    RolloutOutcome::Timeout
}
