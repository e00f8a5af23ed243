//! Deterministic 2D world: occupancy grids, unicycle dynamics with
//! multiplicative actuation noise, raycast depth sensing, and grid
//! shortest-path oracles.

mod astar;
mod environment;
mod sensor;
mod trajectory;
mod vehicle;

pub use astar::{astar, cost_to_meters, AstarPath, DistanceField, Unreachable, DIAG_COST, STRAIGHT_COST};
pub use environment::{DynamicObstacle, Environment, GridError};
pub use sensor::{raycast_static, sense, FrameId, Observation};
pub use trajectory::{Frame, Trajectory, TrajectoryError};
pub use vehicle::{integrate, Action, SimConfig, VehicleState};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Result of one simulation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Moved(VehicleState),
    Collision,
}

/// A single-threaded simulator instance owning its vehicle state. Many
/// instances may run in parallel over a shared immutable environment.
#[derive(Debug, Clone)]
pub struct Simulator {
    env: Arc<Environment>,
    cfg: SimConfig,
    state: VehicleState,
    t: usize,
    rng: ChaCha8Rng,
    collided: bool,
}

impl Simulator {
    pub fn new(env: Arc<Environment>, cfg: SimConfig, state: VehicleState) -> Self {
        let seed = cfg.rng_seed;
        Self::with_seed(env, cfg, state, seed)
    }

    pub fn with_seed(env: Arc<Environment>, cfg: SimConfig, state: VehicleState, seed: u64) -> Self {
        Self {
            env,
            cfg,
            state,
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            collided: false,
        }
    }

    pub fn env(&self) -> &Arc<Environment> {
        &self.env
    }

    pub fn cfg(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn state(&self) -> &VehicleState {
        &self.state
    }

    pub fn step_index(&self) -> usize {
        self.t
    }

    pub fn elapsed(&self) -> f64 {
        self.t as f64 * self.cfg.dt
    }

    pub fn collided(&self) -> bool {
        self.collided
    }

    /// Is a disc footprint at this pose free of static and dynamic
    /// obstacles at the current simulation time?
    pub fn pose_free(&self, x: f64, y: f64) -> bool {
        !self.env.disc_hits_static(x, y, self.cfg.footprint_radius)
            && !self
                .env
                .disc_hits_dynamic(x, y, self.cfg.footprint_radius, self.elapsed())
    }

    /// Advance one step. On collision the vehicle stays at its last
    /// valid state and the simulator latches the collision flag.
    pub fn step(&mut self, action: &Action) -> StepOutcome {
        let next = integrate(&self.state, action, &self.cfg, &mut self.rng);
        self.t += 1;
        let t_sec = self.elapsed();
        let hit = self
            .env
            .disc_hits_static(next.x, next.y, self.cfg.footprint_radius)
            || self
                .env
                .disc_hits_dynamic(next.x, next.y, self.cfg.footprint_radius, t_sec);
        if hit {
            self.collided = true;
            StepOutcome::Collision
        } else {
            self.state = next;
            StepOutcome::Moved(next)
        }
    }

    pub fn sense(&self) -> Observation {
        sense(&self.env, &self.state, &self.cfg, self.elapsed(), self.t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2;

    fn corridor() -> Arc<Environment> {
        let mut rows = String::new();
        rows.push_str(&"#".repeat(40));
        rows.push('\n');
        for _ in 0..8 {
            rows.push_str(&".".repeat(40));
            rows.push('\n');
        }
        rows.push_str(&"#".repeat(40));
        rows.push('\n');
        Arc::new(Environment::parse(&format!("40 10 0.25\n{rows}")).unwrap())
    }

    #[test]
    fn deterministic_under_seed() {
        let env = corridor();
        let cfg = SimConfig {
            noise_sigma: 0.33,
            ..SimConfig::default()
        };
        let start = VehicleState::at_pose(Pose2::new(2.0, 1.25, 0.0));
        let action = Action { accel: 0.8, steer_rate: 0.4 };
        let run = |seed| {
            let mut sim = Simulator::with_seed(env.clone(), cfg.clone(), start, seed);
            for _ in 0..30 {
                sim.step(&action);
            }
            (*sim.state(), sim.sense())
        };
        let (s1, o1) = run(7);
        let (s2, o2) = run(7);
        assert_eq!(s1, s2);
        assert_eq!(o1, o2);
        let (s3, _) = run(8);
        assert_ne!(s1, s3);
    }

    #[test]
    fn zero_noise_is_seed_independent() {
        let env = corridor();
        let cfg = SimConfig::default();
        let start = VehicleState::at_pose(Pose2::new(2.0, 1.25, 0.1));
        let action = Action { accel: 0.5, steer_rate: -0.2 };
        let run = |seed| {
            let mut sim = Simulator::with_seed(env.clone(), cfg.clone(), start, seed);
            for _ in 0..40 {
                sim.step(&action);
            }
            *sim.state()
        };
        assert_eq!(run(1), run(999));
    }

    #[test]
    fn driving_into_wall_collides() {
        let env = corridor();
        let cfg = SimConfig::default();
        // face the top wall from just below it
        let start = VehicleState::at_pose(Pose2::new(2.0, 2.0, std::f64::consts::FRAC_PI_2));
        let mut sim = Simulator::new(env, cfg, start);
        let mut collided = false;
        for _ in 0..100 {
            if let StepOutcome::Collision = sim.step(&Action { accel: 1.0, steer_rate: 0.0 }) {
                collided = true;
                break;
            }
        }
        assert!(collided);
        assert!(sim.collided());
    }

    #[test]
    fn displacement_bounded() {
        let env = corridor();
        let cfg = SimConfig {
            noise_sigma: 0.5,
            ..SimConfig::default()
        };
        let bound = cfg.v_max * cfg.dt + 0.5 * cfg.a_max * cfg.dt * cfg.dt;
        let mut sim = Simulator::with_seed(
            env,
            cfg,
            VehicleState::at_pose(Pose2::new(5.0, 1.25, 0.0)),
            3,
        );
        for i in 0..200 {
            let before = *sim.state();
            let action = Action {
                accel: if i % 3 == 0 { 2.0 } else { -1.5 },
                steer_rate: if i % 2 == 0 { 8.0 } else { -8.0 },
            };
            if let StepOutcome::Moved(after) = sim.step(&action) {
                let d = ((after.x - before.x).powi(2) + (after.y - before.y).powi(2)).sqrt();
                assert!(d <= bound + 1e-9, "step displacement {d} exceeds bound {bound}");
            }
        }
    }
}
