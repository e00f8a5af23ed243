//! Unicycle vehicle state, bounded actions and the noisy Euler step.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Pose2};

/// Vehicle state: planar pose plus forward and steering velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
}

impl VehicleState {
    pub fn at_pose(pose: Pose2) -> Self {
        Self {
            x: pose.x,
            y: pose.y,
            theta: pose.theta,
            v: 0.0,
            omega: 0.0,
        }
    }

    pub fn pose(&self) -> Pose2 {
        Pose2::new(self.x, self.y, self.theta)
    }
}

/// Forward acceleration and steering-velocity rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub accel: f64,
    pub steer_rate: f64,
}

impl Action {
    pub const ZERO: Action = Action {
        accel: 0.0,
        steer_rate: 0.0,
    };

    pub fn clamped(&self, cfg: &SimConfig) -> Action {
        Action {
            accel: self.accel.clamp(-cfg.a_max, cfg.a_max),
            steer_rate: self.steer_rate.clamp(-cfg.alpha_max, cfg.alpha_max),
        }
    }
}

/// Simulator parameters. The defaults model the vehicle used across the
/// fixture experiments; the kinematic limits are knobs, not claims.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Step size, seconds.
    pub dt: f64,
    /// Std-dev of the multiplicative control noise factor.
    pub noise_sigma: f64,
    /// Minimum velocity used for rollout deadlines.
    pub v_min: f64,
    /// Sensor maximum range, meters.
    pub max_range: f64,
    /// Number of depth rays.
    pub n_rays: usize,
    /// Sensor field of view, radians.
    pub fov: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub a_max: f64,
    pub alpha_max: f64,
    /// Disc footprint radius, meters.
    pub footprint_radius: f64,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            noise_sigma: 0.0,
            v_min: 0.25,
            max_range: 5.0,
            n_rays: 64,
            fov: 240.0_f64.to_radians(),
            v_max: 1.0,
            omega_max: 2.0,
            a_max: 2.0,
            alpha_max: 8.0,
            footprint_radius: 0.15,
            rng_seed: 0,
        }
    }
}

/// One Euler step with a single multiplicative noise draw applied to both
/// control channels, clamped to [0, 2] so noise never flips control signs.
/// Velocities update before position.
pub fn integrate<R: Rng>(
    state: &VehicleState,
    action: &Action,
    cfg: &SimConfig,
    rng: &mut R,
) -> VehicleState {
    let action = action.clamped(cfg);
    let s = if cfg.noise_sigma > 0.0 {
        Normal::new(1.0, cfg.noise_sigma)
            .expect("valid noise sigma")
            .sample(rng)
            .clamp(0.0, 2.0)
    } else {
        1.0
    };
    let v = (state.v + s * action.accel * cfg.dt).clamp(-cfg.v_max, cfg.v_max);
    let omega = (state.omega + s * action.steer_rate * cfg.dt).clamp(-cfg.omega_max, cfg.omega_max);
    let theta = wrap_angle(state.theta + omega * cfg.dt);
    VehicleState {
        x: state.x + v * cfg.dt * theta.cos(),
        y: state.y + v * cfg.dt * theta.sin(),
        theta,
        v,
        omega,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_action_at_rest_is_fixed_point() {
        let cfg = SimConfig {
            noise_sigma: 0.33,
            ..SimConfig::default()
        };
        let state = VehicleState::at_pose(Pose2::new(1.0, 2.0, 0.5));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let next = integrate(&state, &Action::ZERO, &cfg, &mut rng);
        assert_eq!(next, state);
    }

    #[test]
    fn euler_step_closed_form() {
        let cfg = SimConfig::default();
        let state = VehicleState::at_pose(Pose2::new(0.0, 0.0, 0.3));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let next = integrate(
            &state,
            &Action {
                accel: 1.0,
                steer_rate: 0.0,
            },
            &cfg,
            &mut rng,
        );
        assert!((next.v - 0.1).abs() < 1e-12);
        let disp = ((next.x).powi(2) + (next.y).powi(2)).sqrt();
        assert!((disp - 0.01).abs() < 1e-12);
        assert!((next.y / next.x - 0.3_f64.tan()).abs() < 1e-9);
    }

    #[test]
    fn velocity_clamped_at_limits() {
        let cfg = SimConfig::default();
        let mut state = VehicleState::at_pose(Pose2::new(0.0, 0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            state = integrate(
                &state,
                &Action {
                    accel: cfg.a_max,
                    steer_rate: cfg.alpha_max,
                },
                &cfg,
                &mut rng,
            );
            assert!(state.v <= cfg.v_max + 1e-12);
            assert!(state.omega <= cfg.omega_max + 1e-12);
        }
    }
}
