//! Reactive low-level control: a sum of acceleration policies — one
//! spring-damper attractor toward the waypoint and one repulsor per
//! nearby depth ray — resolved onto the unicycle's (accel, steer-rate)
//! controls and clamped to the action limits.

use crate::config::ControllerConfig;
use crate::geometry::wrap_angle;
use crate::sim::{Action, Observation, SimConfig};

/// Soft normalization: rises toward 1 with distance, linear near zero.
fn soft(d: f64) -> f64 {
    d / (d + 0.3)
}

/// Compute bounded controls for a waypoint in the vehicle-local frame.
/// `v` and `omega` are the current velocities. Passing a zero waypoint
/// yields pure damping plus obstacle repulsion (braking).
pub fn rmp_control(
    obs: &Observation,
    waypoint: (f64, f64),
    v: f64,
    omega: f64,
    ctl: &ControllerConfig,
    sim: &SimConfig,
) -> Action {
    let (wx, wy) = waypoint;
    let dist = (wx * wx + wy * wy).sqrt();
    // undamped direction field: attractor plus repulsors
    let mut fx = 0.0;
    let mut fy = 0.0;
    if dist > 1e-9 {
        let mag = ctl.attractor_gain * soft(dist);
        fx += mag * wx / dist;
        fy += mag * wy / dist;
    }
    // repulsors: rays inside the clearance radius push away as 1/d^2
    let n = obs.depth.len();
    let inv_c2 = 1.0 / (ctl.clearance_radius * ctl.clearance_radius);
    for (i, &d) in obs.depth.iter().enumerate() {
        if d >= ctl.clearance_radius {
            continue;
        }
        let d = d.max(0.05);
        let w = ctl.repulsor_gain * (1.0 / (d * d) - inv_c2);
        let b = Observation::ray_bearing(sim.fov, n, i);
        fx -= w * b.cos();
        fy -= w * b.sin();
    }

    // damping acts on the acceleration channel only; steering keeps the
    // undamped direction so it cannot collapse at cruise equilibrium
    let accel = (fx - ctl.attractor_damping * v).clamp(-sim.a_max, sim.a_max);
    // steer toward the force direction, folded through the rear axis
    // when the force points backward (reverse driving)
    let bearing = fy.atan2(fx);
    let folded = if bearing.abs() <= std::f64::consts::FRAC_PI_2 {
        bearing
    } else {
        wrap_angle(bearing - std::f64::consts::PI * bearing.signum())
    };
    let steer = (ctl.heading_gain * folded - ctl.steering_damping * omega)
        .clamp(-sim.alpha_max, sim.alpha_max);
    Action {
        accel,
        steer_rate: steer,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2;
    use crate::sim::{sense, Environment, VehicleState};

    fn open_obs(cfg: &SimConfig) -> Observation {
        let text = format!("40 40 1.0\n{}", format!("{}\n", ".".repeat(40)).repeat(40));
        let env = Environment::parse(&text).unwrap();
        sense(&env, &VehicleState::at_pose(Pose2::new(20.0, 20.0, 0.0)), cfg, 0.0, 0)
    }

    #[test]
    fn pure_attractor_drives_forward() {
        let ctl = ControllerConfig::default();
        let sim = SimConfig::default();
        let obs = open_obs(&sim);
        let a = rmp_control(&obs, (1.0, 0.0), 0.0, 0.0, &ctl, &sim);
        assert!(a.accel > 0.0);
        assert!(a.steer_rate.abs() < 1e-9);
    }

    #[test]
    fn left_wall_steers_right() {
        let ctl = ControllerConfig::default();
        let sim = SimConfig::default();
        // wall along the top (left of a vehicle heading +x), 0.5 m away
        let mut text = String::from("40 20 0.25\n");
        text.push_str(&format!("{}\n", "#".repeat(40)));
        for _ in 0..19 {
            text.push_str(&format!("{}\n", ".".repeat(40)));
        }
        let env = Environment::parse(&text).unwrap();
        let obs = sense(
            &env,
            &VehicleState::at_pose(Pose2::new(5.0, 4.25, 0.0)),
            &sim,
            0.0,
            0,
        );
        let a = rmp_control(&obs, (1.0, 0.0), 0.2, 0.0, &ctl, &sim);
        assert!(a.steer_rate < 0.0, "steer {} should turn right", a.steer_rate);
    }

    #[test]
    fn blocked_front_brakes() {
        let ctl = ControllerConfig::default();
        let sim = SimConfig::default();
        // wall 0.2 m ahead of the vehicle
        let mut text = String::from("40 20 0.25\n");
        for r in 0..20 {
            for c in 0..40 {
                text.push(if c == 22 { '#' } else if r == 0 || r == 19 { '#' } else { '.' });
            }
            text.push('\n');
        }
        let env = Environment::parse(&text).unwrap();
        let pose = Pose2::new(5.3, 2.5, 0.0); // wall cells start at x = 5.5
        let obs = sense(&env, &VehicleState::at_pose(pose), &sim, 0.0, 0);
        let a = rmp_control(&obs, (1.0, 0.0), 0.5, 0.0, &ctl, &sim);
        // independent sign check: sum the 1/d^2 weights of the frontal rays
        let mut frontal = 0.0;
        for (i, &d) in obs.depth.iter().enumerate() {
            if d < ctl.clearance_radius {
                let b = Observation::ray_bearing(sim.fov, obs.depth.len(), i);
                frontal += ctl.repulsor_gain * (1.0 / (d * d)) * b.cos();
            }
        }
        assert!(frontal > ctl.attractor_gain, "repulsion {frontal} must dominate");
        assert!(a.accel < 0.0, "accel {} should brake", a.accel);
    }

    #[test]
    fn output_always_bounded() {
        let ctl = ControllerConfig::default();
        let sim = SimConfig::default();
        let obs = open_obs(&sim);
        let mut obs2 = obs.clone();
        for (i, d) in obs2.depth.iter_mut().enumerate() {
            *d = 0.06 + 0.01 * (i % 7) as f64;
        }
        for (o, wx, wy, v, om) in [
            (&obs, 100.0, -50.0, 1.0, 2.0),
            (&obs, -3.0, 0.001, -1.0, -2.0),
            (&obs2, 0.0, 0.0, 0.7, 1.3),
            (&obs2, -0.4, 2.0, -0.2, 0.0),
        ] {
            let a = rmp_control(o, (wx, wy), v, om, &ctl, &sim);
            assert!(a.accel.abs() <= sim.a_max);
            assert!(a.steer_rate.abs() <= sim.alpha_max);
        }
    }

    #[test]
    fn waypoint_behind_reverses() {
        let ctl = ControllerConfig::default();
        let sim = SimConfig::default();
        let obs = open_obs(&sim);
        let a = rmp_control(&obs, (-1.0, 0.0), 0.0, 0.0, &ctl, &sim);
        assert!(a.accel < 0.0);
        assert!(a.steer_rate.abs() < 1e-9);
    }
}
