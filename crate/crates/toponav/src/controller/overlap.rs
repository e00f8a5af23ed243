//! Mutual scan overlap: how much of one depth scan's content is visible
//! from another. The depth-scan analog of mutual image overlap — a ray
//! endpoint of one scan counts as visible in the other when it falls
//! inside the other's field of view and sensed free space.

use crate::geometry::Pose2;
use crate::sim::Observation;

/// Slack added to the other scan's interpolated range before an endpoint
/// is ruled out. Must stay well below one grid cell.
pub const OVERLAP_TOL: f64 = 0.05;

/// Fraction of `a`'s endpoints visible in `b`, given the pose of `a`'s
/// sensor expressed in `b`'s frame.
fn directed_overlap(a: &Observation, b: &Observation, a_in_b: &Pose2, fov: f64) -> f64 {
    let n = a.depth.len();
    let mut visible = 0usize;
    for (i, &d) in a.depth.iter().enumerate() {
        let bearing_a = Observation::ray_bearing(fov, n, i);
        let (ex, ey) = (d * bearing_a.cos(), d * bearing_a.sin());
        let (bx, by) = a_in_b.transform_point(ex, ey);
        let range = (bx * bx + by * by).sqrt();
        let bearing_b = by.atan2(bx);
        if let Some(expected) = b.range_at_bearing(fov, bearing_b) {
            if range <= expected + OVERLAP_TOL {
                visible += 1;
            }
        }
    }
    visible as f64 / n as f64
}

/// Mutual overlap (r_ab, r_ba) for a known relative transform.
pub fn overlap_with_transform(
    a: &Observation,
    b: &Observation,
    a_in_b: &Pose2,
    fov: f64,
) -> (f64, f64) {
    (
        directed_overlap(a, b, a_in_b, fov),
        directed_overlap(b, a, &a_in_b.inverse(), fov),
    )
}

/// Mutual overlap computed from privileged poses (oracle path).
pub fn overlap_privileged(a: &Observation, b: &Observation, fov: f64) -> (f64, f64) {
    let a_in_b = b.privileged_pose.pose().relative_to(&a.privileged_pose.pose());
    overlap_with_transform(a, b, &a_in_b, fov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2;
    use crate::sim::{sense, Environment, SimConfig, VehicleState};

    fn box_env() -> Environment {
        let mut text = String::from("24 24 0.25\n");
        for r in 0..24 {
            for c in 0..24 {
                let wall = r == 0 || r == 23 || c == 0 || c == 23;
                text.push(if wall { '#' } else { '.' });
            }
            text.push('\n');
        }
        Environment::parse(&text).unwrap()
    }

    fn obs_at(env: &Environment, cfg: &SimConfig, pose: Pose2) -> Observation {
        sense(env, &VehicleState::at_pose(pose), cfg, 0.0, 0)
    }

    #[test]
    fn self_overlap_is_exactly_one() {
        let env = box_env();
        let cfg = SimConfig::default();
        let o = obs_at(&env, &cfg, Pose2::new(3.0, 3.0, 0.7));
        let identity = Pose2::new(0.0, 0.0, 0.0);
        assert_eq!(overlap_with_transform(&o, &o, &identity, cfg.fov), (1.0, 1.0));
    }

    #[test]
    fn bounded_in_unit_interval() {
        let env = box_env();
        let cfg = SimConfig::default();
        for i in 0..12 {
            let a = obs_at(&env, &cfg, Pose2::new(1.5 + 0.3 * i as f64, 2.0, 0.4 * i as f64));
            let b = obs_at(&env, &cfg, Pose2::new(4.0, 3.5 - 0.2 * i as f64, -0.3 * i as f64));
            let (r1, r2) = overlap_privileged(&a, &b, cfg.fov);
            assert!((0.0..=1.0).contains(&r1));
            assert!((0.0..=1.0).contains(&r2));
        }
    }

    #[test]
    fn back_to_back_below_half() {
        // open space: every reading caps at max_range, so the analytic
        // oracle is pure circle geometry
        let text = format!("50 50 1.0\n{}", format!("{}\n", ".".repeat(50)).repeat(50));
        let env = Environment::parse(&text).unwrap();
        let cfg = SimConfig::default();
        let pa = Pose2::new(25.0, 25.0, 0.0);
        let pb = Pose2::new(25.3, 25.0, std::f64::consts::PI);
        let a = obs_at(&env, &cfg, pa);
        let b = obs_at(&env, &cfg, pb);
        let (r1, r2) = overlap_privileged(&a, &b, cfg.fov);
        assert!(r1 < 0.5, "r_ab = {r1}");
        assert!(r2 < 0.5, "r_ba = {r2}");
        // analytic oracle: endpoint of a at max_range along phi is
        // visible from b iff its bearing falls in b's FOV and it sits
        // within b's (all max_range) free disc
        let n = a.depth.len();
        let mut expect = 0usize;
        for i in 0..n {
            let phi = pa.theta + Observation::ray_bearing(cfg.fov, n, i);
            let (ex, ey) = (pa.x + 5.0 * phi.cos(), pa.y + 5.0 * phi.sin());
            let from_b = ((ex - pb.x).powi(2) + (ey - pb.y).powi(2)).sqrt();
            let bearing_b = crate::geometry::wrap_angle((ey - pb.y).atan2(ex - pb.x) - pb.theta);
            if bearing_b.abs() <= cfg.fov / 2.0 && from_b <= 5.0 + OVERLAP_TOL {
                expect += 1;
            }
        }
        assert_eq!((r1 * n as f64).round() as usize, expect);
    }

    #[test]
    fn wall_between_kills_overlap() {
        // two cells thick wall splitting the box
        let mut text = String::from("24 24 0.25\n");
        for r in 0..24 {
            for c in 0..24 {
                let wall = r == 0 || r == 23 || c == 0 || c == 23 || c == 11 || c == 12;
                text.push(if wall { '#' } else { '.' });
            }
            text.push('\n');
        }
        let env = Environment::parse(&text).unwrap();
        let cfg = SimConfig::default();
        let a = obs_at(&env, &cfg, Pose2::new(1.5, 3.0, 0.0));
        let b = obs_at(&env, &cfg, Pose2::new(4.5, 3.0, std::f64::consts::PI));
        let (r1, r2) = overlap_privileged(&a, &b, cfg.fov);
        assert!(r1 < 0.05, "r_ab = {r1}");
        assert!(r2 < 0.05, "r_ba = {r2}");
    }
}
