//! Depth sensing: a fan of rays cast through the occupancy grid and
//! against dynamic obstacle discs.

use serde::{Deserialize, Serialize};

use super::environment::Environment;
use super::vehicle::{SimConfig, VehicleState};

/// Identity of a recorded frame, used as a reachability cache key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameId {
    pub traj: u64,
    pub index: usize,
}

/// One depth scan. `privileged_pose` is provenance for the simulation
/// oracles only; the non-privileged controller path never reads it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub depth: Vec<f64>,
    pub privileged_pose: VehicleState,
    pub timestamp: usize,
    pub frame_id: Option<FrameId>,
}

impl Observation {
    /// Bearing of ray `i` relative to the vehicle heading.
    pub fn ray_bearing(cfg_fov: f64, n_rays: usize, i: usize) -> f64 {
        -cfg_fov / 2.0 + cfg_fov * i as f64 / (n_rays - 1) as f64
    }

    /// Endpoints of every ray in the sensor's local frame.
    pub fn local_endpoints(&self, fov: f64) -> Vec<(f64, f64)> {
        let n = self.depth.len();
        self.depth
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let b = Self::ray_bearing(fov, n, i);
                (d * b.cos(), d * b.sin())
            })
            .collect()
    }

    /// Linear interpolation of the scan range at an arbitrary bearing.
    /// Returns None outside the field of view.
    pub fn range_at_bearing(&self, fov: f64, bearing: f64) -> Option<f64> {
        if bearing < -fov / 2.0 || bearing > fov / 2.0 {
            return None;
        }
        let n = self.depth.len();
        let pos = (bearing + fov / 2.0) / fov * (n - 1) as f64;
        let i = pos.floor() as usize;
        if i + 1 >= n {
            return Some(self.depth[n - 1]);
        }
        let frac = pos - i as f64;
        Some(self.depth[i] * (1.0 - frac) + self.depth[i + 1] * frac)
    }
}

/// Distance along a ray to the first occupied cell or the grid border,
/// capped at `max_range`. Standard grid traversal (Amanatides & Woo).
pub fn raycast_static(env: &Environment, x: f64, y: f64, dx: f64, dy: f64, max_range: f64) -> f64 {
    let res = env.resolution();
    let (mut col, mut row) = env.world_to_cell(x, y);
    if env.cell_occupied(col, row) {
        return 0.0;
    }
    // steps in column / visual-row space; row decreases as y grows
    let step_c: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_r: i64 = if dy > 0.0 { -1 } else { 1 };
    let next_cx = if dx > 0.0 {
        (col + 1) as f64 * res
    } else {
        col as f64 * res
    };
    let y_cell = env.height() as i64 - 1 - row;
    let next_cy = if dy > 0.0 {
        (y_cell + 1) as f64 * res
    } else {
        y_cell as f64 * res
    };
    let mut t_max_x = if dx != 0.0 {
        (next_cx - x) / dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy != 0.0 {
        (next_cy - y) / dy
    } else {
        f64::INFINITY
    };
    let t_delta_x = if dx != 0.0 {
        res / dx.abs()
    } else {
        f64::INFINITY
    };
    let t_delta_y = if dy != 0.0 {
        res / dy.abs()
    } else {
        f64::INFINITY
    };

    loop {
        let t;
        if t_max_x < t_max_y {
            t = t_max_x;
            t_max_x += t_delta_x;
            col += step_c;
        } else {
            t = t_max_y;
            t_max_y += t_delta_y;
            row += step_r;
        }
        if t >= max_range {
            return max_range;
        }
        if env.cell_occupied(col, row) {
            return t;
        }
    }
}

/// Smallest positive intersection of a ray with a circle, if any.
fn ray_circle(x: f64, y: f64, dx: f64, dy: f64, cx: f64, cy: f64, r: f64) -> Option<f64> {
    let ox = x - cx;
    let oy = y - cy;
    let b = ox * dx + oy * dy;
    let c = ox * ox + oy * oy - r * r;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = -b - sq;
    if t0 > 0.0 {
        Some(t0)
    } else {
        let t1 = -b + sq;
        (t1 > 0.0).then_some(t1)
    }
}

/// Cast the full fan of rays from the vehicle pose at simulation time
/// `t_seconds` (dynamic obstacles move with time).
pub fn sense(
    env: &Environment,
    state: &VehicleState,
    cfg: &SimConfig,
    t_seconds: f64,
    timestamp: usize,
) -> Observation {
    let mut depth = Vec::with_capacity(cfg.n_rays);
    let obstacles: Vec<(f64, f64, f64)> = env
        .dynamic_obstacles
        .iter()
        .map(|o| {
            let (x, y) = o.position_at(t_seconds, env.world_width(), env.world_height());
            (x, y, o.radius)
        })
        .collect();
    for i in 0..cfg.n_rays {
        let bearing = Observation::ray_bearing(cfg.fov, cfg.n_rays, i);
        let a = state.theta + bearing;
        let (s, c) = a.sin_cos();
        let mut d = raycast_static(env, state.x, state.y, c, s, cfg.max_range);
        for &(ox, oy, r) in &obstacles {
            if let Some(t) = ray_circle(state.x, state.y, c, s, ox, oy, r) {
                if t < d {
                    d = t;
                }
            }
        }
        depth.push(d.min(cfg.max_range));
    }
    Observation {
        depth,
        privileged_pose: *state,
        timestamp,
        frame_id: None,
    }
}
