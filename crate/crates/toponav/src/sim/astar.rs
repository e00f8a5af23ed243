//! Grid shortest paths: 8-connected A* with corner cutting forbidden,
//! plus full Dijkstra distance fields for rollout deadlines and the
//! privileged waypoint oracle.
//!
//! Costs are integer micro-cells (straight = 1e6, diagonal = 1414214) so
//! path lengths compare exactly across algorithms.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::environment::Environment;

pub const STRAIGHT_COST: u64 = 1_000_000;
pub const DIAG_COST: u64 = 1_414_214;

const NEIGHBORS: [(i64, i64, u64); 8] = [
    (1, 0, STRAIGHT_COST),
    (-1, 0, STRAIGHT_COST),
    (0, 1, STRAIGHT_COST),
    (0, -1, STRAIGHT_COST),
    (1, 1, DIAG_COST),
    (1, -1, DIAG_COST),
    (-1, 1, DIAG_COST),
    (-1, -1, DIAG_COST),
];

#[derive(Debug, Clone, PartialEq)]
pub struct AstarPath {
    /// Polyline length of the cell-center path, meters.
    pub length: f64,
    /// Exact integer cost in micro-cells.
    pub cost: u64,
    /// Cell-center positions from start to goal inclusive.
    pub waypoints: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no grid path between the endpoints")]
pub struct Unreachable;

#[inline]
fn index(env: &Environment, col: i64, row: i64) -> usize {
    row as usize * env.width() + col as usize
}

/// Diagonal moves may not cut corners: both orthogonal cells must be free.
#[inline]
fn move_allowed(env: &Environment, col: i64, row: i64, dc: i64, dr: i64) -> bool {
    if env.cell_occupied(col + dc, row + dr) {
        return false;
    }
    if dc != 0 && dr != 0 {
        !env.cell_occupied(col + dc, row) && !env.cell_occupied(col, row + dr)
    } else {
        true
    }
}

fn euclid_heuristic(a: (i64, i64), b: (i64, i64)) -> u64 {
    let dx = (a.0 - b.0) as f64;
    let dy = (a.1 - b.1) as f64;
    ((dx * dx + dy * dy).sqrt() * STRAIGHT_COST as f64).floor() as u64
}

/// 8-connected A* between world positions. Both endpoints must be in
/// free cells.
pub fn astar(
    env: &Environment,
    from: (f64, f64),
    to: (f64, f64),
) -> Result<AstarPath, Unreachable> {
    let start = env.world_to_cell(from.0, from.1);
    let goal = env.world_to_cell(to.0, to.1);
    if env.cell_occupied(start.0, start.1) || env.cell_occupied(goal.0, goal.1) {
        return Err(Unreachable);
    }
    if start == goal {
        return Ok(AstarPath {
            length: 0.0,
            cost: 0,
            waypoints: vec![env.cell_center(start.0, start.1)],
        });
    }

    let n = env.cell_count();
    let mut g = vec![u64::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap: BinaryHeap<Reverse<(u64, u64, usize)>> = BinaryHeap::new();
    let si = index(env, start.0, start.1);
    g[si] = 0;
    heap.push(Reverse((euclid_heuristic(start, goal), 0, si)));

    while let Some(Reverse((_, gc, ci))) = heap.pop() {
        if gc > g[ci] {
            continue;
        }
        let col = (ci % env.width()) as i64;
        let row = (ci / env.width()) as i64;
        if (col, row) == goal {
            let mut cells = vec![ci];
            let mut cur = ci;
            while parent[cur] != usize::MAX {
                cur = parent[cur];
                cells.push(cur);
            }
            cells.reverse();
            let waypoints: Vec<(f64, f64)> = cells
                .iter()
                .map(|&i| env.cell_center((i % env.width()) as i64, (i / env.width()) as i64))
                .collect();
            return Ok(AstarPath {
                length: cost_to_meters(gc, env.resolution()),
                cost: gc,
                waypoints,
            });
        }
        for &(dc, dr, w) in &NEIGHBORS {
            if !move_allowed(env, col, row, dc, dr) {
                continue;
            }
            let ni = index(env, col + dc, row + dr);
            let ng = gc + w;
            if ng < g[ni] {
                g[ni] = ng;
                parent[ni] = ci;
                heap.push(Reverse((ng + euclid_heuristic((col + dc, row + dr), goal), ng, ni)));
            }
        }
    }
    Err(Unreachable)
}

pub fn cost_to_meters(cost: u64, resolution: f64) -> f64 {
    cost as f64 / STRAIGHT_COST as f64 * resolution
}

/// Dijkstra distances from every free cell to a target cell. One field
/// per anchor serves every rollout aimed at it: deadline lookups and
/// descent waypoints become O(1) per query.
#[derive(Debug, Clone)]
pub struct DistanceField {
    width: usize,
    height: usize,
    resolution: f64,
    target: (i64, i64),
    dist: Vec<u64>,
}

impl DistanceField {
    pub fn build(env: &Environment, target_world: (f64, f64)) -> Result<Self, Unreachable> {
        let target = env.world_to_cell(target_world.0, target_world.1);
        if env.cell_occupied(target.0, target.1) {
            return Err(Unreachable);
        }
        let n = env.cell_count();
        let mut dist = vec![u64::MAX; n];
        let ti = index(env, target.0, target.1);
        dist[ti] = 0;
        let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
        heap.push(Reverse((0, ti)));
        while let Some(Reverse((d, ci))) = heap.pop() {
            if d > dist[ci] {
                continue;
            }
            let col = (ci % env.width()) as i64;
            let row = (ci / env.width()) as i64;
            for &(dc, dr, w) in &NEIGHBORS {
                if !move_allowed(env, col, row, dc, dr) {
                    continue;
                }
                let ni = index(env, col + dc, row + dr);
                let nd = d + w;
                if nd < dist[ni] {
                    dist[ni] = nd;
                    heap.push(Reverse((nd, ni)));
                }
            }
        }
        Ok(Self {
            width: env.width(),
            height: env.height(),
            resolution: env.resolution(),
            target,
            dist,
        })
    }

    pub fn target_cell(&self) -> (i64, i64) {
        self.target
    }

    pub fn cost_at_cell(&self, col: i64, row: i64) -> Option<u64> {
        if col < 0 || row < 0 || col >= self.width as i64 || row >= self.height as i64 {
            return None;
        }
        let d = self.dist[row as usize * self.width + col as usize];
        (d != u64::MAX).then_some(d)
    }

    pub fn cost_at(&self, x: f64, y: f64) -> Option<u64> {
        let col = (x / self.resolution).floor() as i64;
        let row = self.height as i64 - 1 - (y / self.resolution).floor() as i64;
        self.cost_at_cell(col, row)
    }

    /// Path length in meters from a world position to the target.
    pub fn distance_at(&self, x: f64, y: f64) -> Option<f64> {
        self.cost_at(x, y).map(|c| cost_to_meters(c, self.resolution))
    }

    /// Steepest-descent neighbor toward the target, as a world position.
    /// Returns None at the target itself or off the field.
    pub fn descend(&self, env: &Environment, x: f64, y: f64) -> Option<(f64, f64)> {
        let (col, row) = env.world_to_cell(x, y);
        let here = self.cost_at_cell(col, row)?;
        if here == 0 {
            return None;
        }
        let mut best: Option<(u64, (i64, i64))> = None;
        for &(dc, dr, w) in &NEIGHBORS {
            if !move_allowed(env, col, row, dc, dr) {
                continue;
            }
            if let Some(d) = self.cost_at_cell(col + dc, row + dr) {
                // key on the through-cost so ties break deterministically
                let through = d.saturating_add(w);
                if best.map_or(true, |(b, _)| through < b) {
                    best = Some((through, (col + dc, row + dr)));
                }
            }
        }
        best.map(|(_, (c, r))| env.cell_center(c, r))
    }

    /// Walk the descent path up to `lookahead` meters and return that
    /// point: the privileged "next waypoint along the ground-truth path".
    pub fn waypoint_along(&self, env: &Environment, x: f64, y: f64, lookahead: f64) -> Option<(f64, f64)> {
        let mut cur = (x, y);
        let mut travelled = 0.0;
        let mut last = env.cell_center(env.world_to_cell(x, y).0, env.world_to_cell(x, y).1);
        for _ in 0..256 {
            match self.descend(env, cur.0, cur.1) {
                Some(next) => {
                    travelled += ((next.0 - cur.0).powi(2) + (next.1 - cur.1).powi(2)).sqrt();
                    last = next;
                    cur = next;
                    if travelled >= lookahead {
                        break;
                    }
                }
                None => break,
            }
        }
        Some(last)
    }
}
