//! Occupancy-grid environments with optional scripted disc obstacles.
//!
//! Grid files are plain text: a `W H resolution` header, then H rows of
//! `.` (free) / `#` (occupied) characters, the first row being the top of
//! the map, optionally followed by `OBSTACLE cx cy r vx vy` lines. Cells
//! outside the grid count as occupied.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}, column {col}: invalid cell char {ch:?} (expected '.' or '#')")]
    BadCell { line: usize, col: usize, ch: char },
    #[error("environment has no free cells")]
    NoFreeCells,
    #[error("obstacle at line {line} starts outside the grid or overlaps its border")]
    ObstacleOutOfBounds { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A disc obstacle moving at constant velocity, reflecting off the grid
/// border. Position over time is a closed-form triangle wave, so sensing
/// stays a pure function of the step index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicObstacle {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub vx: f64,
    pub vy: f64,
}

fn bounce(start: f64, vel: f64, lo: f64, hi: f64, t: f64) -> f64 {
    let span = hi - lo;
    if span <= 0.0 || vel == 0.0 {
        return start;
    }
    let u = (start - lo + vel * t).rem_euclid(2.0 * span);
    if u <= span {
        lo + u
    } else {
        lo + 2.0 * span - u
    }
}

impl DynamicObstacle {
    /// Center position after `t` seconds.
    pub fn position_at(&self, t: f64, world_w: f64, world_h: f64) -> (f64, f64) {
        (
            bounce(self.cx, self.vx, self.radius, world_w - self.radius, t),
            bounce(self.cy, self.vy, self.radius, world_h - self.radius, t),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    width: usize,
    height: usize,
    resolution: f64,
    /// Row-major occupancy, row 0 = top text row (highest y).
    occupied: Vec<bool>,
    pub dynamic_obstacles: Vec<DynamicObstacle>,
}

impl Environment {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        occupied: Vec<bool>,
    ) -> Result<Self, GridError> {
        assert!(resolution > 0.0, "resolution must be positive");
        assert_eq!(occupied.len(), width * height);
        let env = Self {
            width,
            height,
            resolution,
            occupied,
            dynamic_obstacles: Vec::new(),
        };
        if env.free_cell_count() == 0 {
            return Err(GridError::NoFreeCells);
        }
        Ok(env)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn world_width(&self) -> f64 {
        self.width as f64 * self.resolution
    }

    pub fn world_height(&self) -> f64 {
        self.height as f64 * self.resolution
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn free_cell_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| !o).count()
    }

    #[inline]
    pub fn cell_occupied(&self, col: i64, row: i64) -> bool {
        if col < 0 || row < 0 || col >= self.width as i64 || row >= self.height as i64 {
            return true;
        }
        self.occupied[row as usize * self.width + col as usize]
    }

    /// Grid cell containing a world point. Row 0 is the top of the map.
    #[inline]
    pub fn world_to_cell(&self, x: f64, y: f64) -> (i64, i64) {
        let col = (x / self.resolution).floor() as i64;
        let row = self.height as i64 - 1 - (y / self.resolution).floor() as i64;
        (col, row)
    }

    /// World coordinates of a cell center.
    #[inline]
    pub fn cell_center(&self, col: i64, row: i64) -> (f64, f64) {
        (
            (col as f64 + 0.5) * self.resolution,
            (self.height as i64 - 1 - row) as f64 * self.resolution + 0.5 * self.resolution,
        )
    }

    pub fn point_occupied(&self, x: f64, y: f64) -> bool {
        let (c, r) = self.world_to_cell(x, y);
        self.cell_occupied(c, r)
    }

    /// Does a disc footprint at (x, y) intersect any occupied cell or the
    /// grid border? Dynamic obstacles are checked separately with a time.
    pub fn disc_hits_static(&self, x: f64, y: f64, radius: f64) -> bool {
        let min_c = ((x - radius) / self.resolution).floor() as i64;
        let max_c = ((x + radius) / self.resolution).floor() as i64;
        let min_yc = ((y - radius) / self.resolution).floor() as i64;
        let max_yc = ((y + radius) / self.resolution).floor() as i64;
        for yc in min_yc..=max_yc {
            for c in min_c..=max_c {
                let row = self.height as i64 - 1 - yc;
                if !self.cell_occupied(c, row) {
                    continue;
                }
                // closest point of the cell rectangle to the disc center
                let cx0 = c as f64 * self.resolution;
                let cy0 = yc as f64 * self.resolution;
                let nx = x.clamp(cx0, cx0 + self.resolution);
                let ny = y.clamp(cy0, cy0 + self.resolution);
                if (nx - x).powi(2) + (ny - y).powi(2) < radius * radius {
                    return true;
                }
            }
        }
        false
    }

    pub fn disc_hits_dynamic(&self, x: f64, y: f64, radius: f64, t_seconds: f64) -> bool {
        for ob in &self.dynamic_obstacles {
            let (ox, oy) = ob.position_at(t_seconds, self.world_width(), self.world_height());
            let r = radius + ob.radius;
            if (ox - x).powi(2) + (oy - y).powi(2) < r * r {
                return true;
            }
        }
        false
    }

    pub fn parse(text: &str) -> Result<Self, GridError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(GridError::Malformed {
            line: 1,
            msg: "empty document".into(),
        })?;
        let mut parts = header.split_whitespace();
        let mut field = |name: &str| {
            parts.next().ok_or(GridError::Malformed {
                line: 1,
                msg: format!("header missing {name}"),
            })
        };
        let width: usize = field("width")?.parse().map_err(|e| GridError::Malformed {
            line: 1,
            msg: format!("bad width: {e}"),
        })?;
        let height: usize = field("height")?.parse().map_err(|e| GridError::Malformed {
            line: 1,
            msg: format!("bad height: {e}"),
        })?;
        let resolution: f64 = field("resolution")?
            .parse()
            .map_err(|e| GridError::Malformed {
                line: 1,
                msg: format!("bad resolution: {e}"),
            })?;
        if width == 0 || height == 0 || !(resolution > 0.0) {
            return Err(GridError::Malformed {
                line: 1,
                msg: "width, height and resolution must be positive".into(),
            });
        }

        let mut occupied = Vec::with_capacity(width * height);
        for row in 0..height {
            let (idx, line) = lines.next().ok_or(GridError::Malformed {
                line: row + 2,
                msg: format!("expected {height} grid rows"),
            })?;
            let chars: Vec<char> = line.chars().collect();
            if chars.len() != width {
                return Err(GridError::Malformed {
                    line: idx + 1,
                    msg: format!("row has {} cells, expected {width}", chars.len()),
                });
            }
            for (col, ch) in chars.iter().enumerate() {
                match ch {
                    '.' => occupied.push(false),
                    '#' => occupied.push(true),
                    _ => {
                        return Err(GridError::BadCell {
                            line: idx + 1,
                            col: col + 1,
                            ch: *ch,
                        })
                    }
                }
            }
        }

        let mut env = Self::new(width, height, resolution, occupied)?;
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            if parts.next() != Some("OBSTACLE") {
                return Err(GridError::Malformed {
                    line: idx + 1,
                    msg: "expected OBSTACLE line".into(),
                });
            }
            let vals: Result<Vec<f64>, _> = parts.map(|p| p.parse::<f64>()).collect();
            let vals = vals.map_err(|e| GridError::Malformed {
                line: idx + 1,
                msg: format!("bad OBSTACLE number: {e}"),
            })?;
            if vals.len() != 5 {
                return Err(GridError::Malformed {
                    line: idx + 1,
                    msg: "OBSTACLE needs cx cy r vx vy".into(),
                });
            }
            let ob = DynamicObstacle {
                cx: vals[0],
                cy: vals[1],
                radius: vals[2],
                vx: vals[3],
                vy: vals[4],
            };
            let in_x = ob.cx - ob.radius >= 0.0 && ob.cx + ob.radius <= env.world_width();
            let in_y = ob.cy - ob.radius >= 0.0 && ob.cy + ob.radius <= env.world_height();
            if !(in_x && in_y) || !(ob.radius > 0.0) {
                return Err(GridError::ObstacleOutOfBounds { line: idx + 1 });
            }
            env.dynamic_obstacles.push(ob);
        }
        Ok(env)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.width, self.height, self.resolution);
        for row in 0..self.height {
            for col in 0..self.width {
                out.push(if self.occupied[row * self.width + col] {
                    '#'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        for ob in &self.dynamic_obstacles {
            out.push_str(&format!(
                "OBSTACLE {} {} {} {} {}\n",
                ob.cx, ob.cy, ob.radius, ob.vx, ob.vy
            ));
        }
        out
    }

    pub fn load(path: &std::path::Path) -> Result<Self, GridError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), GridError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
