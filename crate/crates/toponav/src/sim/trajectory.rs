//! Dense experience trajectories and their line-delimited file format.
//!
//! Format: a `TOPOTRAJ v1 <id> <n_rays>` header, then one record per
//! step: `idx x y theta v omega accel steer d0 .. d{n-1}`. Floats use
//! Rust's shortest round-trip representation, so files parse back
//! losslessly.

use thiserror::Error;

use super::sensor::{FrameId, Observation};
use super::vehicle::{Action, VehicleState};

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: usize,
    pub state: VehicleState,
    pub action: Action,
    pub obs: Observation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: u64,
    pub frames: Vec<Frame>,
}

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Trajectory {
    pub fn new(id: u64) -> Self {
        Self { id, frames: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Record a frame, tagging its observation with this trajectory's id.
    pub fn push(&mut self, state: VehicleState, action: Action, mut obs: Observation) {
        let index = self.frames.len();
        obs.frame_id = Some(FrameId { traj: self.id, index });
        self.frames.push(Frame { index, state, action, obs });
    }

    /// Total arc length of the recorded poses, meters.
    pub fn arc_length(&self) -> f64 {
        self.frames
            .windows(2)
            .map(|w| {
                let a = &w[0].state;
                let b = &w[1].state;
                ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
            })
            .sum()
    }

    /// Arc length from frame 0 up to `index`.
    pub fn arc_length_to(&self, index: usize) -> f64 {
        self.frames[..=index.min(self.frames.len() - 1)]
            .windows(2)
            .map(|w| {
                let a = &w[0].state;
                let b = &w[1].state;
                ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
            })
            .sum()
    }

    pub fn to_text(&self) -> String {
        let n_rays = self.frames.first().map_or(0, |f| f.obs.depth.len());
        let mut out = format!("TOPOTRAJ v1 {} {}\n", self.id, n_rays);
        for f in &self.frames {
            let mut line = format!(
                "{} {} {} {} {} {} {} {}",
                f.index,
                f.state.x,
                f.state.y,
                f.state.theta,
                f.state.v,
                f.state.omega,
                f.action.accel,
                f.action.steer_rate
            );
            for d in &f.obs.depth {
                line.push(' ');
                line.push_str(&d.to_string());
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, TrajectoryError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(TrajectoryError::Malformed {
            line: 1,
            msg: "empty document".into(),
        })?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "TOPOTRAJ" || parts[1] != "v1" {
            return Err(TrajectoryError::Malformed {
                line: 1,
                msg: "expected header: TOPOTRAJ v1 <id> <n_rays>".into(),
            });
        }
        let id: u64 = parts[2].parse().map_err(|e| TrajectoryError::Malformed {
            line: 1,
            msg: format!("bad id: {e}"),
        })?;
        let n_rays: usize = parts[3].parse().map_err(|e| TrajectoryError::Malformed {
            line: 1,
            msg: format!("bad ray count: {e}"),
        })?;

        let mut traj = Trajectory::new(id);
        for (li, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Result<Vec<f64>, _> =
                line.split_whitespace().map(|p| p.parse::<f64>()).collect();
            let vals = vals.map_err(|e| TrajectoryError::Malformed {
                line: li + 1,
                msg: format!("bad number: {e}"),
            })?;
            if vals.len() != 8 + n_rays {
                return Err(TrajectoryError::Malformed {
                    line: li + 1,
                    msg: format!("expected {} fields, got {}", 8 + n_rays, vals.len()),
                });
            }
            let index = vals[0] as usize;
            if index != traj.frames.len() {
                return Err(TrajectoryError::Malformed {
                    line: li + 1,
                    msg: format!("out-of-order frame index {index}"),
                });
            }
            let state = VehicleState {
                x: vals[1],
                y: vals[2],
                theta: vals[3],
                v: vals[4],
                omega: vals[5],
            };
            let action = Action {
                accel: vals[6],
                steer_rate: vals[7],
            };
            let obs = Observation {
                depth: vals[8..].to_vec(),
                privileged_pose: state,
                timestamp: index,
                frame_id: Some(FrameId { traj: id, index }),
            };
            traj.frames.push(Frame { index, state, action, obs });
        }
        Ok(traj)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), TrajectoryError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, TrajectoryError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2;

    #[test]
    fn text_roundtrip_lossless() {
        let mut traj = Trajectory::new(42);
        for i in 0..3 {
            let state = VehicleState {
                x: 0.1 * i as f64 + 0.123456789012345,
                y: -0.7,
                theta: 1.0471975511965976,
                v: 0.5,
                omega: -0.25,
            };
            let obs = Observation {
                depth: vec![1.0 / 3.0, 5.0, 2.7182818284590452],
                privileged_pose: state,
                timestamp: i,
                frame_id: None,
            };
            traj.push(state, Action { accel: 0.5, steer_rate: -1.0 / 7.0 }, obs);
        }
        let text = traj.to_text();
        let back = Trajectory::parse(&text).unwrap();
        assert_eq!(traj, back);
        assert_eq!(back.frames[1].obs.frame_id, Some(FrameId { traj: 42, index: 1 }));
    }

    #[test]
    fn arc_length_straight() {
        let mut traj = Trajectory::new(0);
        for i in 0..5 {
            let state = VehicleState::at_pose(Pose2::new(0.1 * i as f64, 0.0, 0.0));
            let obs = Observation {
                depth: vec![1.0],
                privileged_pose: state,
                timestamp: i,
                frame_id: None,
            };
            traj.push(state, Action::ZERO, obs);
        }
        assert!((traj.arc_length() - 0.4).abs() < 1e-12);
        assert!((traj.arc_length_to(2) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Trajectory::parse("nope\n").is_err());
        assert!(Trajectory::parse("TOPOTRAJ v1 1 2\n0 0 0 0 0 0 0 0 1\n").is_err());
    }
}
