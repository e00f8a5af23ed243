//! Contextified targets: an anchor observation packaged with 2k+1
//! temporally spaced neighbor frames from its source trajectory.

use serde::{Deserialize, Serialize};

use crate::geometry::Pose2;
use crate::sim::{FrameId, Observation, Trajectory};

/// A target observation with its surrounding context frames. Past frames
/// widen the effective field of view; future frames encode intention.
/// At trajectory boundaries missing frames are duplicated edge frames,
/// so `frames.len()` is always `2k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorContext {
    pub frames: Vec<Observation>,
    pub k: usize,
    pub delta_t: usize,
    /// Index of the anchor frame in the source trajectory.
    pub anchor_index: usize,
    /// Pose of each context frame expressed in the anchor's frame,
    /// derived from recorded short-horizon odometry.
    pub rel_poses: Vec<Pose2>,
}

impl AnchorContext {
    pub fn from_trajectory(traj: &Trajectory, anchor_index: usize, k: usize, delta_t: usize) -> Self {
        assert!(!traj.frames.is_empty());
        assert!(anchor_index < traj.frames.len());
        assert!(delta_t >= 1);
        let last = traj.frames.len() - 1;
        let anchor_pose = traj.frames[anchor_index].state.pose();
        let mut frames = Vec::with_capacity(2 * k + 1);
        let mut rel_poses = Vec::with_capacity(2 * k + 1);
        for m in -(k as i64)..=(k as i64) {
            let idx = (anchor_index as i64 + m * delta_t as i64).clamp(0, last as i64) as usize;
            let f = &traj.frames[idx];
            frames.push(f.obs.clone());
            rel_poses.push(anchor_pose.relative_to(&f.state.pose()));
        }
        Self {
            frames,
            k,
            delta_t,
            anchor_index,
            rel_poses,
        }
    }

    /// A bare observation as a context of one frame (k = 0), e.g. a goal
    /// image that arrives without trajectory context.
    pub fn singleton(obs: Observation) -> Self {
        Self {
            frames: vec![obs],
            k: 0,
            delta_t: 1,
            anchor_index: 0,
            rel_poses: vec![Pose2::new(0.0, 0.0, 0.0)],
        }
    }

    /// The anchor observation itself.
    pub fn center(&self) -> &Observation {
        &self.frames[self.k]
    }

    /// Privileged pose of the anchor frame (oracle machinery only).
    pub fn anchor_pose(&self) -> Pose2 {
        self.center().privileged_pose.pose()
    }

    /// Identity of the anchor frame, when it came from a trajectory.
    pub fn frame_id(&self) -> Option<FrameId> {
        self.center().frame_id
    }
}
