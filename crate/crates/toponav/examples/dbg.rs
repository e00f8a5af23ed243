use std::sync::Arc;
use std::time::Instant;
use toponav::config::{ControllerConfig, ControllerMode};
use toponav::controller::*;
use toponav::geometry::Pose2;
use toponav::sim::*;
use toponav::fixtures;

fn main() {
    let env = Arc::new(fixtures::rooms());
    let sim_cfg = SimConfig::default();
    let mut traj = Trajectory::new(1);
    for i in 0..80 {
        let pose = Pose2::new(2.0 + 0.1 * i as f64, 7.0, 0.0);
        let state = VehicleState::at_pose(pose);
        traj.push(state, Action::ZERO, sense(&env, &state, &sim_cfg, 0.0, i));
    }
    for mode in [ControllerMode::Registration, ControllerMode::Oracle] {
        let ctl = ControllerConfig { mode, ..Default::default() };
        let target = AnchorContext::from_trajectory(&traj, 60, ctl.context_k, ctl.context_delta_t);
        let fields = FieldCache::new(env.clone());
        let t0 = Instant::now();
        let mut reached = 0;
        let n = 20;
        for s in 0..n {
            let start = VehicleState::at_pose(Pose2::new(6.0, 7.0, 0.0));
            let mut sim = Simulator::with_seed(env.clone(), sim_cfg.clone(), start, s);
            let mut pred = make_predictor(&ctl, &sim_cfg, &fields, &target);
            let out = run_to_target(&mut sim, &mut pred, &target, 120, &ctl);
            if out.reached() { reached += 1; }
        }
        let dt = t0.elapsed();
        println!("{mode:?}: {reached}/{n} reached, {:.1} ms/rollout", dt.as_secs_f64() * 1000.0 / n as f64);
    }
}
