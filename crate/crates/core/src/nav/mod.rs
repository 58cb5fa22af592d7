//! Navigation: Dijkstra global planning on the inflated occupancy grid
//! and dynamic-window local control with static and moving obstacles.

mod clearance;
mod dijkstra;
mod dwa;

pub use clearance::ClearanceMap;
pub use dijkstra::{plan_dijkstra, PlanError, PlannedPath, GOAL_STANDOFF};
pub use dwa::{
    carrot_waypoint, dwa_step, evaluate_candidate, sample_window, CandidateEval, DwaConfig,
    DwaDiagnostics, ObstacleTrack,
};

/// Default arrival radius in meters.
pub const DEFAULT_GOAL_RADIUS: f64 = 0.25;

/// Closed-ball arrival test.
pub fn goal_reached(pose: &crate::world::Pose, goal: [f64; 2], r_goal: f64) -> bool {
    debug_assert!(r_goal > 0.0);
    pose.distance_to(goal) <= r_goal
}
