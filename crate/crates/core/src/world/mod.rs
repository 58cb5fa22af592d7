//! World state: wheelchair pose and kinematics, the occupancy grid,
//! scene objects, moving obstacles and the simulated ego camera.

mod camera;
mod dynamic;
mod grid;
mod pose;
mod scenario;

pub use camera::{project_objects, CameraModel};
pub use dynamic::{dynamic_obstacle_position, DynamicObstacle};
pub use grid::{inflate, Cell, CellIndex, OccupancyGrid};
pub use pose::{step_kinematics, wrap_angle, Pose, VelocityCommand};
pub use scenario::{Scenario, SceneObject};
