//! Gaze-contingent navigation intention decoding coupled to a simulated
//! autonomous wheelchair.
//!
//! The decoder turns ego-view gaze into a per-object intention
//! (bounding-box normalization, object-specific classifier, ring-buffer
//! vote), waits for a wink, then hands the object's goal point to a grid
//! Dijkstra planner and a dynamic-window local controller.
//!
//! Module map:
//! - [`world`]: scenario, occupancy grid, kinematics and the ego camera.
//! - [`gaze`]: gaze samples, box averaging, normalization, synthetic traces.
//! - [`classify`]: weighted KNN, Gaussian-kernel SVM, cross-validation.
//! - [`intent`]: ring-buffer vote and the wink-gated decoder state machine.
//! - [`nav`]: Dijkstra global planning and DWA local control.
//! - [`sim`]: end-to-end runs, event logs, batch statistics.

pub mod classify;
pub mod error;
pub mod gaze;
pub mod intent;
pub mod nav;
pub mod seed;
pub mod sim;
pub mod world;

pub use error::{Error, Result};

/// Version stamped into every artifact file this crate writes.
pub const FORMAT_VERSION: u32 = 1;

/// Simulation tick (25 Hz).
pub const TICK_DT: f64 = 0.04;
