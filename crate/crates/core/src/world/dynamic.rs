use serde::{Deserialize, Serialize};

/// Disc obstacle moving at constant speed around a closed polyline
/// (the last waypoint connects back to the first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicObstacle {
    pub radius: f64,
    pub waypoints: Vec<[f64; 2]>,
    pub speed: f64,
    #[serde(default)]
    pub phase: f64,
}

impl DynamicObstacle {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.radius > 0.0) {
            return Err("dynamic obstacle radius must be positive".into());
        }
        if !(self.speed >= 0.0) {
            return Err("dynamic obstacle speed must be non-negative".into());
        }
        if self.waypoints.len() < 2 {
            return Err("dynamic obstacle needs at least two waypoints".into());
        }
        Ok(())
    }

    pub fn loop_length(&self) -> f64 {
        let n = self.waypoints.len();
        (0..n)
            .map(|k| dist(self.waypoints[k], self.waypoints[(k + 1) % n]))
            .sum()
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Position at time `t`: arc length `speed·(t + phase)` along the loop,
/// modulo the loop length.
pub fn dynamic_obstacle_position(obs: &DynamicObstacle, t: f64) -> [f64; 2] {
    let w = &obs.waypoints;
    let length = obs.loop_length();
    if length <= 0.0 || obs.speed == 0.0 {
        return w[0];
    }
    let mut s = (obs.speed * (t + obs.phase)).rem_euclid(length);
    let n = w.len();
    for k in 0..n {
        let (a, b) = (w[k], w[(k + 1) % n]);
        let seg = dist(a, b);
        if s <= seg && seg > 0.0 {
            let f = s / seg;
            return [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])];
        }
        s -= seg;
    }
    w[0]
}
