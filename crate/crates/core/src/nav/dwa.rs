use serde::{Deserialize, Serialize};

use super::{ClearanceMap, PlannedPath};
use crate::world::{step_kinematics, wrap_angle, Pose, VelocityCommand};
use crate::TICK_DT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DwaConfig {
    pub v_max: f64,
    pub omega_max: f64,
    pub a_v: f64,
    pub a_omega: f64,
    pub horizon: f64,
    pub sim_dt: f64,
    pub n_v: usize,
    pub n_omega: usize,
    pub w_heading: f64,
    pub w_clearance: f64,
    pub w_velocity: f64,
    pub clearance_cap: f64,
    pub safety_radius: f64,
    /// Control period the dynamic window is sized for.
    pub tick_dt: f64,
    /// Carrot distance along the global path.
    pub lookahead: f64,
    /// Arc time over which the heading and clearance terms are scored;
    /// admissibility always covers the full horizon.
    pub score_time: f64,
}

impl Default for DwaConfig {
    fn default() -> Self {
        Self {
            v_max: 1.0,
            omega_max: 1.5,
            a_v: 0.5,
            a_omega: 2.0,
            horizon: 2.0,
            sim_dt: 0.1,
            n_v: 11,
            n_omega: 21,
            w_heading: 0.6,
            w_clearance: 0.2,
            w_velocity: 0.2,
            clearance_cap: 1.0,
            safety_radius: 0.05,
            tick_dt: TICK_DT,
            lookahead: 0.6,
            score_time: 0.5,
        }
    }
}

impl DwaConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("v_max", self.v_max),
            ("omega_max", self.omega_max),
            ("a_v", self.a_v),
            ("a_omega", self.a_omega),
            ("horizon", self.horizon),
            ("sim_dt", self.sim_dt),
            ("w_heading", self.w_heading),
            ("w_clearance", self.w_clearance),
            ("w_velocity", self.w_velocity),
            ("clearance_cap", self.clearance_cap),
            ("safety_radius", self.safety_radius),
            ("tick_dt", self.tick_dt),
            ("score_time", self.score_time),
        ];
        for (name, x) in positive {
            if !(x.is_finite() && x > 0.0) {
                return Err(format!("{name} must be positive, got {x}"));
            }
        }
        if !(self.lookahead.is_finite() && self.lookahead >= 0.0) {
            return Err(format!("lookahead must be non-negative, got {}", self.lookahead));
        }
        if self.n_v < 2 || self.n_omega < 2 {
            return Err("n_v and n_omega must be at least 2".into());
        }
        Ok(())
    }

    /// Number of forward-simulation steps per candidate arc.
    pub fn horizon_steps(&self) -> usize {
        (self.horizon / self.sim_dt).round().max(1.0) as usize
    }

    /// Last arc step that feeds the score.
    pub fn score_step(&self) -> usize {
        ((self.score_time / self.sim_dt).round() as usize).clamp(1, self.horizon_steps())
    }
}

/// A moving obstacle as the controller sees it: current position and an
/// estimated velocity, extrapolated linearly over the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleTrack {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    pub radius: f64,
}

impl ObstacleTrack {
    pub fn predict(&self, tau: f64) -> [f64; 2] {
        [
            self.position[0] + self.velocity[0] * tau,
            self.position[1] + self.velocity[1] * tau,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateEval {
    pub cmd: VelocityCommand,
    /// Smallest gap over the whole arc: distance to an obstacle surface
    /// minus the robot radius.
    pub min_gap: f64,
    /// Smallest gap over the scored prefix of the arc.
    pub scored_gap: f64,
    pub admissible: bool,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwaDiagnostics {
    pub candidates: usize,
    pub admissible: usize,
    pub emergency_stop: bool,
    /// Gap of the chosen arc, or of the current pose on an emergency stop.
    pub min_clearance: f64,
    pub carrot: [f64; 2],
    pub score: f64,
    /// [v_lo, v_hi, omega_lo, omega_hi]
    pub window: [f64; 4],
}

/// First path point at least `lookahead` of arc length past the path
/// point nearest to `pose`; the final waypoint if the path runs out.
pub fn carrot_waypoint(path: &PlannedPath, pose: &Pose, lookahead: f64) -> [f64; 2] {
    let wps = &path.waypoints;
    assert!(!wps.is_empty(), "carrot_waypoint needs a non-empty path");
    let p = pose.position();
    let d2 = |w: &[f64; 2]| (w[0] - p[0]).powi(2) + (w[1] - p[1]).powi(2);
    let mut nearest = 0;
    for (k, w) in wps.iter().enumerate() {
        if d2(w) < d2(&wps[nearest]) {
            nearest = k;
        }
    }
    let mut walked = 0.0;
    for k in nearest..wps.len() {
        if k > nearest {
            let (a, b) = (wps[k - 1], wps[k]);
            walked += (b[0] - a[0]).hypot(b[1] - a[1]);
        }
        if walked >= lookahead {
            return wps[k];
        }
    }
    *wps.last().unwrap()
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| {
        if k + 1 == n {
            hi
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    })
}

/// The reachable window around `current` and its sample grid, v-major.
/// `v_cap` lowers the top of the window (never below its bottom).
pub fn sample_window(current: VelocityCommand, v_cap: f64, cfg: &DwaConfig) -> ([f64; 4], Vec<VelocityCommand>) {
    let dv = cfg.a_v * cfg.tick_dt;
    let dw = cfg.a_omega * cfg.tick_dt;
    let v_lo = (current.v - dv).max(0.0);
    let v_hi = (current.v + dv).min(cfg.v_max).min(v_cap).max(v_lo);
    let w_lo = (current.omega - dw).max(-cfg.omega_max);
    let w_hi = (current.omega + dw).min(cfg.omega_max).max(w_lo);
    let mut out = Vec::with_capacity(cfg.n_v * cfg.n_omega);
    for v in linspace(v_lo, v_hi, cfg.n_v) {
        for w in linspace(w_lo, w_hi, cfg.n_omega) {
            out.push(VelocityCommand::new(v, w));
        }
    }
    ([v_lo, v_hi, w_lo, w_hi], out)
}

/// Gaps to static geometry and to the nearest predicted moving obstacle.
fn pose_gap(
    p: [f64; 2],
    tau: f64,
    static_map: &ClearanceMap,
    obstacles: &[ObstacleTrack],
    robot_radius: f64,
    cap: f64,
) -> (f64, f64) {
    let fixed = static_map.clearance(p, cap + robot_radius) - robot_radius;
    let moving = obstacles
        .iter()
        .map(|o| {
            let q = o.predict(tau);
            (p[0] - q[0]).hypot(p[1] - q[1]) - o.radius - robot_radius
        })
        .fold(f64::INFINITY, f64::min);
    (fixed, moving)
}

/// Forward-simulate one candidate and score it. The arc is checked at the
/// pose one control tick ahead and at every `sim_dt` step to the horizon.
/// The clearance score looks at static geometry over the first
/// `score_time` only, but at moving obstacles over the whole horizon.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_candidate(
    pose: &Pose,
    cmd: VelocityCommand,
    carrot: [f64; 2],
    static_map: &ClearanceMap,
    obstacles: &[ObstacleTrack],
    robot_radius: f64,
    cfg: &DwaConfig,
) -> CandidateEval {
    let cap = cfg.clearance_cap;
    let first = step_kinematics(*pose, cmd, cfg.tick_dt);
    let (mut fixed, mut moving) = pose_gap(first.position(), cfg.tick_dt, static_map, obstacles, robot_radius, cap);
    let mut scored_fixed = fixed;
    let mut p = *pose;
    let mut h = *pose;
    let k_s = cfg.score_step();
    for k in 1..=cfg.horizon_steps() {
        p = step_kinematics(p, cmd, cfg.sim_dt);
        let tau = k as f64 * cfg.sim_dt;
        let (f, m) = pose_gap(p.position(), tau, static_map, obstacles, robot_radius, cap);
        fixed = fixed.min(f);
        moving = moving.min(m);
        if k == k_s {
            h = p;
            scored_fixed = fixed;
        }
    }
    let min_gap = fixed.min(moving);
    let scored_gap = scored_fixed.min(moving);
    let admissible = min_gap > cfg.safety_radius;

    let (dx, dy) = (carrot[0] - h.x, carrot[1] - h.y);
    let heading = if dx.hypot(dy) < 1e-9 {
        1.0
    } else {
        1.0 - wrap_angle(dy.atan2(dx) - h.theta).abs() / std::f64::consts::PI
    };
    let clearance = scored_gap.clamp(0.0, cap) / cap;
    let velocity = cmd.v / cfg.v_max;
    let score = cfg.w_heading * heading + cfg.w_clearance * clearance + cfg.w_velocity * velocity;
    CandidateEval {
        cmd,
        min_gap,
        scored_gap,
        admissible,
        score,
    }
}

/// One dynamic-window control step. `static_map` should be built from the
/// uninflated grid: the robot radius is applied here.
pub fn dwa_step(
    pose: &Pose,
    current: VelocityCommand,
    static_map: &ClearanceMap,
    obstacles: &[ObstacleTrack],
    path: &PlannedPath,
    robot_radius: f64,
    cfg: &DwaConfig,
) -> (VelocityCommand, DwaDiagnostics) {
    let carrot = carrot_waypoint(path, pose, cfg.lookahead);
    // Fastest speed from which the robot can still brake to rest at the goal.
    let approach = (2.0 * cfg.a_v * pose.distance_to(path.goal())).sqrt();
    let (window, samples) = sample_window(current, approach, cfg);
    let mut best: Option<CandidateEval> = None;
    let mut admissible = 0;
    for &cmd in &samples {
        let e = evaluate_candidate(pose, cmd, carrot, static_map, obstacles, robot_radius, cfg);
        if !e.admissible {
            continue;
        }
        admissible += 1;
        if best.is_none_or(|b| e.score > b.score) {
            best = Some(e);
        }
    }
    let diag = |cmd_gap: f64, score: f64, stop: bool| DwaDiagnostics {
        candidates: samples.len(),
        admissible,
        emergency_stop: stop,
        min_clearance: cmd_gap,
        carrot,
        score,
        window,
    };
    match best {
        Some(b) => (b.cmd, diag(b.min_gap, b.score, false)),
        None => {
            let (fixed, moving) = pose_gap(pose.position(), 0.0, static_map, obstacles, robot_radius, cfg.clearance_cap);
            (VelocityCommand::STOP, diag(fixed.min(moving), 0.0, true))
        }
    }
}
