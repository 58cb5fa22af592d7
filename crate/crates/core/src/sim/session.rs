use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::script::GazeIntent;
use crate::classify::Model;
use crate::gaze::{
    hit_test, normalize_gaze, AveragedBox, BBox2D, GazeGenParams, GazeGenerator, GazeSample,
    TaskClass, DEFAULT_MARGIN_FRAC,
};
use crate::intent::{
    decoder_step, intent_color, DecoderState, GoalDispatch, IntentBuffer, DEFAULT_BUFFER_CAPACITY,
    DEFAULT_WINK_WINDOW,
};
use crate::nav::{
    dwa_step, goal_reached, plan_dijkstra, ClearanceMap, DwaConfig, DwaDiagnostics, ObstacleTrack,
    PlannedPath, DEFAULT_GOAL_RADIUS,
};
use crate::seed::stream_rng;
use crate::world::{
    dynamic_obstacle_position, inflate, project_objects, step_kinematics, Cell, CellIndex,
    OccupancyGrid, Pose, Scenario, VelocityCommand,
};
use crate::{Error, Result, TICK_DT};

const GAZE_STREAM: u64 = 1;
const BOX_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dwa: DwaConfig,
    pub r_goal: f64,
    /// Extra planner inflation beyond the robot radius, so global paths
    /// leave the local controller room to track them.
    pub inflation_margin: f64,
    /// Simulated seconds before a run is cut off.
    pub timeout: f64,
    /// Seconds a run continues after the script ends while no goal is
    /// active.
    pub idle_tail: f64,
    pub replan_period: f64,
    pub buffer_capacity: usize,
    pub wink_window: f64,
    pub margin_frac: f64,
    /// Per-frame detector noise on each box edge, in pixels.
    pub box_noise_px: f64,
    pub gaze: GazeGenParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dwa: DwaConfig::default(),
            r_goal: DEFAULT_GOAL_RADIUS,
            inflation_margin: 0.2,
            timeout: 120.0,
            idle_tail: 2.0,
            replan_period: 2.0,
            buffer_capacity: DEFAULT_BUFFER_CAPACITY,
            wink_window: DEFAULT_WINK_WINDOW,
            margin_frac: DEFAULT_MARGIN_FRAC,
            box_noise_px: 2.0,
            gaze: GazeGenParams::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        self.dwa.validate().map_err(Error::InvalidParams)?;
        self.gaze.validate()?;
        for (name, x) in [
            ("r_goal", self.r_goal),
            ("timeout", self.timeout),
            ("replan_period", self.replan_period),
            ("wink_window", self.wink_window),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return bad(format!("{name} must be positive, got {x}"));
            }
        }
        if !(self.idle_tail >= 0.0
            && self.margin_frac >= 0.0
            && self.box_noise_px >= 0.0
            && self.inflation_margin >= 0.0)
        {
            return bad("idle_tail, margin_frac, box_noise_px and inflation_margin must be non-negative".into());
        }
        if self.buffer_capacity == 0 {
            return bad("buffer_capacity must be positive".into());
        }
        Ok(())
    }
}

/// Where this tick's gaze comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GazeInput<'a> {
    /// Draw a sample from the gaze generator for a scripted phase.
    Scripted(GazeIntent<'a>),
    /// A pixel from a live client, or none.
    Pixel(Option<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxView {
    pub label: String,
    pub rect: [f64; 4],
    pub avg_rect: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeView {
    pub raw: Option<[f64; 2]>,
    pub object: Option<String>,
    pub u: Option<f64>,
    pub v: Option<f64>,
    /// Per-frame classifier output.
    pub class: Option<TaskClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentView {
    pub vote: TaskClass,
    pub buffer_fill: usize,
    pub state: DecoderState,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SimEvent {
    GoalDispatched(GoalDispatch),
    Planned {
        reason: String,
        waypoints: Vec<[f64; 2]>,
        total_cost: f64,
    },
    PlanFailed {
        reason: String,
        error: String,
    },
    Arrived {
        distance: f64,
    },
}

/// Everything that happened in one control tick. `pose` is the state at
/// `t`; `cmd` is applied over the following tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub k: u64,
    pub t: f64,
    pub pose: Pose,
    pub cmd: VelocityCommand,
    pub boxes: Vec<BoxView>,
    pub gaze: GazeView,
    pub intent: IntentView,
    pub wink: bool,
    pub obstacles: Vec<[f64; 2]>,
    pub nav: Option<DwaDiagnostics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<SimEvent>,
}

/// One closed-loop session: camera, decoder and navigation advanced tick
/// by tick. Headless runs and the live server both drive this.
#[derive(Debug, Clone)]
pub struct Session {
    scenario: Scenario,
    cfg: SimConfig,
    models: BTreeMap<String, Model>,
    generator: GazeGenerator,
    plan_base: OccupancyGrid,
    clearance: ClearanceMap,
    gaze_rng: ChaCha8Rng,
    box_rng: ChaCha8Rng,
    tick: u64,
    pose: Pose,
    cmd: VelocityCommand,
    avg_boxes: BTreeMap<String, AveragedBox>,
    buffer: IntentBuffer,
    state: DecoderState,
    goal: Option<GoalDispatch>,
    path: Option<PlannedPath>,
    last_plan_t: f64,
    prev_obstacles: Option<Vec<[f64; 2]>>,
    arrived: bool,
}

impl Session {
    pub fn new(
        scenario: Scenario,
        models: BTreeMap<String, Model>,
        cfg: SimConfig,
        seed: u64,
    ) -> Result<Self> {
        scenario.validate()?;
        cfg.validate()?;
        let generator = GazeGenerator::new(cfg.gaze.clone())?;
        let plan_base = inflate(&scenario.grid, scenario.robot_radius + cfg.inflation_margin);
        let range = cfg.dwa.clearance_cap + scenario.robot_radius + 2.0 * scenario.grid.resolution();
        let clearance = ClearanceMap::new(&scenario.grid.without_inflation(), range);
        let base = crate::seed::derive_seed(scenario.rng_seed, &[seed]);
        Ok(Self {
            pose: scenario.start_pose,
            gaze_rng: stream_rng(base, &[GAZE_STREAM]),
            box_rng: stream_rng(base, &[BOX_STREAM]),
            buffer: IntentBuffer::new(cfg.buffer_capacity),
            scenario,
            cfg,
            models,
            generator,
            plan_base,
            clearance,
            tick: 0,
            cmd: VelocityCommand::STOP,
            avg_boxes: BTreeMap::new(),
            state: DecoderState::Idle,
            goal: None,
            path: None,
            last_plan_t: 0.0,
            prev_obstacles: None,
            arrived: false,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn tick_index(&self) -> u64 {
        self.tick
    }

    /// Simulated time of the next tick.
    pub fn time(&self) -> f64 {
        self.tick as f64 * TICK_DT
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn path(&self) -> Option<&PlannedPath> {
        self.path.as_ref()
    }

    pub fn goal(&self) -> Option<&GoalDispatch> {
        self.goal.as_ref()
    }

    pub fn decoder_state(&self) -> &DecoderState {
        &self.state
    }

    pub fn arrived(&self) -> bool {
        self.arrived
    }

    /// True while a dispatched goal has not been reached.
    pub fn navigating(&self) -> bool {
        self.goal.is_some() && !self.arrived
    }

    /// Ground-truth dynamic obstacle positions at time `t`.
    pub fn obstacle_positions(&self, t: f64) -> Vec<[f64; 2]> {
        self.scenario
            .dynamic_obstacles
            .iter()
            .map(|o| dynamic_obstacle_position(o, t))
            .collect()
    }

    fn observe_boxes(&mut self) -> Vec<(String, BBox2D)> {
        let seen = project_objects(&self.scenario.camera, &self.pose, &self.scenario.objects);
        let noise = self.cfg.box_noise_px;
        let (w, h) = (
            self.scenario.camera.image_width as f64,
            self.scenario.camera.image_height as f64,
        );
        let mut out = Vec::with_capacity(seen.len());
        for (label, b) in seen {
            let b = if noise > 0.0 {
                let mut d = || noise * self.box_rng.sample::<f64, _>(StandardNormal);
                let (x0, y0, x1, y1) = (b.x_min + d(), b.y_min + d(), b.x_max + d(), b.y_max + d());
                BBox2D::new(
                    x0.min(x1).clamp(0.0, w),
                    y0.min(y1).clamp(0.0, h),
                    x0.max(x1).clamp(0.0, w),
                    y0.max(y1).clamp(0.0, h),
                )
            } else {
                b
            };
            out.push((label, b));
        }
        // Averages restart when an object leaves the view.
        self.avg_boxes
            .retain(|label, _| out.iter().any(|(l, _)| l == label));
        for (label, b) in &out {
            match self.avg_boxes.get_mut(label) {
                Some(avg) => avg.update(*b),
                None => {
                    self.avg_boxes
                        .insert(label.clone(), AveragedBox::new(label.clone(), *b));
                }
            }
        }
        out
    }

    fn gaze_sample(&mut self, input: GazeInput<'_>, boxes: &[(String, BBox2D)], t: f64) -> Option<GazeSample> {
        match input {
            GazeInput::Pixel(p) => p.map(|[x, y]| GazeSample::new(t, x, y)),
            GazeInput::Scripted(GazeIntent::LookAt(object, cls)) => {
                let (_, b) = boxes.iter().find(|(l, _)| l == object)?;
                self.generator
                    .pixel(&mut self.gaze_rng, object, cls, b, t)
                    .ok()
            }
            GazeInput::Scripted(GazeIntent::LookAway) => {
                let cam = &self.scenario.camera;
                let x = self.gaze_rng.random_range(0.0..cam.image_width as f64);
                let y = self.gaze_rng.random_range(0.0..cam.image_height as f64);
                Some(GazeSample::new(t, x, y))
            }
        }
    }

    fn tracks(&self, now: &[[f64; 2]]) -> Vec<ObstacleTrack> {
        self.scenario
            .dynamic_obstacles
            .iter()
            .zip(now)
            .enumerate()
            .map(|(k, (o, &p))| {
                let velocity = match &self.prev_obstacles {
                    Some(prev) => [(p[0] - prev[k][0]) / TICK_DT, (p[1] - prev[k][1]) / TICK_DT],
                    None => [0.0, 0.0],
                };
                ObstacleTrack { position: p, velocity, radius: o.radius }
            })
            .collect()
    }

    fn plan(&mut self, t: f64, obstacles: &[[f64; 2]], reason: &str, events: &mut Vec<SimEvent>) {
        let Some(goal) = &self.goal else { return };
        let mut grid = self.plan_base.clone();
        let r = self.scenario.robot_radius;
        for (o, p) in self.scenario.dynamic_obstacles.iter().zip(obstacles) {
            stamp_disc(&mut grid, *p, o.radius + r);
        }
        self.last_plan_t = t;
        match plan_dijkstra(&grid, &self.pose, goal.goal_point) {
            Ok(path) => {
                events.push(SimEvent::Planned {
                    reason: reason.to_owned(),
                    waypoints: path.waypoints.clone(),
                    total_cost: path.total_cost,
                });
                self.path = Some(path);
            }
            Err(e) => {
                events.push(SimEvent::PlanFailed {
                    reason: reason.to_owned(),
                    error: e.to_string(),
                });
            }
        }
    }

    fn corridor_blocked(&self, obstacles: &[[f64; 2]]) -> bool {
        let Some(path) = &self.path else { return false };
        let r = self.scenario.robot_radius;
        let p = self.pose.position();
        let nearest = path
            .waypoints
            .iter()
            .enumerate()
            .min_by(|a, b| dist(*a.1, p).total_cmp(&dist(*b.1, p)))
            .map_or(0, |(k, _)| k);
        self.scenario
            .dynamic_obstacles
            .iter()
            .zip(obstacles)
            .any(|(o, q)| path.waypoints[nearest..].iter().any(|w| dist(*w, *q) < r + o.radius))
    }

    /// Advances one tick and returns its record.
    pub fn step(&mut self, input: GazeInput<'_>, wink: bool) -> TickRecord {
        let k = self.tick;
        let t = self.time();
        let obstacles = self.obstacle_positions(t);
        let mut events = Vec::new();

        let boxes = self.observe_boxes();
        let sample = self.gaze_sample(input, &boxes, t);
        let object = sample.as_ref().and_then(|s| hit_test(s, &boxes)).map(str::to_owned);
        let mut gaze = GazeView {
            raw: sample.as_ref().map(|s| [s.x_px, s.y_px]),
            object: object.clone(),
            u: None,
            v: None,
            class: None,
        };
        if let (Some(s), Some(obj)) = (&sample, &object) {
            if let Ok(n) = normalize_gaze(s, &self.avg_boxes[obj], self.cfg.margin_frac) {
                gaze.u = Some(n.u);
                gaze.v = Some(n.v);
                gaze.class = self.models.get(obj).map(|m| m.predict([n.u, n.v]));
            }
        }
        self.buffer.push_frame(object.as_deref(), gaze.class);
        let vote = self.buffer.vote();
        let (state, dispatched) = decoder_step(
            &self.state,
            vote,
            self.buffer.current_object(),
            wink,
            t,
            self.cfg.wink_window,
        );
        self.state = state;
        if let Some(obj) = dispatched {
            if let Some(target) = self.scenario.object(&obj) {
                let d = GoalDispatch { object: obj, goal_point: target.goal_point, t };
                events.push(SimEvent::GoalDispatched(d.clone()));
                self.goal = Some(d);
                self.arrived = false;
                self.path = None;
                self.plan(t, &obstacles, "dispatch", &mut events);
            }
        }

        let mut nav = None;
        if self.navigating() {
            let goal_point = self.goal.as_ref().unwrap().goal_point;
            if goal_reached(&self.pose, goal_point, self.cfg.r_goal) {
                self.arrived = true;
                self.cmd = VelocityCommand::STOP;
                events.push(SimEvent::Arrived { distance: self.pose.distance_to(goal_point) });
            } else {
                if self.path.is_none() || t - self.last_plan_t >= self.cfg.replan_period - 1e-9 {
                    self.plan(t, &obstacles, "periodic", &mut events);
                } else if self.corridor_blocked(&obstacles) {
                    self.plan(t, &obstacles, "corridor", &mut events);
                }
                match &self.path {
                    Some(path) => {
                        let tracks = self.tracks(&obstacles);
                        let (cmd, diag) = dwa_step(
                            &self.pose,
                            self.cmd,
                            &self.clearance,
                            &tracks,
                            path,
                            self.scenario.robot_radius,
                            &self.cfg.dwa,
                        );
                        self.cmd = cmd;
                        nav = Some(diag);
                    }
                    None => self.cmd = VelocityCommand::STOP,
                }
            }
        } else {
            self.cmd = VelocityCommand::STOP;
        }

        let record = TickRecord {
            k,
            t,
            pose: self.pose,
            cmd: self.cmd,
            boxes: boxes
                .iter()
                .map(|(l, b)| BoxView {
                    label: l.clone(),
                    rect: b.as_array(),
                    avg_rect: self.avg_boxes[l].mean_box.as_array(),
                })
                .collect(),
            gaze,
            intent: IntentView {
                vote,
                buffer_fill: self.buffer.len(),
                state: self.state.clone(),
                color: intent_color(vote).to_owned(),
            },
            wink,
            obstacles: obstacles.clone(),
            nav,
            events,
        };

        self.pose = step_kinematics(self.pose, self.cmd, TICK_DT);
        self.prev_obstacles = Some(obstacles);
        self.tick += 1;
        record
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Marks every Free cell whose center lies within `radius` of `p`.
fn stamp_disc(grid: &mut OccupancyGrid, p: [f64; 2], radius: f64) {
    let res = grid.resolution();
    let reach = (radius / res).ceil() as isize + 1;
    let (ci, cj) = ((p[0] / res).floor() as isize, (p[1] / res).floor() as isize);
    for j in cj - reach..=cj + reach {
        for i in ci - reach..=ci + reach {
            if !grid.in_bounds(i, j) {
                continue;
            }
            let c = CellIndex::new(i as usize, j as usize);
            if grid.get(c) == Cell::Free && dist(grid.world_of(c), p) <= radius {
                grid.set(c, Cell::Inflated);
            }
        }
    }
}
