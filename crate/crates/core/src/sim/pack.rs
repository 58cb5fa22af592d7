//! The standard scenario pack: a 10 m × 10 m room with three target
//! objects, in four families of seeded variations.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::batch::BatchRun;
use super::script::{GazeScript, ScriptEvent, ScriptPhase};
use crate::gaze::TaskClass;
use crate::seed::{derive_seed, label_id, stream_rng};
use crate::world::{
    project_objects, CameraModel, DynamicObstacle, OccupancyGrid, Pose, Scenario, SceneObject,
};
use crate::{Error, Result, FORMAT_VERSION};

pub const FAMILIES: [&str; 4] = [
    "empty-room",
    "cluttered-static",
    "crossing-pedestrian",
    "nested-objects",
];

pub const SCRIPT_NAMES: [&str; 3] = ["positive", "look-only", "interactive-no-wink"];

pub const DEFAULT_PACK_SEEDS: u64 = 20;

const ROOM: f64 = 10.0;
const RESOLUTION: f64 = 0.1;
const ROBOT_RADIUS: f64 = 0.35;
const PACK_BASE_SEED: u64 = 0x5eed_9a2e;

/// Look away, look at the target interactively from 1 s, wink at 4.5 s.
pub const LOOK_AT: f64 = 1.0;
pub const WINK_AT: f64 = 4.5;
const NEGATIVE_END: f64 = 7.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PackEntry {
    pub family: String,
    pub seed: u64,
    pub target: String,
    pub scenario: Scenario,
    pub scripts: Vec<(String, GazeScript)>,
}

impl PackEntry {
    pub fn name(&self) -> String {
        format!("{}/seed-{:02}", self.family, self.seed)
    }

    pub fn runs(&self) -> Vec<BatchRun> {
        self.scripts
            .iter()
            .map(|(name, script)| BatchRun {
                family: self.family.clone(),
                name: self.name(),
                script_name: name.clone(),
                scenario: self.scenario.clone(),
                script: script.clone(),
                seed: derive_seed(self.seed, &[label_id(name)]),
            })
            .collect()
    }
}

pub fn scripts_for(target: &str) -> Vec<(String, GazeScript)> {
    let at = |t, phase| ScriptEvent { t, phase };
    let look = |class| ScriptPhase::LookAt { object: target.to_owned(), class };
    vec![
        (
            SCRIPT_NAMES[0].into(),
            GazeScript::simple(target, TaskClass::Interactive, LOOK_AT, Some(WINK_AT)),
        ),
        (
            SCRIPT_NAMES[1].into(),
            GazeScript {
                events: vec![
                    at(0.0, ScriptPhase::LookAway),
                    at(LOOK_AT, look(TaskClass::NonInteractive)),
                    at(NEGATIVE_END, ScriptPhase::LookAway),
                ],
            },
        ),
        (
            SCRIPT_NAMES[2].into(),
            GazeScript {
                events: vec![
                    at(0.0, ScriptPhase::LookAway),
                    at(LOOK_AT, look(TaskClass::Interactive)),
                    at(NEGATIVE_END, ScriptPhase::LookAway),
                ],
            },
        ),
    ]
}

fn room() -> OccupancyGrid {
    let n = (ROOM / RESOLUTION).round() as usize;
    let mut g = OccupancyGrid::new(n, n, RESOLUTION);
    g.add_border_walls();
    g
}

fn footprint(g: &mut OccupancyGrid, center: [f64; 2], size: [f64; 2]) {
    g.fill_rect(
        center[0] - size[0] / 2.0,
        center[1] - size[1] / 2.0,
        center[0] + size[0] / 2.0,
        center[1] + size[1] / 2.0,
    );
}

fn object(label: &str, center: [f64; 3], extent: [f64; 3], goal: [f64; 2]) -> SceneObject {
    SceneObject {
        label: label.into(),
        center_3d: center,
        extent_3d: extent,
        goal_point: goal,
    }
}

/// Standard room furniture: a wall TV, a chair and a desk with a laptop.
/// Returns the objects and stamps their footprints.
fn furnish(rng: &mut ChaCha8Rng, g: &mut OccupancyGrid) -> Vec<SceneObject> {
    let tv_x = rng.random_range(3.5..6.5);
    footprint(g, [tv_x, 9.75], [1.0, 0.1]);
    let tv = object("tv", [tv_x, 9.75, 1.3], [1.0, 0.1, 0.6], [tv_x, 8.6]);

    let left_chair = rng.random_bool(0.5);
    let (chair_lo, desk_lo) = if left_chair { (1.8, 6.8) } else { (6.8, 1.8) };
    let chair_c = [rng.random_range(chair_lo..chair_lo + 1.4), rng.random_range(6.8..7.6)];
    footprint(g, chair_c, [0.5, 0.5]);
    let chair = object(
        "chair",
        [chair_c[0], chair_c[1], 0.45],
        [0.5, 0.5, 0.9],
        [chair_c[0], chair_c[1] - 1.0],
    );

    let desk_c = [rng.random_range(desk_lo..desk_lo + 1.4), rng.random_range(6.8..7.6)];
    footprint(g, desk_c, [1.0, 0.6]);
    let laptop = object(
        "laptop",
        [desk_c[0], desk_c[1], 0.9],
        [0.45, 0.3, 0.35],
        [desk_c[0], desk_c[1] - 1.1],
    );
    vec![tv, chair, laptop]
}

fn start_pose(rng: &mut ChaCha8Rng) -> Pose {
    Pose::new(
        rng.random_range(4.0..6.0),
        1.2,
        std::f64::consts::FRAC_PI_2 + rng.random_range(-0.1..0.1),
    )
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn scenario(grid: OccupancyGrid, objects: Vec<SceneObject>, start: Pose, seed: u64) -> Scenario {
    Scenario {
        grid,
        objects,
        dynamic_obstacles: Vec::new(),
        start_pose: start,
        camera: CameraModel::default(),
        robot_radius: ROBOT_RADIUS,
        rng_seed: seed,
    }
}

/// Up to six box obstacles in the middle of the room, clear of the start,
/// the goal points and each other.
fn add_clutter(rng: &mut ChaCha8Rng, g: &mut OccupancyGrid, start: [f64; 2], goals: &[[f64; 2]]) {
    let mut placed: Vec<([f64; 2], [f64; 2])> = Vec::new();
    let mut attempts = 0;
    while placed.len() < 6 && attempts < 10_000 {
        attempts += 1;
        let size: [f64; 2] = [rng.random_range(0.4..0.8), rng.random_range(0.4..0.8)];
        let c = [rng.random_range(1.2..8.8), rng.random_range(2.6..5.6)];
        let radius = size[0].hypot(size[1]) / 2.0;
        if dist(c, start) < radius + 1.2 || goals.iter().any(|&q| dist(c, q) < radius + 1.0) {
            continue;
        }
        // Leave a gap the planner's inflated footprint fits through.
        if placed.iter().any(|(p, s)| dist(c, *p) < radius + s[0].hypot(s[1]) / 2.0 + 1.3) {
            continue;
        }
        placed.push((c, size));
    }
    for (c, s) in placed {
        footprint(g, c, s);
    }
}

fn pedestrians(rng: &mut ChaCha8Rng) -> Vec<DynamicObstacle> {
    let n = rng.random_range(1..=2);
    let mut lanes = [rng.random_range(3.4..4.2), rng.random_range(4.8..5.6)];
    if rng.random_bool(0.5) {
        lanes.swap(0, 1);
    }
    (0..n)
        .map(|k| {
            let y = lanes[k];
            DynamicObstacle {
                radius: 0.25,
                waypoints: vec![[1.0, y], [9.0, y]],
                speed: rng.random_range(0.4..0.6),
                phase: rng.random_range(0.0..16.0),
            }
        })
        .collect()
}

/// A large TV behind a desk whose laptop projects inside the TV's box.
fn nested(rng: &mut ChaCha8Rng, start: Pose) -> (OccupancyGrid, Vec<SceneObject>) {
    let mut g = room();
    let x0 = start.x;
    let tv_x = x0 + rng.random_range(-0.15..0.15);
    let tv_y = start.y + 6.0;
    footprint(&mut g, [tv_x, tv_y], [2.0, 0.2]);
    let tv = object("tv", [tv_x, tv_y, 1.5], [2.0, 0.1, 1.2], [tv_x - 1.6, tv_y - 1.0]);
    let desk = [tv_x + 0.35 + rng.random_range(-0.05..0.05), start.y + 4.0];
    footprint(&mut g, desk, [1.0, 0.6]);
    let laptop = object(
        "laptop",
        [desk[0], desk[1], 1.175],
        [0.3, 0.25, 0.25],
        [desk[0] - 1.2, desk[1] - 0.3],
    );
    (g, vec![tv, laptop])
}

/// One entry of the standard pack.
pub fn family_entry(family: &str, seed: u64) -> Result<PackEntry> {
    let fam = FAMILIES
        .iter()
        .position(|f| *f == family)
        .ok_or_else(|| Error::InvalidParams(format!("unknown scenario family `{family}`")))?;
    let mut rng = stream_rng(PACK_BASE_SEED, &[fam as u64, seed]);
    let sc_seed = derive_seed(PACK_BASE_SEED, &[fam as u64, seed, 1]);
    let start = start_pose(&mut rng);
    let (scenario, target) = match family {
        "nested-objects" => {
            let start = Pose::new(5.0, 1.2, std::f64::consts::FRAC_PI_2);
            let (g, objects) = nested(&mut rng, start);
            let target = ["laptop", "tv"][(seed % 2) as usize];
            (scenario(g, objects, start, sc_seed), target)
        }
        _ => {
            let mut g = room();
            let objects = furnish(&mut rng, &mut g);
            let goals: Vec<_> = objects.iter().map(|o| o.goal_point).collect();
            if family == "cluttered-static" {
                add_clutter(&mut rng, &mut g, start.position(), &goals);
            }
            let mut sc = scenario(g, objects, start, sc_seed);
            if family == "crossing-pedestrian" {
                sc.dynamic_obstacles = pedestrians(&mut rng);
            }
            let target = ["tv", "laptop", "chair"][(seed % 3) as usize];
            (sc, target)
        }
    };
    scenario.validate()?;
    Ok(PackEntry {
        family: family.to_owned(),
        seed,
        target: target.to_owned(),
        scripts: scripts_for(target),
        scenario,
    })
}

pub fn standard_pack(seeds: u64) -> Result<Vec<PackEntry>> {
    let mut out = Vec::new();
    for family in FAMILIES {
        for seed in 0..seeds {
            out.push(family_entry(family, seed)?);
        }
    }
    Ok(out)
}

/// True if the target's box is in view from the start pose.
pub fn target_visible(entry: &PackEntry) -> bool {
    let sc = &entry.scenario;
    project_objects(&sc.camera, &sc.start_pose, &sc.objects)
        .iter()
        .any(|(l, _)| *l == entry.target)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    family: String,
    seed: u64,
    target: String,
    scenario: String,
    scripts: Vec<ScriptRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptRef {
    name: String,
    file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format_version: u32,
    flags: serde_json::Value,
    entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "pack.json";

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes one scenario file per entry, the scripts, and `pack.json`.
pub fn write_pack(dir: &Path, entries: &[PackEntry], flags: &serde_json::Value) -> Result<()> {
    let mut manifest = Manifest {
        format_version: FORMAT_VERSION,
        flags: flags.clone(),
        entries: Vec::new(),
    };
    for e in entries {
        let scenario = format!("{}/seed-{:02}.scenario.json", e.family, e.seed);
        write_json(&dir.join(&scenario), &e.scenario)?;
        let mut scripts = Vec::new();
        for (name, script) in &e.scripts {
            let file = format!("scripts/{}-{}.json", name, e.target);
            write_json(&dir.join(&file), script)?;
            scripts.push(ScriptRef { name: name.clone(), file });
        }
        manifest.entries.push(ManifestEntry {
            family: e.family.clone(),
            seed: e.seed,
            target: e.target.clone(),
            scenario,
            scripts,
        });
    }
    write_json(&dir.join(MANIFEST_FILE), &manifest)
}

/// Reads a pack written by [`write_pack`], keeping at most `seeds` seeds
/// per family.
pub fn read_pack(dir: &Path, seeds: Option<u64>) -> Result<Vec<PackEntry>> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::InvalidScenario(format!(
            "{}: format_version {} (expected {FORMAT_VERSION})",
            path.display(),
            manifest.format_version
        )));
    }
    let mut out = Vec::new();
    for m in manifest.entries {
        if seeds.is_some_and(|n| m.seed >= n) {
            continue;
        }
        let scenario = Scenario::load(&dir.join(&m.scenario))?;
        let scripts = m
            .scripts
            .iter()
            .map(|r| Ok((r.name.clone(), GazeScript::load(&dir.join(&r.file))?)))
            .collect::<Result<Vec<_>>>()?;
        out.push(PackEntry {
            family: m.family,
            seed: m.seed,
            target: m.target,
            scenario,
            scripts,
        });
    }
    Ok(out)
}
