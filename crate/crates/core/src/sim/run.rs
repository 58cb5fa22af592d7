use std::collections::BTreeMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::script::{tick_of, GazeScript};
use super::session::{GazeInput, SimConfig, SimEvent, Session, TickRecord};
use crate::classify::Model;
use crate::gaze::TaskClass;
use crate::nav::ClearanceMap;
use crate::world::Scenario;
use crate::{Error, Result, FORMAT_VERSION, TICK_DT};

/// Outcome of one scripted run. Everything here is recomputable from the
/// run's event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMetrics {
    /// Seconds from goal dispatch to arrival; `None` when the goal was
    /// not reached.
    pub time_to_goal: Option<f64>,
    pub stop_distance: Option<f64>,
    pub static_collisions: u32,
    pub dynamic_collisions: u32,
    pub emergency_stops: u32,
    pub goal_dispatched: bool,
    pub dispatched_object: Option<String>,
    /// The dispatched object (or its absence) matches the script's
    /// intended object (or its absence).
    pub goal_correct: bool,
    /// Seconds from the interactive gaze onset to the first interactive
    /// vote on the intended object.
    pub intent_latency: Option<f64>,
    pub sim_time: f64,
    pub ticks: u64,
    pub exposed_static: bool,
    pub exposed_dynamic: bool,
    pub distance_travelled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format_version: u32,
    pub scenario: Scenario,
    pub script: GazeScript,
    pub config: SimConfig,
    pub seed: u64,
    pub models: BTreeMap<String, String>,
    pub flags: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LogLine {
    Header(Box<LogHeader>),
    Tick(Box<TickRecord>),
    Summary { metrics: RunMetrics },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub header: LogHeader,
    pub ticks: Vec<TickRecord>,
    pub summary: RunMetrics,
}

impl EventLog {
    pub fn write_to(&self, out: impl Write) -> std::io::Result<()> {
        let mut w = BufWriter::new(out);
        let mut line = |l: &LogLine| -> std::io::Result<()> {
            serde_json::to_writer(&mut w, l)?;
            w.write_all(b"\n")
        };
        line(&LogLine::Header(Box::new(self.header.clone())))?;
        for t in &self.ticks {
            line(&LogLine::Tick(Box::new(t.clone())))?;
        }
        line(&LogLine::Summary { metrics: self.summary.clone() })?;
        w.flush()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(f).map_err(|e| Error::io(path, e))
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(f)).map_err(|e| match e {
            Error::MalformedLog(m) => Error::MalformedLog(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(reader: impl BufRead) -> Result<Self> {
        let mut header = None;
        let mut ticks = Vec::new();
        let mut summary = None;
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::MalformedLog(format!("line {}: {e}", n + 1)))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LogLine = serde_json::from_str(&line)
                .map_err(|e| Error::MalformedLog(format!("line {}: {e}", n + 1)))?;
            if summary.is_some() {
                return Err(Error::MalformedLog(format!("line {}: data after summary", n + 1)));
            }
            match parsed {
                LogLine::Header(h) if header.is_none() && n == 0 => header = Some(*h),
                LogLine::Tick(t) if header.is_some() => ticks.push(*t),
                LogLine::Summary { metrics } if header.is_some() => summary = Some(metrics),
                _ => return Err(Error::MalformedLog(format!("line {}: out of order", n + 1))),
            }
        }
        let header = header.ok_or_else(|| Error::MalformedLog("missing header".into()))?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::MalformedLog(format!(
                "format_version {} (expected {FORMAT_VERSION})",
                header.format_version
            )));
        }
        let summary = summary.ok_or_else(|| Error::MalformedLog("missing summary (truncated log?)".into()))?;
        Ok(Self { header, ticks, summary })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub log: EventLog,
}

/// Executes a scripted run headlessly until the goal is reached, the
/// script has ended with no goal pending, or the timeout.
pub fn run_scenario(
    scenario: &Scenario,
    script: &GazeScript,
    models: &BTreeMap<String, Model>,
    cfg: &SimConfig,
    seed: u64,
) -> Result<RunOutput> {
    script.validate()?;
    for object in script.objects() {
        if scenario.object(object).is_none() {
            return Err(Error::InvalidScript(format!("script looks at unknown object `{object}`")));
        }
        if !models.contains_key(object) {
            return Err(Error::MissingModel(object.to_owned()));
        }
    }
    let mut session = Session::new(scenario.clone(), models.clone(), cfg.clone(), seed)?;
    let max_ticks = tick_of(cfg.timeout, TICK_DT);
    let idle_until = script.end_time() + cfg.idle_tail;
    let mut ticks = Vec::new();
    while session.tick_index() <= max_ticks {
        let k = session.tick_index();
        let t = session.time();
        if session.goal().is_none() && t > idle_until {
            break;
        }
        let rec = session.step(
            GazeInput::Scripted(script.intent_at(t)),
            script.wink_at_tick(k, TICK_DT),
        );
        let done = session.arrived();
        ticks.push(rec);
        if done {
            break;
        }
    }
    let header = LogHeader {
        format_version: FORMAT_VERSION,
        scenario: scenario.clone(),
        script: script.clone(),
        config: cfg.clone(),
        seed,
        models: models.iter().map(|(k, m)| (k.clone(), m.kind_name().to_owned())).collect(),
        flags: serde_json::Value::Null,
    };
    let metrics = derive_metrics(&header, &ticks);
    Ok(RunOutput {
        log: EventLog { header, ticks, summary: metrics.clone() },
        metrics,
    })
}

/// Computes a run's metrics from its log alone.
pub fn derive_metrics(header: &LogHeader, ticks: &[TickRecord]) -> RunMetrics {
    let sc = &header.scenario;
    let r = sc.robot_radius;
    let raw = sc.grid.without_inflation();
    let cap = r + header.config.dwa.clearance_cap;
    let clearance = ClearanceMap::new(&raw, cap + raw.resolution());

    let mut static_collisions = 0;
    let mut dynamic_collisions = 0;
    let mut emergency_stops = 0;
    let (mut in_static, mut in_dynamic, mut in_stop) = (false, false, false);
    let mut dispatch: Option<(String, f64, [f64; 2])> = None;
    let mut arrival: Option<(f64, f64)> = None;
    let mut first_path: Option<&Vec<[f64; 2]>> = None;
    let mut distance_travelled = 0.0;
    let mut prev_pose = None;

    let intended = header.script.intended_object();
    let onset = header.script.interactive_onset();
    let mut latency = None;

    for rec in ticks {
        let p = rec.pose.position();
        let hit_static = clearance.clearance(p, r) < r;
        if hit_static && !in_static {
            static_collisions += 1;
        }
        in_static = hit_static;
        let hit_dynamic = sc
            .dynamic_obstacles
            .iter()
            .zip(&rec.obstacles)
            .any(|(o, q)| (p[0] - q[0]).hypot(p[1] - q[1]) < r + o.radius);
        if hit_dynamic && !in_dynamic {
            dynamic_collisions += 1;
        }
        in_dynamic = hit_dynamic;
        let stop = rec.nav.as_ref().is_some_and(|d| d.emergency_stop);
        if stop && !in_stop {
            emergency_stops += 1;
        }
        in_stop = stop;

        if let Some(prev) = prev_pose {
            let prev: crate::world::Pose = prev;
            distance_travelled += prev.distance_to(p);
        }
        prev_pose = Some(rec.pose);

        if latency.is_none() {
            if let Some(t0) = onset {
                let on_target = match intended {
                    Some(o) => rec.gaze.object.as_deref() == Some(o),
                    None => true,
                };
                if rec.t >= t0 && rec.intent.vote == TaskClass::Interactive && on_target {
                    latency = Some(rec.t - t0);
                }
            }
        }
        for e in &rec.events {
            match e {
                SimEvent::GoalDispatched(d) => {
                    dispatch = Some((d.object.clone(), d.t, d.goal_point));
                    arrival = None;
                }
                SimEvent::Planned { waypoints, .. } => {
                    first_path.get_or_insert(waypoints);
                }
                SimEvent::Arrived { distance } => arrival = Some((rec.t, *distance)),
                SimEvent::PlanFailed { .. } => {}
            }
        }
    }

    let exposed_static = first_path.is_some_and(|wps| wps.iter().any(|w| clearance.clearance(*w, cap) < cap));
    let exposed_dynamic = dispatch.is_some() && !sc.dynamic_obstacles.is_empty();
    let dispatched_object = dispatch.as_ref().map(|d| d.0.clone());
    RunMetrics {
        time_to_goal: match (&dispatch, arrival) {
            (Some(d), Some((t, _))) => Some(t - d.1),
            _ => None,
        },
        stop_distance: arrival.map(|a| a.1),
        static_collisions,
        dynamic_collisions,
        emergency_stops,
        goal_dispatched: dispatch.is_some(),
        goal_correct: dispatched_object.as_deref() == intended,
        dispatched_object,
        intent_latency: latency,
        sim_time: ticks.last().map_or(0.0, |t| t.t),
        ticks: ticks.len() as u64,
        exposed_static,
        exposed_dynamic,
        distance_travelled,
    }
}

/// Re-derives metrics from a log and checks them against its summary.
pub fn replay(log: &EventLog) -> Result<RunMetrics> {
    let metrics = derive_metrics(&log.header, &log.ticks);
    if metrics != log.summary {
        return Err(Error::MalformedLog(format!(
            "summary does not match the ticks: logged {:?}, recomputed {:?}",
            log.summary, metrics
        )));
    }
    Ok(metrics)
}
