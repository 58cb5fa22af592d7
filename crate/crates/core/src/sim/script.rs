use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::gaze::TaskClass;
use crate::{Error, Result};

/// What the simulated user does from `t` onward. `Wink` is instantaneous
/// and does not change the gaze phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScriptPhase {
    LookAt { object: String, class: TaskClass },
    LookAway,
    Wink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEvent {
    pub t: f64,
    #[serde(flatten)]
    pub phase: ScriptPhase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GazeScript {
    pub events: Vec<ScriptEvent>,
}

/// Gaze behaviour in effect at some instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GazeIntent<'a> {
    LookAt(&'a str, TaskClass),
    LookAway,
}

impl GazeScript {
    pub fn new(events: Vec<ScriptEvent>) -> Result<Self> {
        let s = Self { events };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScript(m));
        for (k, e) in self.events.iter().enumerate() {
            if !(e.t.is_finite() && e.t >= 0.0) {
                return bad(format!("event {k} has invalid time {}", e.t));
            }
            if k > 0 && e.t <= self.events[k - 1].t {
                return bad(format!("event times must strictly increase (event {k} at {})", e.t));
            }
            if let ScriptPhase::LookAt { object, .. } = &e.phase {
                if object.is_empty() {
                    return bad(format!("event {k} looks at an empty label"));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let script: GazeScript = serde_json::from_str(s).map_err(|e| Error::json("<script>", e))?;
        script.validate()?;
        Ok(script)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let script: GazeScript = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        script.validate()?;
        Ok(script)
    }

    /// Time of the last event, or 0 for an empty script.
    pub fn end_time(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.t)
    }

    pub fn has_wink(&self) -> bool {
        self.events.iter().any(|e| e.phase == ScriptPhase::Wink)
    }

    /// Gaze phase in effect at `t`; before the first gaze event the user
    /// looks away.
    pub fn intent_at(&self, t: f64) -> GazeIntent<'_> {
        let mut cur = GazeIntent::LookAway;
        for e in &self.events {
            if e.t > t {
                break;
            }
            match &e.phase {
                ScriptPhase::LookAt { object, class } => cur = GazeIntent::LookAt(object, *class),
                ScriptPhase::LookAway => cur = GazeIntent::LookAway,
                ScriptPhase::Wink => {}
            }
        }
        cur
    }

    /// True if a wink belongs to tick `k`: the first tick at or after
    /// the wink time.
    pub fn wink_at_tick(&self, k: u64, dt: f64) -> bool {
        self.events
            .iter()
            .any(|e| e.phase == ScriptPhase::Wink && tick_of(e.t, dt) == k)
    }

    /// The object the user means to select: the interactive target being
    /// looked at when the first wink happens.
    pub fn intended_object(&self) -> Option<&str> {
        let first_wink = self.events.iter().find(|e| e.phase == ScriptPhase::Wink)?;
        match self.intent_at(first_wink.t) {
            GazeIntent::LookAt(o, TaskClass::Interactive) => Some(o),
            _ => None,
        }
    }

    /// Start time of the interactive gaze phase that the first wink
    /// confirms (or of the first interactive phase when there is no wink).
    pub fn interactive_onset(&self) -> Option<f64> {
        let limit = self
            .events
            .iter()
            .find(|e| e.phase == ScriptPhase::Wink)
            .map_or(f64::INFINITY, |e| e.t);
        let mut onset = None;
        for e in self.events.iter().take_while(|e| e.t <= limit) {
            match &e.phase {
                ScriptPhase::LookAt { class: TaskClass::Interactive, .. } => {
                    onset.get_or_insert(e.t);
                }
                ScriptPhase::LookAt { .. } | ScriptPhase::LookAway => {
                    if limit.is_finite() {
                        onset = None;
                    }
                }
                ScriptPhase::Wink => {}
            }
        }
        onset
    }

    pub fn objects(&self) -> impl Iterator<Item = &str> {
        self.events.iter().filter_map(|e| match &e.phase {
            ScriptPhase::LookAt { object, .. } => Some(object.as_str()),
            _ => None,
        })
    }

    /// Look away, fixate `object` with the given class from `look_at`,
    /// and optionally wink at `wink`.
    pub fn simple(object: &str, class: TaskClass, look_at: f64, wink: Option<f64>) -> Self {
        let mut events = vec![
            ScriptEvent { t: 0.0, phase: ScriptPhase::LookAway },
            ScriptEvent {
                t: look_at,
                phase: ScriptPhase::LookAt { object: object.to_owned(), class },
            },
        ];
        if let Some(w) = wink {
            events.push(ScriptEvent { t: w, phase: ScriptPhase::Wink });
        }
        Self { events }
    }
}

/// Index of the first tick at or after `t`, absorbing rounding noise.
pub fn tick_of(t: f64, dt: f64) -> u64 {
    (t / dt - 1e-9).ceil().max(0.0) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let s = GazeScript::simple("chair", TaskClass::Interactive, 1.0, Some(3.5));
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(
            text,
            r#"{"events":[{"t":0.0,"phase":"look_away"},{"t":1.0,"phase":"look_at","object":"chair","class":1},{"t":3.5,"phase":"wink"}]}"#
        );
        assert_eq!(GazeScript::from_json(&text).unwrap(), s);
    }

    #[test]
    fn rejects_non_increasing_times() {
        let text = r#"{"events":[{"t":1.0,"phase":"look_away"},{"t":1.0,"phase":"wink"}]}"#;
        assert!(matches!(GazeScript::from_json(text), Err(Error::InvalidScript(_))));
        let text = r#"{"events":[{"t":-1.0,"phase":"look_away"}]}"#;
        assert!(GazeScript::from_json(text).is_err());
    }

    #[test]
    fn phases_and_winks() {
        let s = GazeScript::simple("tv", TaskClass::Interactive, 1.0, Some(3.5));
        assert_eq!(s.intent_at(0.5), GazeIntent::LookAway);
        assert_eq!(s.intent_at(1.0), GazeIntent::LookAt("tv", TaskClass::Interactive));
        assert_eq!(s.intent_at(10.0), GazeIntent::LookAt("tv", TaskClass::Interactive));
        let dt = 0.04;
        let hits: Vec<u64> = (0..200).filter(|&k| s.wink_at_tick(k, dt)).collect();
        assert_eq!(hits, vec![88]);
        assert_eq!(tick_of(3.52, dt), 88);
        assert_eq!(tick_of(0.0, dt), 0);
        assert_eq!(s.intended_object(), Some("tv"));
        assert_eq!(s.interactive_onset(), Some(1.0));
        assert_eq!(s.end_time(), 3.5);
    }

    #[test]
    fn no_wink_means_no_intended_object() {
        let s = GazeScript::simple("tv", TaskClass::Interactive, 1.0, None);
        assert!(!s.has_wink());
        assert_eq!(s.intended_object(), None);
        let s = GazeScript::simple("tv", TaskClass::NonInteractive, 1.0, Some(3.0));
        assert_eq!(s.intended_object(), None);
        assert_eq!(s.interactive_onset(), None);
    }
}
