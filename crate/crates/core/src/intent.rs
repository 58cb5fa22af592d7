//! Temporal intention decoding: a ring buffer of per-frame classes with
//! a winner-take-all vote, and the wink-gated decoder state machine that
//! turns a sustained interactive vote into a navigation goal.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::gaze::TaskClass;

pub const DEFAULT_BUFFER_CAPACITY: usize = 40;
pub const DEFAULT_WINK_WINDOW: f64 = 2.0;

/// Fixed-capacity ring of frame classes, all about `current_object`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntentBuffer {
    capacity: usize,
    entries: VecDeque<TaskClass>,
    current_object: Option<String>,
}

impl Default for IntentBuffer {
    fn default() -> Self {
        Self::new(DEFAULT_BUFFER_CAPACITY)
    }
}

impl IntentBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "buffer capacity must be at least 1");
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
            current_object: None,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    pub fn current_object(&self) -> Option<&str> {
        self.current_object.as_deref()
    }

    pub fn entries(&self) -> impl Iterator<Item = TaskClass> + '_ {
        self.entries.iter().copied()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.current_object = None;
    }

    /// Adds one frame. Looking at a different object (or at nothing)
    /// restarts the buffer. A frame on the current object without a class
    /// (gaze outside the averaged box) leaves the buffer unchanged.
    pub fn push_frame(&mut self, object: Option<&str>, cls: Option<TaskClass>) {
        if object != self.current_object.as_deref() {
            self.entries.clear();
            self.current_object = object.map(str::to_owned);
        }
        if self.current_object.is_none() {
            return;
        }
        if let Some(c) = cls {
            if self.entries.len() == self.capacity {
                self.entries.pop_front();
            }
            self.entries.push_back(c);
        }
    }

    pub fn interactive_count(&self) -> usize {
        self.entries.iter().filter(|c| c.is_interactive()).count()
    }

    /// Interactive only on a full buffer with a strict interactive majority.
    pub fn vote(&self) -> TaskClass {
        let interactive = self.interactive_count();
        let non = self.entries.len() - interactive;
        TaskClass::from_bool(self.is_full() && interactive > non)
    }
}

/// Display color of the gaze marker for a vote.
pub fn intent_color(vote: TaskClass) -> &'static str {
    match vote {
        TaskClass::NonInteractive => "green",
        TaskClass::Interactive => "purple",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum DecoderState {
    Idle,
    Observing { object: String },
    IntentDetected { object: String, since: f64 },
    GoalDispatched { object: String },
}

impl DecoderState {
    pub fn name(&self) -> &'static str {
        match self {
            DecoderState::Idle => "idle",
            DecoderState::Observing { .. } => "observing",
            DecoderState::IntentDetected { .. } => "intent_detected",
            DecoderState::GoalDispatched { .. } => "goal_dispatched",
        }
    }

    pub fn object(&self) -> Option<&str> {
        match self {
            DecoderState::Idle => None,
            DecoderState::Observing { object }
            | DecoderState::IntentDetected { object, .. }
            | DecoderState::GoalDispatched { object } => Some(object),
        }
    }
}

/// Goal handed to navigation once the user confirms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalDispatch {
    pub object: String,
    pub goal_point: [f64; 2],
    pub t: f64,
}

/// One decoder transition. `object` is the buffer's object this tick.
/// Returns the new state and, when a goal is confirmed, its object.
///
/// A goal is emitted only from `IntentDetected` on the same object, with
/// an interactive vote and a wink no later than `wink_window` after the
/// intention was announced. A wink in any other situation is ignored.
/// After an expired window the decoder falls back to `Observing` and
/// re-announces on the next interactive tick. `IntentDetected` is only
/// entered from `Observing` the same object.
pub fn decoder_step(
    state: &DecoderState,
    vote: TaskClass,
    object: Option<&str>,
    wink: bool,
    t: f64,
    wink_window: f64,
) -> (DecoderState, Option<String>) {
    let observe = |o: Option<&str>| match o {
        Some(o) => DecoderState::Observing { object: o.to_owned() },
        None => DecoderState::Idle,
    };
    match state {
        DecoderState::Idle => (observe(object), None),
        DecoderState::Observing { object: cur } => {
            if object == Some(cur.as_str()) && vote.is_interactive() {
                let next = DecoderState::IntentDetected {
                    object: cur.clone(),
                    since: t,
                };
                (next, None)
            } else {
                (observe(object), None)
            }
        }
        DecoderState::IntentDetected { object: cur, since } => {
            if object != Some(cur.as_str()) {
                return (observe(object), None);
            }
            let in_window = t - since <= wink_window;
            if !vote.is_interactive() || !in_window {
                return (observe(object), None);
            }
            if wink {
                (DecoderState::GoalDispatched { object: cur.clone() }, Some(cur.clone()))
            } else {
                (state.clone(), None)
            }
        }
        DecoderState::GoalDispatched { object: cur } => {
            if object == Some(cur.as_str()) {
                (state.clone(), None)
            } else {
                (observe(object), None)
            }
        }
    }
}
