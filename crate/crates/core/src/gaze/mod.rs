//! Gaze handling: image-space samples, per-object box averaging,
//! normalization into the unit square, hit-testing, heatmaps and the
//! synthetic trace generator standing in for recorded subjects.
//!
//! Normalized coordinates run `u` left→right and `v` top→bottom
//! (image convention) everywhere in the crate.

mod bbox;
pub(crate) mod dataset;
mod heatmap;
mod synth;

pub use bbox::{
    denormalize, hit_test, normalize_gaze, update_averaged_box, AveragedBox, BBox2D, GazeSample,
    NormalizedGaze, OutsideBox, DEFAULT_MARGIN_FRAC,
};
pub use dataset::{
    read_dataset, synthesize_dataset, write_dataset, DatasetConfig, DatasetRecord, DEFAULT_OBJECTS,
};
pub use heatmap::{accumulate_heatmap, accumulate_heatmap_raw, heat_color, Heatmap, HEATMAP_KERNEL_SIGMA};
pub use synth::{synthesize_trace, GazeGenParams, GazeGenerator, ObjectGazeParams};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The two intention classes, encoded 0/1 on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TaskClass {
    NonInteractive = 0,
    Interactive = 1,
}

impl TaskClass {
    pub fn from_bool(interactive: bool) -> Self {
        if interactive {
            TaskClass::Interactive
        } else {
            TaskClass::NonInteractive
        }
    }

    pub fn is_interactive(self) -> bool {
        self == TaskClass::Interactive
    }

    /// +1 / -1 encoding used by the SVM.
    pub fn sign(self) -> f64 {
        match self {
            TaskClass::Interactive => 1.0,
            TaskClass::NonInteractive => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        Self::from_bool(!self.is_interactive())
    }
}

impl Serialize for TaskClass {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(*self as u8)
    }
}

impl<'de> Deserialize<'de> for TaskClass {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(TaskClass::NonInteractive),
            1 => Ok(TaskClass::Interactive),
            other => Err(serde::de::Error::custom(format!(
                "task class must be 0 or 1, got {other}"
            ))),
        }
    }
}
