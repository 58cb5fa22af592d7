use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::batch::Stat;
use crate::classify::Model;
use crate::gaze::dataset::{jitter_box, nominal_box};
use crate::gaze::{normalize_gaze, AveragedBox, DatasetConfig, GazeGenParams, GazeGenerator, TaskClass};
use crate::intent::IntentBuffer;
use crate::seed::{label_id, stream_rng};
use crate::{Error, Result, TICK_DT};

/// Frames a trial may take to fill the buffer before it is scored as is.
const MAX_FRAMES_PER_SLOT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectAccuracy {
    pub interactive: Stat,
    pub non_interactive: Stat,
    pub overall: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentAccuracyReport {
    pub n_trials: usize,
    pub seed: u64,
    pub buffer_capacity: usize,
    pub objects: BTreeMap<String, ObjectAccuracy>,
}

/// Runs the per-frame pipeline (box averaging, normalization, classifier,
/// ring-buffer vote) on fresh synthetic trials; a trial is correct when
/// the vote on the first full buffer equals the trial's class.
pub fn intent_accuracy_eval(
    models: &BTreeMap<String, Model>,
    params: &GazeGenParams,
    data_cfg: &DatasetConfig,
    buffer_capacity: usize,
    n_trials: usize,
    seed: u64,
) -> Result<IntentAccuracyReport> {
    if n_trials == 0 || buffer_capacity == 0 {
        return Err(Error::InvalidParams("n_trials and buffer_capacity must be positive".into()));
    }
    let generator = GazeGenerator::new(params.clone())?;
    let mut objects = BTreeMap::new();
    for (object, model) in models {
        let mut per_class = [Vec::new(), Vec::new()];
        for cls in [TaskClass::NonInteractive, TaskClass::Interactive] {
            for trial in 0..n_trials {
                let mut rng = stream_rng(seed, &[label_id(object), cls as u64, trial as u64]);
                let trial_box = jitter_box(&mut rng, &nominal_box(object), data_cfg.box_jitter_px);
                let mut avg: Option<AveragedBox> = None;
                let mut buffer = IntentBuffer::new(buffer_capacity);
                for k in 0..buffer_capacity * MAX_FRAMES_PER_SLOT {
                    if buffer.is_full() {
                        break;
                    }
                    let frame_box = jitter_box(&mut rng, &trial_box, data_cfg.frame_noise_px);
                    let avg = match avg.as_mut() {
                        Some(a) => {
                            a.update(frame_box);
                            a
                        }
                        None => avg.insert(AveragedBox::new(object.clone(), frame_box)),
                    };
                    let s = generator.pixel(&mut rng, object, cls, &frame_box, k as f64 * TICK_DT)?;
                    let pred = normalize_gaze(&s, avg, data_cfg.margin_frac)
                        .ok()
                        .map(|n| model.predict([n.u, n.v]));
                    buffer.push_frame(Some(object), pred);
                }
                per_class[cls as usize].push(if buffer.vote() == cls { 1.0 } else { 0.0 });
            }
        }
        let all: Vec<f64> = per_class.concat();
        objects.insert(
            object.clone(),
            ObjectAccuracy {
                non_interactive: Stat::of(&per_class[0]),
                interactive: Stat::of(&per_class[1]),
                overall: Stat::of(&all),
            },
        );
    }
    Ok(IntentAccuracyReport {
        n_trials,
        seed,
        buffer_capacity,
        objects,
    })
}
