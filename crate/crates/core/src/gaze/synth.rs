use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::{denormalize, BBox2D, GazeSample, NormalizedGaze, TaskClass};
use crate::{Error, Result, TICK_DT};

/// Where interactive gaze concentrates on one object, and how tight it is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectGazeParams {
    pub functional_center: [f64; 2],
    pub sigma_interactive: f64,
    pub spread_noninteractive: f64,
}

impl ObjectGazeParams {
    pub fn new(u: f64, v: f64) -> Self {
        Self {
            functional_center: [u, v],
            sigma_interactive: 0.08,
            spread_noninteractive: 0.30,
        }
    }
}

/// Parameters of the synthetic gaze generator.
///
/// Interactive gaze is an isotropic Gaussian around the object's
/// functional center; non-interactive gaze is a broad Gaussian around
/// the box center. Both are truncated to the unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GazeGenParams {
    pub objects: BTreeMap<String, ObjectGazeParams>,
    pub jitter_px: f64,
    pub samples_per_trial: usize,
}

impl Default for GazeGenParams {
    fn default() -> Self {
        let objects = [
            ("tv", ObjectGazeParams::new(0.50, 0.45)),
            ("laptop", ObjectGazeParams::new(0.50, 0.65)),
            ("chair", ObjectGazeParams::new(0.50, 0.70)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self {
            objects,
            jitter_px: 2.0,
            samples_per_trial: 280,
        }
    }
}

impl GazeGenParams {
    pub fn validate(&self) -> Result<()> {
        for (label, p) in &self.objects {
            let [u, v] = p.functional_center;
            if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!(
                    "functional center of `{label}` must lie in the unit square"
                )));
            }
            if !(p.sigma_interactive >= 0.0 && p.sigma_interactive < p.spread_noninteractive) {
                return Err(Error::InvalidParams(format!(
                    "`{label}`: need 0 <= sigma_interactive < spread_noninteractive"
                )));
            }
        }
        if !(self.jitter_px >= 0.0) {
            return Err(Error::InvalidParams("jitter_px must be non-negative".into()));
        }
        Ok(())
    }

    pub fn object(&self, label: &str) -> Result<&ObjectGazeParams> {
        self.objects
            .get(label)
            .ok_or_else(|| Error::InvalidParams(format!("no gaze parameters for object `{label}`")))
    }
}

/// Draws single gaze samples; [`synthesize_trace`] and the simulator
/// share it so scripted runs and training data come from one model.
#[derive(Debug, Clone)]
pub struct GazeGenerator {
    params: GazeGenParams,
}

impl GazeGenerator {
    pub fn new(params: GazeGenParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &GazeGenParams {
        &self.params
    }

    pub fn normalized<R: Rng>(&self, rng: &mut R, object: &str, cls: TaskClass) -> Result<NormalizedGaze> {
        let p = self.params.object(object)?;
        let (center, sigma) = match cls {
            TaskClass::Interactive => (p.functional_center, p.sigma_interactive),
            TaskClass::NonInteractive => ([0.5, 0.5], p.spread_noninteractive),
        };
        Ok(truncated_gaussian(rng, center, sigma))
    }

    /// A pixel sample for `object` shown at `bbox`, with pixel jitter.
    pub fn pixel<R: Rng>(
        &self,
        rng: &mut R,
        object: &str,
        cls: TaskClass,
        bbox: &BBox2D,
        t: f64,
    ) -> Result<GazeSample> {
        let n = self.normalized(rng, object, cls)?;
        let [x, y] = denormalize(n, bbox);
        let jx: f64 = rng.sample(StandardNormal);
        let jy: f64 = rng.sample(StandardNormal);
        Ok(GazeSample::new(
            t,
            x + self.params.jitter_px * jx,
            y + self.params.jitter_px * jy,
        ))
    }
}

fn truncated_gaussian<R: Rng>(rng: &mut R, center: [f64; 2], sigma: f64) -> NormalizedGaze {
    const MAX_TRIES: usize = 10_000;
    for _ in 0..MAX_TRIES {
        let zu: f64 = rng.sample(StandardNormal);
        let zv: f64 = rng.sample(StandardNormal);
        let (u, v) = (center[0] + sigma * zu, center[1] + sigma * zv);
        if (0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v) {
            return NormalizedGaze::new(u, v);
        }
    }
    NormalizedGaze::new(center[0].clamp(0.0, 1.0), center[1].clamp(0.0, 1.0))
}

/// One trial's worth of gaze at `object`, sampled at the simulation tick.
pub fn synthesize_trace(
    object: &str,
    cls: TaskClass,
    params: &GazeGenParams,
    bbox: &BBox2D,
    seed: u64,
) -> Result<Vec<GazeSample>> {
    let generator = GazeGenerator::new(params.clone())?;
    let mut rng = crate::seed::stream_rng(seed, &[crate::seed::label_id(object), cls as u64]);
    (0..params.samples_per_trial)
        .map(|k| generator.pixel(&mut rng, object, cls, bbox, k as f64 * TICK_DT))
        .collect()
}
