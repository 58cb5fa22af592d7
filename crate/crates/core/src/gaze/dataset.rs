use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{normalize_gaze, AveragedBox, BBox2D, GazeGenParams, GazeGenerator, GazeSample, TaskClass};
use crate::seed::{label_id, stream_rng};
use crate::{Error, Result, FORMAT_VERSION, TICK_DT};

pub const DEFAULT_OBJECTS: [&str; 3] = ["tv", "laptop", "chair"];

/// One normalized gaze point of the training corpus (one JSONL line).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub object: String,
    pub u: f64,
    pub v: f64,
    pub label: TaskClass,
    pub subject: u32,
    pub trial: u32,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub objects: Vec<String>,
    pub subjects: u32,
    pub trials_per_subject: u32,
    /// Per-trial shift of each box edge (head movement, viewpoint).
    pub box_jitter_px: f64,
    /// Per-frame detector noise on each box edge.
    pub frame_noise_px: f64,
    pub margin_frac: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            objects: DEFAULT_OBJECTS.iter().map(|s| s.to_string()).collect(),
            subjects: 1,
            trials_per_subject: 13,
            box_jitter_px: 8.0,
            frame_noise_px: 2.0,
            margin_frac: super::DEFAULT_MARGIN_FRAC,
        }
    }
}

pub(crate) fn nominal_box(label: &str) -> BBox2D {
    match label {
        "tv" => BBox2D::new(440.0, 260.0, 840.0, 500.0),
        "laptop" => BBox2D::new(520.0, 420.0, 760.0, 580.0),
        "chair" => BBox2D::new(500.0, 380.0, 780.0, 760.0),
        _ => BBox2D::new(480.0, 330.0, 800.0, 630.0),
    }
}

pub(crate) fn jitter_box<R: Rng>(rng: &mut R, b: &BBox2D, amp: f64) -> BBox2D {
    if amp <= 0.0 {
        return *b;
    }
    let mut d = || rng.random_range(-amp..=amp);
    let (x0, y0, x1, y1) = (b.x_min + d(), b.y_min + d(), b.x_max + d(), b.y_max + d());
    BBox2D::new(x0.min(x1), y0.min(y1), x0.max(x1), y0.max(y1))
}

/// Generates a labeled corpus: per object, alternating non-interactive /
/// interactive trials watched through a jittering box, normalized within
/// the object's averaged box. Samples outside it are dropped.
pub fn synthesize_dataset(
    config: &DatasetConfig,
    params: &GazeGenParams,
    seed: u64,
) -> Result<Vec<DatasetRecord>> {
    let generator = GazeGenerator::new(params.clone())?;
    let mut out = Vec::new();
    for object in &config.objects {
        let nominal = nominal_box(object);
        let mut avg: Option<AveragedBox> = None;
        let mut raw: Vec<(u32, u32, TaskClass, GazeSample)> = Vec::new();
        for subject in 0..config.subjects {
            for trial in 0..config.trials_per_subject {
                let cls = TaskClass::from_bool(trial % 2 == 1);
                let mut rng = stream_rng(seed, &[label_id(object), subject as u64, trial as u64]);
                let trial_box = jitter_box(&mut rng, &nominal, config.box_jitter_px);
                for k in 0..params.samples_per_trial {
                    let frame_box = jitter_box(&mut rng, &trial_box, config.frame_noise_px);
                    match avg.as_mut() {
                        Some(a) => a.update(frame_box),
                        None => avg = Some(AveragedBox::new(object.clone(), frame_box)),
                    }
                    let s = generator.pixel(&mut rng, object, cls, &frame_box, k as f64 * TICK_DT)?;
                    raw.push((subject, trial, cls, s));
                }
            }
        }
        let Some(avg) = avg else { continue };
        for (subject, trial, label, s) in raw {
            if let Ok(n) = normalize_gaze(&s, &avg, config.margin_frac) {
                out.push(DatasetRecord {
                    object: object.clone(),
                    u: n.u,
                    v: n.v,
                    label,
                    subject,
                    trial,
                    t: s.t,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct Header<'a> {
    format_version: u32,
    artifact: &'static str,
    flags: &'a serde_json::Value,
}

/// Writes the JSONL corpus preceded by a provenance header line.
pub fn write_dataset(path: &Path, records: &[DatasetRecord], flags: &serde_json::Value) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = Header {
        format_version: FORMAT_VERSION,
        artifact: "gaze-dataset",
        flags,
    };
    let mut write_line = |v: String| writeln!(w, "{v}").map_err(|e| Error::io(path, e));
    write_line(serde_json::to_string(&header).expect("header serializes"))?;
    for r in records {
        write_line(serde_json::to_string(r).expect("record serializes"))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a JSONL corpus, skipping the header line if present.
pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| Error::json(path, e))?;
        if value.get("format_version").is_some() {
            let v = value["format_version"].as_u64();
            if v != Some(FORMAT_VERSION as u64) {
                return Err(Error::InvalidParams(format!(
                    "{}: unsupported dataset format_version {v:?}",
                    path.display()
                )));
            }
            continue;
        }
        let rec: DatasetRecord = serde_json::from_value(value).map_err(|e| {
            Error::InvalidParams(format!("{} line {}: {e}", path.display(), n + 1))
        })?;
        if !(0.0..=1.0).contains(&rec.u) || !(0.0..=1.0).contains(&rec.v) {
            return Err(Error::InvalidParams(format!(
                "{} line {}: u/v outside the unit square",
                path.display(),
                n + 1
            )));
        }
        out.push(rec);
    }
    Ok(out)
}
