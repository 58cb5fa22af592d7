use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use super::{KnnModel, LabeledPoint, Model, SvmModel};
use crate::FORMAT_VERSION;

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed model file: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("{path}: format_version {found}, expected {expected}")]
    VersionMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("{path}: expected a {expected} model, found {found}")]
    WrongKind {
        path: PathBuf,
        expected: &'static str,
        found: String,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    kind: String,
    object: String,
    params: serde_json::Value,
    payload: serde_json::Value,
    #[serde(default)]
    provenance: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KnnParams {
    k: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KnnPayload {
    points: Vec<LabeledPoint>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SvmParams {
    c: f64,
    kernel_scale: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SvmPayload {
    support_points: Vec<[f64; 2]>,
    alphas: Vec<f64>,
    bias: f64,
}

/// Writes `{format_version, kind, object, params, payload, provenance}`.
pub fn save_model(
    path: &Path,
    object: &str,
    model: &Model,
    provenance: &serde_json::Value,
) -> Result<(), ModelFileError> {
    let (params, payload) = match model {
        Model::Knn(m) => (
            serde_json::to_value(KnnParams { k: m.k }),
            serde_json::to_value(KnnPayload {
                points: m.points.clone(),
            }),
        ),
        Model::Svm(m) => (
            serde_json::to_value(SvmParams {
                c: m.c,
                kernel_scale: m.kernel_scale,
            }),
            serde_json::to_value(SvmPayload {
                support_points: m.support_points.clone(),
                alphas: m.alphas.clone(),
                bias: m.bias,
            }),
        ),
    };
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        kind: model.kind_name().into(),
        object: object.into(),
        params: params.expect("params serialize"),
        payload: payload.expect("payload serializes"),
        provenance: provenance.clone(),
    };
    let text = serde_json::to_string(&file).expect("model file serializes");
    std::fs::write(path, text).map_err(|source| ModelFileError::Io {
        path: path.into(),
        source,
    })
}

fn malformed(path: &Path, e: impl std::fmt::Display) -> ModelFileError {
    ModelFileError::Malformed {
        path: path.into(),
        reason: e.to_string(),
    }
}

fn read_file(path: &Path) -> Result<ModelFile, ModelFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.into(),
        source,
    })?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| malformed(path, e))?;
    if file.format_version != FORMAT_VERSION {
        return Err(ModelFileError::VersionMismatch {
            path: path.into(),
            found: file.format_version,
            expected: FORMAT_VERSION,
        });
    }
    Ok(file)
}

fn decode(path: &Path, file: ModelFile) -> Result<Model, ModelFileError> {
    match file.kind.as_str() {
        "knn" => {
            let p: KnnParams = serde_json::from_value(file.params).map_err(|e| malformed(path, e))?;
            let d: KnnPayload = serde_json::from_value(file.payload).map_err(|e| malformed(path, e))?;
            if p.k == 0 || p.k > d.points.len() {
                return Err(malformed(path, "k out of range for stored points"));
            }
            Ok(Model::Knn(KnnModel { points: d.points, k: p.k }))
        }
        "svm" => {
            let p: SvmParams = serde_json::from_value(file.params).map_err(|e| malformed(path, e))?;
            let d: SvmPayload = serde_json::from_value(file.payload).map_err(|e| malformed(path, e))?;
            if d.support_points.len() != d.alphas.len() || !(p.kernel_scale > 0.0) {
                return Err(malformed(path, "inconsistent SVM payload"));
            }
            Ok(Model::Svm(SvmModel {
                support_points: d.support_points,
                alphas: d.alphas,
                bias: d.bias,
                kernel_scale: p.kernel_scale,
                c: p.c,
            }))
        }
        other => Err(malformed(path, format!("unknown model kind `{other}`"))),
    }
}

/// Loads either kind; returns the object label the model was trained for.
pub fn load_model(path: &Path) -> Result<(String, Model), ModelFileError> {
    let file = read_file(path)?;
    let object = file.object.clone();
    Ok((object, decode(path, file)?))
}

fn load_kind(path: &Path, expected: &'static str) -> Result<Model, ModelFileError> {
    let file = read_file(path)?;
    if file.kind != expected {
        return Err(ModelFileError::WrongKind {
            path: path.into(),
            expected,
            found: file.kind,
        });
    }
    decode(path, file)
}

pub fn load_knn(path: &Path) -> Result<KnnModel, ModelFileError> {
    match load_kind(path, "knn")? {
        Model::Knn(m) => Ok(m),
        Model::Svm(_) => unreachable!("kind checked"),
    }
}

pub fn load_svm(path: &Path) -> Result<SvmModel, ModelFileError> {
    match load_kind(path, "svm")? {
        Model::Svm(m) => Ok(m),
        Model::Knn(_) => unreachable!("kind checked"),
    }
}
