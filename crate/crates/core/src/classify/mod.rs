//! Object-specific binary intention classifiers over the unit square:
//! inverse-squared-distance weighted KNN and a Gaussian-kernel soft-margin
//! SVM trained by SMO, plus stratified k-fold cross-validation and JSON
//! model persistence.
//!
//! Ties and boundary cases always resolve to
//! [`TaskClass::NonInteractive`], the safe side for a mobility device.

mod cv;
mod knn;
mod model_file;
mod svm;

pub use cv::{cross_validate, cross_validate_with, stratified_folds, CvReport};
pub use knn::{predict_knn, train_knn, KnnModel, DEFAULT_K};
pub use model_file::{load_knn, load_model, load_svm, save_model, ModelFileError};
pub use svm::{
    gaussian_kernel, predict_svm, train_svm, train_svm_with, SmoConfig, SvmModel, DEFAULT_C,
    DEFAULT_KERNEL_SCALE, DEFAULT_TOL,
};

use serde::{Deserialize, Serialize};

use crate::gaze::{DatasetRecord, TaskClass};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("training data is empty")]
    EmptyData,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("k = {k} exceeds the {n} training points")]
    KTooLarge { k: usize, n: usize },
    #[error("k must be at least 1")]
    KZero,
    #[error("invalid hyperparameter: {0}")]
    BadHyperparameter(String),
    #[error("SMO did not converge after {iterations} iterations (KKT gap {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("class `{class:?}` has {count} points, fewer than {folds} folds")]
    TooFewForFolds {
        class: TaskClass,
        count: usize,
        folds: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub u: f64,
    pub v: f64,
    pub label: TaskClass,
}

impl LabeledPoint {
    pub fn new(u: f64, v: f64, label: TaskClass) -> Self {
        Self { u, v, label }
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.u, self.v]
    }
}

impl From<&DatasetRecord> for LabeledPoint {
    fn from(r: &DatasetRecord) -> Self {
        LabeledPoint::new(r.u, r.v, r.label)
    }
}

pub(crate) fn check_two_classes(data: &[LabeledPoint]) -> Result<(), ClassifyError> {
    let first = data.first().ok_or(ClassifyError::EmptyData)?.label;
    if data.iter().all(|p| p.label == first) {
        return Err(ClassifyError::SingleClass);
    }
    Ok(())
}

/// Which classifier family to train, with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Knn { k: usize },
    Svm { c: f64, kernel_scale: f64, tol: f64 },
}

impl ModelSpec {
    pub fn default_knn() -> Self {
        ModelSpec::Knn { k: DEFAULT_K }
    }

    pub fn default_svm() -> Self {
        ModelSpec::Svm {
            c: DEFAULT_C,
            kernel_scale: DEFAULT_KERNEL_SCALE,
            tol: DEFAULT_TOL,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelSpec::Knn { .. } => "knn",
            ModelSpec::Svm { .. } => "svm",
        }
    }

    pub fn train(&self, data: &[LabeledPoint]) -> Result<Model, ClassifyError> {
        Ok(match *self {
            ModelSpec::Knn { k } => Model::Knn(train_knn(data, k)?),
            ModelSpec::Svm { c, kernel_scale, tol } => Model::Svm(train_svm(data, c, kernel_scale, tol)?),
        })
    }
}

/// A trained per-object classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Knn(KnnModel),
    Svm(SvmModel),
}

impl Model {
    pub fn predict(&self, q: [f64; 2]) -> TaskClass {
        match self {
            Model::Knn(m) => predict_knn(m, q).0,
            Model::Svm(m) => predict_svm(m, q).0,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Model::Knn(_) => "knn",
            Model::Svm(_) => "svm",
        }
    }
}

/// Anything that labels a point in the unit square.
pub trait Predictor {
    fn predict(&self, q: [f64; 2]) -> TaskClass;
}

impl Predictor for Model {
    fn predict(&self, q: [f64; 2]) -> TaskClass {
        Model::predict(self, q)
    }
}

impl<F: Fn([f64; 2]) -> TaskClass> Predictor for F {
    fn predict(&self, q: [f64; 2]) -> TaskClass {
        self(q)
    }
}
