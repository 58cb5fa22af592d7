use rayon::prelude::*;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{ClassifyError, LabeledPoint, ModelSpec, Predictor};
use crate::gaze::TaskClass;
use crate::seed::stream_rng;

/// Cross-validation summary. `confusion[true][predicted]`, indexed by
/// the 0/1 class encoding and summed over folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub seed: u64,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub pooled_accuracy: f64,
    pub confusion: [[u64; 2]; 2],
    pub n: usize,
}

/// Fold id for every point: each class is shuffled with its own seeded
/// stream and dealt round-robin, continuing the deal across classes so
/// fold sizes differ by at most one.
pub fn stratified_folds(labels: &[TaskClass], folds: usize, seed: u64) -> Result<Vec<usize>, ClassifyError> {
    for class in [TaskClass::NonInteractive, TaskClass::Interactive] {
        let count = labels.iter().filter(|&&l| l == class).count();
        if count < folds {
            return Err(ClassifyError::TooFewForFolds { class, count, folds });
        }
    }
    let mut assignment = vec![0; labels.len()];
    let mut dealt = 0;
    for class in [TaskClass::NonInteractive, TaskClass::Interactive] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut stream_rng(seed, &[0xF01D, class as u64]));
        for i in idx {
            assignment[i] = dealt % folds;
            dealt += 1;
        }
    }
    Ok(assignment)
}

/// Stratified k-fold CV of an arbitrary training routine. Folds are
/// trained in parallel; the report does not depend on scheduling.
pub fn cross_validate_with<P, F>(
    data: &[LabeledPoint],
    folds: usize,
    seed: u64,
    fit: F,
) -> Result<CvReport, ClassifyError>
where
    P: Predictor,
    F: Fn(&[LabeledPoint]) -> Result<P, ClassifyError> + Sync,
{
    if folds < 2 {
        return Err(ClassifyError::BadHyperparameter("need at least 2 folds".into()));
    }
    let labels: Vec<TaskClass> = data.iter().map(|p| p.label).collect();
    let assignment = stratified_folds(&labels, folds, seed)?;
    let per_fold: Vec<[[u64; 2]; 2]> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<LabeledPoint> = data
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a != f)
                .map(|(p, _)| *p)
                .collect();
            let model = fit(&train)?;
            let mut cm = [[0u64; 2]; 2];
            for (p, _) in data.iter().zip(&assignment).filter(|(_, &a)| a == f) {
                cm[p.label as usize][model.predict(p.xy()) as usize] += 1;
            }
            Ok(cm)
        })
        .collect::<Result<_, ClassifyError>>()?;

    let fold_accuracies: Vec<f64> = per_fold
        .iter()
        .map(|cm| (cm[0][0] + cm[1][1]) as f64 / cm.iter().flatten().sum::<u64>() as f64)
        .collect();
    let mut confusion = [[0u64; 2]; 2];
    for cm in &per_fold {
        for a in 0..2 {
            for b in 0..2 {
                confusion[a][b] += cm[a][b];
            }
        }
    }
    Ok(CvReport {
        folds,
        seed,
        mean_accuracy: fold_accuracies.iter().sum::<f64>() / folds as f64,
        pooled_accuracy: (confusion[0][0] + confusion[1][1]) as f64 / data.len() as f64,
        fold_accuracies,
        confusion,
        n: data.len(),
    })
}

pub fn cross_validate(data: &[LabeledPoint], spec: &ModelSpec, folds: usize, seed: u64) -> Result<CvReport, ClassifyError> {
    cross_validate_with(data, folds, seed, |train| spec.train(train))
}
