use serde::{Deserialize, Serialize};

use super::{check_two_classes, ClassifyError, LabeledPoint};
use crate::gaze::TaskClass;

pub const DEFAULT_K: usize = 10;

/// Lazy weighted-KNN learner: stores the training set verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub points: Vec<LabeledPoint>,
    pub k: usize,
}

pub fn train_knn(data: &[LabeledPoint], k: usize) -> Result<KnnModel, ClassifyError> {
    if k == 0 {
        return Err(ClassifyError::KZero);
    }
    check_two_classes(data)?;
    if k > data.len() {
        return Err(ClassifyError::KTooLarge { k, n: data.len() });
    }
    Ok(KnnModel {
        points: data.to_vec(),
        k,
    })
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (du, dv) = (a[0] - b[0], a[1] - b[1]);
    du * du + dv * dv
}

/// Label and confidence (winning weight share) for a query point.
///
/// Neighbors are the `k` smallest `(distance, training index)` pairs;
/// each votes with weight `1/d²`. A neighbor at distance zero decides
/// the vote by itself.
pub fn predict_knn(model: &KnnModel, q: [f64; 2]) -> (TaskClass, f64) {
    let mut nd: Vec<(f64, usize)> = model
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| (dist2(p.xy(), q), i))
        .collect();
    let k = model.k.min(nd.len());
    let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < nd.len() {
        nd.select_nth_unstable_by(k - 1, by_key);
        nd.truncate(k);
    }
    nd.sort_unstable_by(by_key);

    let exact: Vec<TaskClass> = nd
        .iter()
        .take_while(|(d2, _)| *d2 == 0.0)
        .map(|&(_, i)| model.points[i].label)
        .collect();
    let (w_int, w_non) = if exact.is_empty() {
        nd.iter().fold((0.0, 0.0), |(wi, wn), &(d2, i)| {
            let w = 1.0 / d2;
            match model.points[i].label {
                TaskClass::Interactive => (wi + w, wn),
                TaskClass::NonInteractive => (wi, wn + w),
            }
        })
    } else {
        let wi = exact.iter().filter(|c| c.is_interactive()).count() as f64;
        (wi, exact.len() as f64 - wi)
    };
    let total = w_int + w_non;
    if w_int > w_non {
        (TaskClass::Interactive, w_int / total)
    } else {
        (TaskClass::NonInteractive, if total > 0.0 { w_non / total } else { 0.5 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use TaskClass::*;

    fn random_points(seed: u64, n: usize) -> Vec<LabeledPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let (u, v): (f64, f64) = (rng.random(), rng.random());
                let noisy = rng.random_bool(0.2);
                LabeledPoint::new(u, v, TaskClass::from_bool((u + v > 1.0) ^ noisy))
            })
            .collect()
    }

    #[test]
    fn training_point_with_k1_returns_its_label() {
        let data = random_points(1, 100);
        let m = train_knn(&data, 1).unwrap();
        for p in &data {
            assert_eq!(predict_knn(&m, p.xy()), (p.label, 1.0));
        }
    }

    #[test]
    fn midpoint_tie_is_noninteractive() {
        let data = [
            LabeledPoint::new(0.25, 0.5, Interactive),
            LabeledPoint::new(0.75, 0.5, NonInteractive),
        ];
        let m = train_knn(&data, 2).unwrap();
        assert_eq!(predict_knn(&m, [0.5, 0.5]), (NonInteractive, 0.5));
    }

    #[test]
    fn symmetric_square_is_a_tie() {
        let data = [
            LabeledPoint::new(0.4, 0.4, Interactive),
            LabeledPoint::new(0.6, 0.6, Interactive),
            LabeledPoint::new(0.4, 0.6, NonInteractive),
            LabeledPoint::new(0.6, 0.4, NonInteractive),
        ];
        let m = train_knn(&data, 4).unwrap();
        let (c, s) = predict_knn(&m, [0.5, 0.5]);
        assert_eq!(c, NonInteractive);
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_distance_wins_outright() {
        let mut data = vec![LabeledPoint::new(0.5, 0.5, Interactive)];
        for k in 0..9 {
            data.push(LabeledPoint::new(0.5 + 0.001 * (k + 1) as f64, 0.5, NonInteractive));
        }
        let m = train_knn(&data, 10).unwrap();
        assert_eq!(predict_knn(&m, [0.5, 0.5]), (Interactive, 1.0));
    }

    #[test]
    fn rejects_bad_training_sets() {
        let data = random_points(2, 5);
        assert_eq!(train_knn(&data, 6), Err(ClassifyError::KTooLarge { k: 6, n: 5 }));
        assert_eq!(train_knn(&data, 0), Err(ClassifyError::KZero));
        let one = vec![LabeledPoint::new(0.1, 0.1, Interactive); 4];
        assert_eq!(train_knn(&one, 1), Err(ClassifyError::SingleClass));
        assert_eq!(train_knn(&[], 1), Err(ClassifyError::EmptyData));
    }

    proptest! {
        #[test]
        fn permutation_invariant(seed in 0u64..200, shift in 0usize..200, qu in 0.0..1.0f64, qv in 0.0..1.0f64) {
            let data = random_points(seed, 200);
            let mut rotated = data.clone();
            rotated.rotate_left(shift);
            rotated.reverse();
            let a = predict_knn(&train_knn(&data, 10).unwrap(), [qu, qv]).0;
            let b = predict_knn(&train_knn(&rotated, 10).unwrap(), [qu, qv]).0;
            prop_assert_eq!(a, b);
        }

        #[test]
        fn scale_invariant_label(seed in 0u64..200, e in -4i32..5, qu in 0.0..1.0f64, qv in 0.0..1.0f64) {
            // Powers of two scale exactly, so distance ranks are preserved bit-for-bit.
            let f = 2f64.powi(e);
            let data = random_points(seed, 150);
            let scaled: Vec<_> = data.iter().map(|p| LabeledPoint::new(p.u * f, p.v * f, p.label)).collect();
            let a = predict_knn(&train_knn(&data, 10).unwrap(), [qu, qv]).0;
            let b = predict_knn(&train_knn(&scaled, 10).unwrap(), [qu * f, qv * f]).0;
            prop_assert_eq!(a, b);
        }
    }
}
