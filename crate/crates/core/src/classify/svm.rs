use serde::{Deserialize, Serialize};

use super::{check_two_classes, ClassifyError, LabeledPoint};
use crate::gaze::TaskClass;

/// "Fine" Gaussian preset: kernel scale √P/4 with P = 2 features.
pub const DEFAULT_KERNEL_SCALE: f64 = std::f64::consts::SQRT_2 / 4.0;
pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-3;

/// Curvature floor for non-positive-definite pairs.
const TAU: f64 = 1e-12;

/// `exp(−‖a−b‖² / (2s²))`
pub fn gaussian_kernel(a: [f64; 2], b: [f64; 2], scale: f64) -> f64 {
    let (du, dv) = (a[0] - b[0], a[1] - b[1]);
    (-(du * du + dv * dv) / (2.0 * scale * scale)).exp()
}

/// Trained decision function `f(x) = Σ αᵢ·K(x, xᵢ) + bias` with signed
/// weights `αᵢ = yᵢ·λᵢ`, `0 < λᵢ ≤ C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_points: Vec<[f64; 2]>,
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub kernel_scale: f64,
    pub c: f64,
}

impl SvmModel {
    pub fn decision(&self, q: [f64; 2]) -> f64 {
        self.support_points
            .iter()
            .zip(&self.alphas)
            .map(|(&x, &a)| a * gaussian_kernel(q, x, self.kernel_scale))
            .sum::<f64>()
            + self.bias
    }
}

/// `Interactive` iff `f(q) > 0`; the margin is `f(q)`.
pub fn predict_svm(model: &SvmModel, q: [f64; 2]) -> (TaskClass, f64) {
    let f = model.decision(q);
    (TaskClass::from_bool(f > 0.0), f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoConfig {
    pub c: f64,
    pub kernel_scale: f64,
    /// Stop when the maximal KKT violating pair gap drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SmoConfig {
    fn default() -> Self {
        Self {
            c: DEFAULT_C,
            kernel_scale: DEFAULT_KERNEL_SCALE,
            tol: DEFAULT_TOL,
            max_iter: 100_000,
        }
    }
}

/// Full solver output, including the dual variables of every point.
#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub model: SvmModel,
    /// Unsigned dual variables, one per training point.
    pub lambda: Vec<f64>,
    pub iterations: usize,
    pub kkt_gap: f64,
}

impl SmoSolution {
    /// `Σλ − ½ ΣΣ λᵢλⱼ yᵢyⱼ K(xᵢ, xⱼ)`
    pub fn dual_objective(&self, data: &[LabeledPoint]) -> f64 {
        dual_objective(data, &self.lambda, self.model.kernel_scale)
    }
}

pub fn dual_objective(data: &[LabeledPoint], lambda: &[f64], scale: f64) -> f64 {
    let mut quad = 0.0;
    for (i, pi) in data.iter().enumerate() {
        if lambda[i] == 0.0 {
            continue;
        }
        for (j, pj) in data.iter().enumerate() {
            quad += lambda[i] * lambda[j] * pi.label.sign() * pj.label.sign()
                * gaussian_kernel(pi.xy(), pj.xy(), scale);
        }
    }
    lambda.iter().sum::<f64>() - 0.5 * quad
}

pub fn train_svm(data: &[LabeledPoint], c: f64, kernel_scale: f64, tol: f64) -> Result<SvmModel, ClassifyError> {
    let cfg = SmoConfig {
        c,
        kernel_scale,
        tol,
        ..SmoConfig::default()
    };
    train_svm_with(data, &cfg).map(|s| s.model)
}

/// Lazily filled rows of the signed kernel matrix `Qᵢⱼ = yᵢyⱼK(xᵢ, xⱼ)`.
struct QMatrix<'a> {
    data: &'a [LabeledPoint],
    y: Vec<f64>,
    scale: f64,
    rows: Vec<Option<Box<[f64]>>>,
}

impl<'a> QMatrix<'a> {
    fn new(data: &'a [LabeledPoint], scale: f64) -> Self {
        Self {
            data,
            y: data.iter().map(|p| p.label.sign()).collect(),
            scale,
            rows: vec![None; data.len()],
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        if self.rows[i].is_none() {
            let xi = self.data[i].xy();
            let yi = self.y[i];
            let row: Box<[f64]> = self
                .data
                .iter()
                .zip(&self.y)
                .map(|(p, &yj)| yi * yj * gaussian_kernel(xi, p.xy(), self.scale))
                .collect();
            self.rows[i] = Some(row);
        }
        self.rows[i].as_deref().expect("row just filled")
    }
}

/// Sequential minimal optimization with second-order working-set
/// selection on the soft-margin dual.
pub fn train_svm_with(data: &[LabeledPoint], cfg: &SmoConfig) -> Result<SmoSolution, ClassifyError> {
    check_two_classes(data)?;
    for (name, v) in [("C", cfg.c), ("kernel scale", cfg.kernel_scale), ("tol", cfg.tol)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(ClassifyError::BadHyperparameter(format!("{name} must be positive, got {v}")));
        }
    }
    let n = data.len();
    let c = cfg.c;
    let mut q = QMatrix::new(data, cfg.kernel_scale);
    let y = q.y.clone();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    // K(x, x) = 1 for the Gaussian kernel.
    let qd = 1.0;

    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let gap = loop {
        // i: maximal violator in I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i_sel = t;
            }
        }
        // j: best second-order gain in I_low.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_gain = f64::INFINITY;
        if i_sel != usize::MAX {
            let qi = q.row(i_sel);
            for t in 0..n {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                gmax2 = gmax2.max(y[t] * grad[t]);
                let b = gmax + y[t] * grad[t];
                if b > 0.0 {
                    let a = qd + qd - 2.0 * y[i_sel] * qi[t] * y[t];
                    let gain = -(b * b) / if a > 0.0 { a } else { TAU };
                    if gain < best_gain {
                        best_gain = gain;
                        j_sel = t;
                    }
                }
            }
        }
        let gap = gmax + gmax2;
        if gap < cfg.tol || j_sel == usize::MAX {
            break gap.max(0.0);
        }
        if iterations >= cfg.max_iter {
            return Err(ClassifyError::NotConverged {
                iterations,
                residual: gap,
            });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let qij = q.row(i)[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (qd + qd + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qd + qd - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        // Rows are cloned out to release the borrow on the cache.
        let qi = q.row(i).to_vec();
        let qj = q.row(j);
        for t in 0..n {
            grad[t] += qi[t] * di + qj[t] * dj;
        }
    };

    // Bias: average over free vectors, else midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if (at_upper && y[t] < 0.0) || (at_lower && y[t] > 0.0) {
            ub = ub.min(yg);
        } else if at_upper || at_lower {
            lb = lb.max(yg);
        } else {
            sum_free += yg;
            n_free += 1;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        0.5 * (ub + lb)
    };

    let mut support_points = Vec::new();
    let mut alphas = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_points.push(data[t].xy());
            alphas.push(alpha[t] * y[t]);
        }
    }
    Ok(SmoSolution {
        model: SvmModel {
            support_points,
            alphas,
            bias: -rho,
            kernel_scale: cfg.kernel_scale,
            c,
        },
        lambda: alpha,
        iterations,
        kkt_gap: gap,
    })
}
