//! ε-insensitive support vector regression with an RBF kernel.
//!
//! The dual problem is solved by pairwise (SMO-style) coordinate optimization
//! on the 2n box-constrained variables with the single equality constraint,
//! selecting the maximal violating pair each step and stopping when the KKT
//! gap falls below the tolerance. Features are standardized internally from
//! the training split (trees are scale-invariant, SVR is not), and the kernel
//! bandwidth uses the scale convention `γ = 1/(p · Var(X))`.

use serde::{Deserialize, Serialize};

use super::{check_targets, FeatureMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrConfig {
    pub cost: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: u64,
}

impl Default for SvrConfig {
    fn default() -> Self {
        SvrConfig {
            cost: 1.0,
            epsilon: 0.1,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

/// Column-wise standardization fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Standardizer {
    fn fit(x: &FeatureMatrix) -> Self {
        let (n, p) = (x.n_rows(), x.n_cols());
        let mut means = vec![0.0; p];
        for i in 0..n {
            for (j, m) in means.iter_mut().enumerate() {
                *m += x.value(i, j);
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);
        let mut stds = vec![0.0; p];
        for i in 0..n {
            for j in 0..p {
                let d = x.value(i, j) - means[j];
                stds[j] += d * d;
            }
        }
        for s in stds.iter_mut() {
            *s = (*s / n as f64).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Standardizer { means, stds }
    }

    fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    column_names: Vec<String>,
    scaler: Standardizer,
    gamma: f64,
    epsilon: f64,
    cost: f64,
    support_rows: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
    bias: f64,
    dual_objective: f64,
    iterations: u64,
}

impl SvrModel {
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        x.check_schema(&self.column_names)?;
        Ok((0..x.n_rows())
            .map(|i| {
                let row = self.scaler.transform_row(x.row(i));
                let mut f = self.bias;
                for (sv, &coef) in self.support_rows.iter().zip(&self.coefficients) {
                    f += coef * rbf(self.gamma, sv, &row);
                }
                f
            })
            .collect())
    }

    pub fn support_count(&self) -> usize {
        self.support_rows.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Final value of the minimized dual objective.
    pub fn dual_objective(&self) -> f64 {
        self.dual_objective
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// Standardize one raw feature row with the training-split statistics.
    pub fn standardize_row(&self, row: &[f64]) -> Vec<f64> {
        self.scaler.transform_row(row)
    }
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Raw SMO output over the 2n dual variables.
struct DualSolution {
    theta: Vec<f64>,
    bias: f64,
    objective: f64,
    iterations: u64,
}

/// Solve min ½αᵀQα + pᵀα, 0 ≤ α ≤ C, zᵀα = 0, where for i < n the variable
/// is the "+" multiplier of sample i (z = +1) and for i ≥ n the "−"
/// multiplier of sample i−n (z = −1); Q(i,j) = z_i z_j K(s_i, s_j).
fn smo_solve(kernel: &[Vec<f64>], y: &[f64], cfg: &SvrConfig) -> Result<DualSolution> {
    let n = y.len();
    let m2 = 2 * n;
    let c = cfg.cost;
    let z = |i: usize| -> f64 { if i < n { 1.0 } else { -1.0 } };
    let s = |i: usize| -> usize { if i < n { i } else { i - n } };

    let mut alpha = vec![0.0f64; m2];
    let mut grad: Vec<f64> = (0..m2)
        .map(|i| {
            if i < n {
                cfg.epsilon - y[i]
            } else {
                cfg.epsilon + y[i - n]
            }
        })
        .collect();

    let select = |alpha: &[f64], grad: &[f64]| -> (usize, f64, usize, f64) {
        let mut up_idx = usize::MAX;
        let mut up_val = f64::NEG_INFINITY;
        let mut low_idx = usize::MAX;
        let mut low_val = f64::INFINITY;
        for i in 0..m2 {
            let zi = z(i);
            let v = -zi * grad[i];
            let in_up = (zi > 0.0 && alpha[i] < c) || (zi < 0.0 && alpha[i] > 0.0);
            let in_low = (zi > 0.0 && alpha[i] > 0.0) || (zi < 0.0 && alpha[i] < c);
            if in_up && v > up_val {
                up_val = v;
                up_idx = i;
            }
            if in_low && v < low_val {
                low_val = v;
                low_idx = i;
            }
        }
        (up_idx, up_val, low_idx, low_val)
    };

    const TAU: f64 = 1e-12;
    let mut iterations = 0u64;
    let (final_up, final_low) = loop {
        let (i, up_val, j, low_val) = select(&alpha, &grad);
        if up_val - low_val <= cfg.tol || i == usize::MAX || j == usize::MAX {
            break (up_val, low_val);
        }
        if iterations >= cfg.max_iter {
            return Err(Error::NonConvergence(format!(
                "SMO hit the {} iteration cap on {n} samples with KKT gap {:.3e} (tol {:.1e})",
                cfg.max_iter,
                up_val - low_val,
                cfg.tol
            )));
        }
        iterations += 1;

        let (zi, zj) = (z(i), z(j));
        let (si, sj) = (s(i), s(j));
        let qii = kernel[si][si];
        let qjj = kernel[sj][sj];
        let qij = zi * zj * kernel[si][sj];
        let old_i = alpha[i];
        let old_j = alpha[j];

        if zi != zj {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
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
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
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

        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        if di != 0.0 || dj != 0.0 {
            for t in 0..m2 {
                let zt = z(t);
                let st = s(t);
                grad[t] += zt * zi * kernel[st][si] * di + zt * zj * kernel[st][sj] * dj;
            }
        }
    };

    // KKT multiplier: for free variables −z·∇ equals the shared bias
    let bias = (final_up + final_low) / 2.0;

    let theta: Vec<f64> = (0..n).map(|i| alpha[i] - alpha[i + n]).collect();
    let mut objective = 0.0;
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += kernel[i][j] * theta[j];
        }
        objective += 0.5 * theta[i] * acc - y[i] * theta[i];
    }
    objective += cfg.epsilon * alpha.iter().sum::<f64>();

    Ok(DualSolution {
        theta,
        bias,
        objective,
        iterations,
    })
}

pub fn fit_svr(x: &FeatureMatrix, y: &[f64], cfg: &SvrConfig) -> Result<SvrModel> {
    check_targets(x, y, 2)?;
    if cfg.cost.is_nan() || cfg.cost <= 0.0 || cfg.epsilon.is_nan() || cfg.epsilon < 0.0 || cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(Error::InvalidConfig(
            "SVR needs cost > 0, epsilon >= 0, tol > 0".into(),
        ));
    }
    let (n, p) = (x.n_rows(), x.n_cols());
    let scaler = Standardizer::fit(x);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| scaler.transform_row(x.row(i))).collect();

    // scale-convention bandwidth on the standardized matrix
    let total = (n * p) as f64;
    let mean_all = rows.iter().flatten().sum::<f64>() / total;
    let var_all = rows
        .iter()
        .flatten()
        .map(|&v| (v - mean_all) * (v - mean_all))
        .sum::<f64>()
        / total;
    let gamma = if var_all > 1e-12 {
        1.0 / (p as f64 * var_all)
    } else {
        1.0 / p as f64
    };

    let kernel: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| rbf(gamma, &rows[i], &rows[j])).collect())
        .collect();

    let solution = smo_solve(&kernel, y, cfg)?;

    let mut support_rows = Vec::new();
    let mut coefficients = Vec::new();
    for (i, &t) in solution.theta.iter().enumerate() {
        if t != 0.0 {
            support_rows.push(rows[i].clone());
            coefficients.push(t);
        }
    }

    Ok(SvrModel {
        column_names: x.column_names().to_vec(),
        scaler,
        gamma,
        epsilon: cfg.epsilon,
        cost: cfg.cost,
        support_rows,
        coefficients,
        bias: solution.bias,
        dual_objective: solution.objective,
        iterations: solution.iterations,
    })
}
