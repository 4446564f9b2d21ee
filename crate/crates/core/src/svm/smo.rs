//! Sequential minimal optimisation for the soft-margin dual
//!
//! ```text
//! maximise   Σ αᵢ − ½ Σ αᵢ αⱼ yᵢ yⱼ Kᵢⱼ
//! subject to 0 ≤ αᵢ ≤ U,  Σ αᵢ yᵢ = 0
//! ```
//!
//! The solver works on the equivalent minimisation with gradient
//! `G = Qα − e`, picks the maximal violating pair each round and stops once
//! the violation gap drops below `eps`.

use crate::error::{Error, Result};
use crate::matrix::KernelMatrix;
use crate::svm::kernel::KernelSpec;

/// Upper bound of the box constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoxBound {
    /// `U = C`
    #[default]
    C,
    /// `U = C / m`
    COverM,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub box_bound: BoxBound,
    /// Added to the Gram diagonal before solving.
    pub diagonal_shift: f64,
    pub eps: f64,
    pub max_iter: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            box_bound: BoxBound::C,
            diagonal_shift: 0.0,
            eps: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

const TAU: f64 = 1e-12;

/// A trained binary classifier.
///
/// `support_indices` refer to rows of the Gram matrix the caller considers
/// the training set; [`decision_value`] expects kernel rows over that set.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support_indices: Vec<usize>,
    pub alphas: Vec<f64>,
    pub labels: Vec<i8>,
    pub bias: f64,
    pub kernel: KernelSpec,
    pub objective: f64,
    pub iterations: u64,
    pub converged: bool,
}

impl SvmModel {
    /// `Σ αᵢ yᵢ K(xᵢ, x) + b` given the kernel row of `x` against the
    /// training set.
    pub fn decision_value(&self, kernel_row: &[f64]) -> f64 {
        let sum: f64 = self
            .support_indices
            .iter()
            .zip(&self.alphas)
            .zip(&self.labels)
            .map(|((&i, &a), &y)| a * f64::from(y) * kernel_row[i])
            .sum();
        sum + self.bias
    }

    /// `+1` or `-1`; a zero decision value counts as `+1`.
    pub fn predict(&self, kernel_row: &[f64]) -> i8 {
        if self.decision_value(kernel_row) >= 0.0 {
            1
        } else {
            -1
        }
    }

    pub(crate) fn remap_indices(&mut self, global: &[usize]) {
        for i in &mut self.support_indices {
            *i = global[*i];
        }
    }
}

/// Full solver state, exposed for KKT checks.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub gradient: Vec<f64>,
    pub upper: f64,
    pub rho: f64,
    pub objective: f64,
    pub iterations: u64,
    pub converged: bool,
}

fn check_inputs(gram: &KernelMatrix, labels: &[i8], c: f64) -> Result<()> {
    if !gram.is_square() || gram.rows() != labels.len() {
        return Err(Error::Training(format!(
            "Gram matrix is {}x{} for {} labels",
            gram.rows(),
            gram.cols(),
            labels.len()
        )));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::Training("binary labels must be +1 or -1".into()));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::Training(
            "binary training needs both classes present".into(),
        ));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Config(format!("C must be positive, got {c}")));
    }
    if gram.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Training("Gram matrix has non-finite entries".into()));
    }
    if !gram.is_symmetric() {
        return Err(Error::Training("Gram matrix is not symmetric".into()));
    }
    Ok(())
}

/// Solve the dual and return the raw solution.
pub fn solve(gram: &KernelMatrix, labels: &[i8], c: f64, opts: &SolverOptions) -> Result<DualSolution> {
    check_inputs(gram, labels, c)?;
    let m = labels.len();
    let upper = match opts.box_bound {
        BoxBound::C => c,
        BoxBound::COverM => c / m as f64,
    };
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let k = |i: usize, j: usize| {
        let v = gram.get(i, j);
        if i == j {
            v + opts.diagonal_shift
        } else {
            v
        }
    };
    let q = |i: usize, j: usize| y[i] * y[j] * k(i, j);

    let mut alpha = vec![0.0f64; m];
    let mut grad = vec![-1.0f64; m];
    let mut iterations = 0u64;
    let mut converged = false;

    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < upper) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < upper);

    while iterations < opts.max_iter {
        let mut g_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..m {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < g_min {
                g_min = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min < opts.eps {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
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
                if alpha[i] > upper {
                    alpha[i] = upper;
                    alpha[j] = upper - diff;
                }
            } else if alpha[j] > upper {
                alpha[j] = upper;
                alpha[i] = upper + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > upper {
                if alpha[i] > upper {
                    alpha[i] = upper;
                    alpha[j] = sum - upper;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > upper {
                if alpha[j] > upper {
                    alpha[j] = upper;
                    alpha[i] = sum - upper;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..m {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    if !converged {
        log::warn!(
            "solver stopped after {} iterations without reaching eps={}",
            iterations,
            opts.eps
        );
    }

    let rho = compute_rho(&alpha, &grad, &y, upper);
    let objective = alpha.iter().sum::<f64>()
        - 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g + 1.0)).sum::<f64>();
    Ok(DualSolution {
        alpha,
        gradient: grad,
        upper,
        rho,
        objective,
        iterations,
        converged,
    })
}

/// Offset from free support vectors, or the midpoint of the feasible interval
/// when every multiplier sits at a bound.
fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], upper: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut free_sum = 0.0;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= upper {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Train a binary model on a precomputed Gram matrix with labels in `{+1, -1}`.
pub fn solve_dual(
    gram: &KernelMatrix,
    labels: &[i8],
    kernel: &KernelSpec,
    opts: &SolverOptions,
) -> Result<SvmModel> {
    let sol = solve(gram, labels, kernel.c, opts)?;
    let mut model = SvmModel {
        support_indices: Vec::new(),
        alphas: Vec::new(),
        labels: Vec::new(),
        bias: -sol.rho,
        kernel: *kernel,
        objective: sol.objective,
        iterations: sol.iterations,
        converged: sol.converged,
    };
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            model.support_indices.push(i);
            model.alphas.push(a);
            model.labels.push(labels[i]);
        }
    }
    Ok(model)
}
