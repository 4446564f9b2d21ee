//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the code under test; each oracle recomputes its
//! quantity from the definition, by brute force where that is feasible.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ENGLISH: &str = "It is a truth universally acknowledged, that a single man in \
possession of a good fortune, must be in want of a wife. However little known the feelings \
or views of such a man may be on his first entering a neighbourhood, this truth is so well \
fixed in the minds of the surrounding families, that he is considered the rightful property \
of some one or other of their daughters. My dear Mr. Bennet, said his lady to him one day, \
have you heard that Netherfield Park is let at last? Mr. Bennet replied that he had not. But \
it is, returned she; for Mrs. Long has just been here, and she told me all about it. Mr. \
Bennet made no answer. Do you not want to know who has taken it? cried his wife impatiently. \
You want to tell me, and I have no objection to hearing it. This was invitation enough. Why, \
my dear, you must know, Mrs. Long says that Netherfield is taken by a young man of large \
fortune from the north of England; that he came down on Monday in a chaise and four to see \
the place, and was so much delighted with it that he agreed with Mr. Morris immediately; \
that he is to take possession before Michaelmas, and some of his servants are to be in the \
house by the end of next week. What is his name? Bingley. Is he married or single? Oh, \
single, my dear, to be sure! A single man of large fortune; four or five thousand a year. \
What a fine thing for our girls!";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_bytes(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.gen()).collect()
}

/// Bytes from a small alphabet, so contexts repeat and the model gets
/// exercised beyond the order −1 fallback.
pub fn random_text(rng: &mut ChaCha8Rng, len: usize, alphabet: &[u8]) -> Vec<u8> {
    (0..len)
        .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
        .collect()
}

/// Occurrence counts of every byte following `context` in `data[..end]`,
/// counted over the positions `j` with `j >= context.len()`.
fn following_counts(data: &[u8], end: usize, context: &[u8]) -> [u32; 256] {
    let k = context.len();
    let mut counts = [0u32; 256];
    for j in k..end {
        if &data[j - k..j] == context {
            counts[data[j] as usize] += 1;
        }
    }
    counts
}

/// `Σ −log2 p` under PPM escape method C with full exclusion, recomputed
/// from prefix counts at every position.
pub fn ppmc_code_length(data: &[u8], order: usize) -> f64 {
    let mut bits = 0.0;
    for i in 0..data.len() {
        let symbol = data[i] as usize;
        let mut excluded = [false; 256];
        let mut coded = false;
        for k in (0..=order.min(i)).rev() {
            let counts = following_counts(data, i, &data[i - k..i]);
            let mut total = 0u64;
            let mut distinct = 0u64;
            for s in 0..256 {
                if counts[s] > 0 && !excluded[s] {
                    total += u64::from(counts[s]);
                    distinct += 1;
                }
            }
            if distinct == 0 {
                continue;
            }
            let denom = (total + distinct) as f64;
            if counts[symbol] > 0 && !excluded[symbol] {
                bits -= (f64::from(counts[symbol]) / denom).log2();
                coded = true;
                break;
            }
            bits -= (distinct as f64 / denom).log2();
            for s in 0..256 {
                if counts[s] > 0 {
                    excluded[s] = true;
                }
            }
        }
        if !coded {
            let left = excluded.iter().filter(|&&e| !e).count() as f64;
            bits += left.log2();
        }
    }
    bits
}

/// `Σ −log2 p` for the add-one estimator in the order-`min(order, i)`
/// context.
pub fn laplace_code_length(data: &[u8], order: usize) -> f64 {
    let mut bits = 0.0;
    for i in 0..data.len() {
        let k = order.min(i);
        let counts = following_counts(data, i, &data[i - k..i]);
        let total: u32 = counts.iter().sum();
        bits -= (f64::from(counts[data[i] as usize] + 1) / f64::from(total + 256)).log2();
    }
    bits
}

/// A random dual problem: PSD Gram `A Aᵀ`, labels with both classes, `C`.
pub struct DualInstance {
    pub gram: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
    pub c: f64,
}

pub fn random_instance(rng: &mut ChaCha8Rng, m: usize) -> DualInstance {
    let rank = rng.gen_range(1..=m + 2);
    let a: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..rank).map(|_| rng.gen_range(-1.5..1.5)).collect())
        .collect();
    let gram = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| a[i].iter().zip(&a[j]).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect();
    let mut labels: Vec<i8> = (0..m).map(|_| if rng.gen() { 1 } else { -1 }).collect();
    labels[0] = 1;
    labels[1] = -1;
    let c = 10f64.powf(rng.gen_range(-1.0..1.3));
    DualInstance { gram, labels, c }
}

fn q_matrix(inst: &DualInstance) -> DMatrix<f64> {
    let m = inst.labels.len();
    DMatrix::from_fn(m, m, |i, j| {
        f64::from(inst.labels[i]) * f64::from(inst.labels[j]) * inst.gram[i][j]
    })
}

/// `Σ αᵢ − ½ αᵀ Q α`.
pub fn dual_objective(inst: &DualInstance, alpha: &[f64]) -> f64 {
    let q = q_matrix(inst);
    let a = DVector::from_column_slice(alpha);
    a.sum() - 0.5 * (a.transpose() * &q * &a)[(0, 0)]
}

/// Best objective over all active sets: every multiplier is at 0, at `C`,
/// or free, and the free ones solve the equality-constrained stationarity
/// system.
pub fn enumerate_active_sets(inst: &DualInstance) -> Option<(f64, Vec<f64>)> {
    let m = inst.labels.len();
    let q = q_matrix(inst);
    let y: Vec<f64> = inst.labels.iter().map(|&l| f64::from(l)).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let combos = 3usize.pow(m as u32);
    for code in 0..combos {
        let mut status = vec![0u8; m];
        let mut rest = code;
        for s in status.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..m).filter(|&i| status[i] == 2).collect();
        let mut alpha = vec![0.0; m];
        for i in 0..m {
            if status[i] == 1 {
                alpha[i] = inst.c;
            }
        }
        let bound_balance: f64 = (0..m).filter(|&i| status[i] != 2).map(|i| y[i] * alpha[i]).sum();
        if free.is_empty() {
            if bound_balance.abs() > 1e-12 {
                continue;
            }
        } else {
            let f = free.len();
            let mut lhs = DMatrix::zeros(f + 1, f + 1);
            let mut rhs = DVector::zeros(f + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    lhs[(r, s)] = q[(i, j)];
                }
                lhs[(r, f)] = y[i];
                lhs[(f, r)] = y[i];
                let fixed: f64 = (0..m).filter(|&j| status[j] != 2).map(|j| q[(i, j)] * alpha[j]).sum();
                rhs[r] = 1.0 - fixed;
            }
            rhs[f] = -bound_balance;
            let solution = match lhs.clone().svd(true, true).solve(&rhs, 1e-12) {
                Ok(s) => s,
                Err(_) => continue,
            };
            if (&lhs * &solution - &rhs).amax() > 1e-9 {
                continue;
            }
            let mut feasible = true;
            for (r, &i) in free.iter().enumerate() {
                let v = solution[r];
                if v < -1e-12 || v > inst.c + 1e-12 {
                    feasible = false;
                    break;
                }
                alpha[i] = v.clamp(0.0, inst.c);
            }
            if !feasible {
                continue;
            }
        }
        let w = dual_objective(inst, &alpha);
        if best.as_ref().map_or(true, |(b, _)| w > *b) {
            best = Some((w, alpha));
        }
    }
    best
}

/// Euclidean projection onto `{0 ≤ α ≤ C, yᵀα = 0}` by bisection on the
/// multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |nu: f64| -> Vec<f64> {
        v.iter().zip(y).map(|(vi, yi)| (vi - nu * yi).clamp(0.0, c)).collect()
    };
    let balance = |a: &[f64]| -> f64 { a.iter().zip(y).map(|(ai, yi)| ai * yi).sum() };
    let span = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if balance(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient on the dual.
pub fn fista(inst: &DualInstance, iterations: usize) -> (f64, Vec<f64>) {
    let m = inst.labels.len();
    let q = q_matrix(inst);
    let y: Vec<f64> = inst.labels.iter().map(|&l| f64::from(l)).collect();
    let lipschitz = q.clone().symmetric_eigenvalues().max().max(1e-12);
    let step = 1.0 / lipschitz;
    let mut x = vec![0.0; m];
    let mut z = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let zv = DVector::from_column_slice(&z);
        let grad = &q * &zv - DVector::from_element(m, 1.0);
        let moved: Vec<f64> = (0..m).map(|i| z[i] - step * grad[i]).collect();
        let next = project(&moved, &y, inst.c);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = (0..m)
            .map(|i| next[i] + (t - 1.0) / t_next * (next[i] - x[i]))
            .collect();
        x = next;
        t = t_next;
    }
    (dual_objective(inst, &x), x)
}

/// Largest violation of the optimality conditions of a dual point:
/// `max_{I_up} −yᵢ∇ᵢ − min_{I_low} −yᵢ∇ᵢ` with `∇ = Qα − e`.
pub fn kkt_violation(inst: &DualInstance, alpha: &[f64]) -> f64 {
    let m = alpha.len();
    let q = q_matrix(inst);
    let grad = &q * DVector::from_column_slice(alpha) - DVector::from_element(m, 1.0);
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for i in 0..m {
        let y = f64::from(inst.labels[i]);
        let score = -y * grad[i];
        let (at_zero, at_c) = (alpha[i] <= 0.0, alpha[i] >= inst.c);
        let in_up = (y > 0.0 && !at_c) || (y < 0.0 && !at_zero);
        let in_low = (y > 0.0 && !at_zero) || (y < 0.0 && !at_c);
        if in_up {
            up = up.max(score);
        }
        if in_low {
            low = low.min(score);
        }
    }
    (up - low).max(0.0)
}

/// Dense `[-1, 1]` min-max scaling of a matrix, recomputed column by column.
pub fn dense_minmax(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = rows[0].len();
    let mut out = rows.to_vec();
    for c in 0..p {
        let lo = rows.iter().map(|r| r[c]).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max);
        for r in out.iter_mut() {
            r[c] = if hi > lo { -1.0 + 2.0 * (r[c] - lo) / (hi - lo) } else { 0.0 };
        }
    }
    out
}
