//! Binary C-SVM trained by sequential minimal optimization.
//!
//! The dual is solved in its minimization form
//!
//! ```text
//! min  ½ αᵀQα − Σα    s.t.  0 ≤ α ≤ C,  Σ yα = 0,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! Each step picks the maximal violating index `i` and, among candidates `j` that
//! can move against it, the one with the largest second-order decrease of the
//! objective; the pair is then optimized analytically and clipped to the box.

use std::collections::VecDeque;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::kernel::{rbf_unchecked, KernelParams};
use crate::error::{Error, Result};
use crate::vectorizer::SparseVector;

/// Dual variables at or below this are not kept as support vectors.
pub const SV_THRESHOLD: f64 = 1e-12;

const TAU: f64 = 1e-12;
const CACHE_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    /// Stop once the maximal KKT violation drops below this.
    pub tol: f64,
    /// Give up after this many consecutive sweeps (n pair updates each) without
    /// improving the best violation seen.
    pub max_passes: usize,
    /// Train one-vs-one machines on the rayon pool.
    pub parallel: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            tol: 1e-3,
            max_passes: 200,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub iterations: u64,
    pub converged: bool,
    /// Σα − ½ αᵀQα at the returned point.
    pub dual_objective: f64,
    /// Maximal KKT violation at the returned point.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    pub support_vectors: Vec<SparseVector>,
    /// `α_i y_i` for each support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    /// Classes mapped to +1 and −1 respectively.
    pub label_pair: (String, String),
    pub info: TrainingInfo,
}

impl BinarySvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors[0].dim()
    }

    /// `Σ coef_i K(sv_i, x) + bias`. Positive favors `label_pair.0`.
    pub fn decision_function(&self, x: &SparseVector) -> Result<f64> {
        if x.dim() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(self.decision_unchecked(x))
    }

    pub(crate) fn decision_unchecked(&self, x: &SparseVector) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, &coef)| coef * rbf_unchecked(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.support_vectors.is_empty() || self.support_vectors.len() != self.dual_coefs.len() {
            return Err(Error::ModelFormat(format!(
                "machine {:?}: {} support vectors but {} coefficients",
                self.label_pair,
                self.support_vectors.len(),
                self.dual_coefs.len()
            )));
        }
        let dim = self.dim();
        if self.support_vectors.iter().any(|sv| sv.dim() != dim) {
            return Err(Error::ModelFormat("support vectors of mixed dimension".into()));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) || !self.bias.is_finite() {
            return Err(Error::ModelFormat("non-finite gamma or bias".into()));
        }
        Ok(())
    }
}

pub fn decision_function(model: &BinarySvmModel, x: &SparseVector) -> Result<f64> {
    model.decision_function(x)
}

/// Lazily computed kernel rows with FIFO eviction.
struct KernelCache<'a> {
    rows: &'a [&'a SparseVector],
    gamma: f64,
    cached: Vec<Option<Rc<[f64]>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelCache<'a> {
    fn new(rows: &'a [&'a SparseVector], gamma: f64) -> Self {
        let n = rows.len();
        let capacity = (CACHE_BYTES / (8 * n.max(1))).max(2);
        KernelCache {
            rows,
            gamma,
            cached: vec![None; n],
            order: VecDeque::new(),
            capacity,
        }
    }

    fn row(&mut self, i: usize) -> Rc<[f64]> {
        if let Some(r) = &self.cached[i] {
            return Rc::clone(r);
        }
        if self.order.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.cached[old] = None;
            }
        }
        let xi = self.rows[i];
        let row: Rc<[f64]> = self
            .rows
            .iter()
            .map(|xj| rbf_unchecked(xi, xj, self.gamma))
            .collect();
        self.cached[i] = Some(Rc::clone(&row));
        self.order.push_back(i);
        row
    }
}

struct Solution {
    alpha: Vec<f64>,
    rho: f64,
    info: TrainingInfo,
}

fn solve(rows: &[&SparseVector], y: &[f64], c: f64, gamma: f64, opts: &TrainOptions) -> Solution {
    let n = rows.len();
    let mut cache = KernelCache::new(rows, gamma);
    let mut alpha = vec![0.0f64; n];
    let mut grad = vec![-1.0f64; n];

    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    let in_up = |t: usize, a: &[f64]| if y[t] > 0.0 { !upper(a[t]) } else { !lower(a[t]) };
    let in_low = |t: usize, a: &[f64]| if y[t] > 0.0 { !lower(a[t]) } else { !upper(a[t]) };

    let max_iter = (100 * n as u64).max(10_000_000);
    let mut iterations = 0u64;
    let mut best_violation = f64::INFINITY;
    let mut stalled = 0usize;
    let mut converged = false;
    let mut violation;

    loop {
        // maximal violating index among those free to move up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(t, &alpha) {
                let v = -y[t] * grad[t];
                if v >= gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }

        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        let k_i = i_sel.map(|i| cache.row(i));
        for t in 0..n {
            if !in_low(t, &alpha) {
                continue;
            }
            let v = y[t] * grad[t];
            if v >= gmax2 {
                gmax2 = v;
            }
            let (Some(i), Some(k_i)) = (i_sel, k_i.as_ref()) else {
                continue;
            };
            let grad_diff = gmax + v;
            if grad_diff > 0.0 {
                let quad = 2.0 - 2.0 * k_i[t];
                let quad = if quad > 0.0 { quad } else { TAU };
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= best_obj && t != i {
                    best_obj = obj;
                    j_sel = Some(t);
                }
            }
        }

        violation = gmax + gmax2;
        if violation < opts.tol {
            converged = true;
            break;
        }
        let (Some(i), Some(j), Some(k_i)) = (i_sel, j_sel, k_i) else {
            // no admissible pair left although the gap is open: numerical floor
            break;
        };
        if iterations >= max_iter {
            break;
        }
        iterations += 1;
        if iterations.is_multiple_of(n as u64) {
            if violation < best_violation {
                best_violation = violation;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= opts.max_passes {
                    break;
                }
            }
        }

        let k_j = cache.row(j);
        let k_ij = k_i[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);

        if y[i] != y[j] {
            let quad = 2.0 - 2.0 * k_ij;
            let quad = if quad > 0.0 { quad } else { TAU };
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
            let quad = 2.0 - 2.0 * k_ij;
            let quad = if quad > 0.0 { quad } else { TAU };
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

        let d_i = alpha[i] - old_i;
        let d_j = alpha[j] - old_j;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k_i[t] * d_i + y[j] * k_j[t] * d_j);
        }
    }

    // bias: average over free variables, else midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0f64);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
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
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    };

    let dual_objective = -0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();

    Solution {
        alpha,
        rho,
        info: TrainingInfo {
            iterations,
            converged,
            dual_objective,
            violation,
        },
    }
}

/// Trains on rows labeled `+1` / `−1`. Rows are put in a canonical order first so
/// the result does not depend on how the caller ordered them.
pub(crate) fn train_binary_refs(
    rows: &[&SparseVector],
    y: &[i8],
    params: &KernelParams,
    opts: &TrainOptions,
    label_pair: (String, String),
) -> Result<BinarySvmModel> {
    params.validate()?;
    if rows.len() != y.len() {
        return Err(Error::Shape {
            expected: rows.len(),
            found: y.len(),
        });
    }
    if let Some(bad) = y.iter().find(|&&v| v != 1 && v != -1) {
        return Err(Error::Value(format!("binary labels must be +1 or -1, got {bad}")));
    }
    let (pos, neg) = (y.iter().filter(|&&v| v > 0).count(), y.iter().filter(|&&v| v < 0).count());
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateTraining(format!(
            "both classes are required ({pos} positive, {neg} negative rows)"
        )));
    }
    let dim = rows[0].dim();
    if let Some(r) = rows.iter().find(|r| r.dim() != dim) {
        return Err(Error::Shape {
            expected: dim,
            found: r.dim(),
        });
    }
    let gamma = params.gamma.resolve(dim)?;
    if !(opts.tol.is_finite() && opts.tol > 0.0) || opts.max_passes == 0 {
        return Err(Error::Parameter("tol must be positive and max_passes at least 1".into()));
    }

    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| y[b].cmp(&y[a]).then_with(|| rows[a].cmp(rows[b])));
    let sorted_rows: Vec<&SparseVector> = order.iter().map(|&i| rows[i]).collect();
    let sorted_y: Vec<f64> = order.iter().map(|&i| y[i] as f64).collect();

    let sol = solve(&sorted_rows, &sorted_y, params.c, gamma, opts);
    if !sol.info.converged {
        log::warn!(
            "SMO for {:?} stopped after {} iterations with KKT violation {:.3e} > tol {:.1e}",
            label_pair,
            sol.info.iterations,
            sol.info.violation,
            opts.tol
        );
    }

    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for (t, &a) in sol.alpha.iter().enumerate() {
        if a > SV_THRESHOLD {
            support_vectors.push(sorted_rows[t].clone());
            dual_coefs.push(a * sorted_y[t]);
        }
    }
    if support_vectors.is_empty() {
        return Err(Error::DegenerateTraining("solver returned no support vectors".into()));
    }

    Ok(BinarySvmModel {
        support_vectors,
        dual_coefs,
        bias: -sol.rho,
        gamma,
        label_pair,
        info: sol.info,
    })
}

pub fn train_binary(
    rows: &[SparseVector],
    y: &[i8],
    params: &KernelParams,
    opts: &TrainOptions,
) -> Result<BinarySvmModel> {
    let refs: Vec<&SparseVector> = rows.iter().collect();
    train_binary_refs(&refs, y, params, opts, ("+1".into(), "-1".into()))
}
