//! Test-only reference solver for the SVM dual, independent of the SMO code path.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// Dense RBF Gram matrix computed straight from the formula.
pub fn gram(points: &[Vec<f64>], gamma: f64) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
        (-gamma * d2).exp()
    })
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Euclidean projection onto `{0 ≤ a ≤ c, yᵀa = 0}`. The multiplier `λ` of the
/// equality constraint solves `Σ y_i clip(v_i − λ y_i, 0, c) = 0`, a monotone
/// piecewise-linear equation located exactly from its breakpoints.
pub fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> f64 {
        v.iter()
            .zip(y)
            .map(|(&vi, &yi)| yi * (vi - lambda * yi).clamp(0.0, c))
            .sum()
    };
    let mut bps: Vec<f64> = v
        .iter()
        .zip(y)
        .flat_map(|(&vi, &yi)| [yi * vi, yi * (vi - c)])
        .collect();
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bps.dedup();
    // g is non-increasing in λ: find the last breakpoint with g ≥ 0
    let (mut lo, mut hi) = (0usize, bps.len() - 1);
    if at(bps[0]) < 0.0 {
        return apply(v, y, c, bps[0]);
    }
    if at(bps[hi]) > 0.0 {
        return apply(v, y, c, bps[hi]);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if at(bps[mid]) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (g_lo, g_hi) = (at(bps[lo]), at(bps[hi]));
    let lambda = if g_lo == g_hi {
        bps[lo]
    } else {
        bps[lo] + (bps[hi] - bps[lo]) * g_lo / (g_lo - g_hi)
    };
    apply(v, y, c, lambda)
}

fn apply(v: &[f64], y: &[f64], c: f64, lambda: f64) -> Vec<f64> {
    v.iter()
        .zip(y)
        .map(|(&vi, &yi)| (vi - lambda * yi).clamp(0.0, c))
        .collect()
}

pub struct OracleSolution {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub bias: f64,
}

pub fn dual_objective(alpha: &[f64], q: &DMatrix<f64>) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * q[(i, j)];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Projected gradient ascent on `Σα − ½αᵀQα` with step `1/λ_max(Q)`.
pub fn projected_gradient_dual(k: &DMatrix<f64>, y: &[f64], c: f64, iterations: usize) -> OracleSolution {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[(i, j)]);
    let lmax = SymmetricEigen::new(q.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let step = 1.0 / lmax;

    let mut alpha = vec![0.0; n];
    let mut grad = vec![0.0; n];
    for _ in 0..iterations {
        for i in 0..n {
            let qa: f64 = (0..n).map(|j| q[(i, j)] * alpha[j]).sum();
            grad[i] = 1.0 - qa;
        }
        let v: Vec<f64> = alpha.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
        alpha = project(&v, y, c);
    }

    // bias from the stationarity conditions: free variables fix it exactly,
    // otherwise take the middle of the interval the bound variables allow
    let eps = 1e-9 * c;
    let mut free = Vec::new();
    let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let f_no_bias: f64 = (0..n).map(|j| alpha[j] * y[j] * k[(i, j)]).sum();
        let b_i = y[i] - f_no_bias;
        if alpha[i] > eps && alpha[i] < c - eps {
            free.push(b_i);
        } else if (alpha[i] <= eps) == (y[i] > 0.0) {
            // y f ≥ 1 ⇒ b ≥ b_i for y=+1 at 0, b ≤ b_i for y=−1 at 0 (mirrored at C)
            lower = lower.max(b_i);
        } else {
            upper = upper.min(b_i);
        }
    }
    let bias = if free.is_empty() {
        (lower + upper) / 2.0
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    };
    OracleSolution {
        objective: dual_objective(&alpha, &q),
        alpha,
        bias,
    }
}
