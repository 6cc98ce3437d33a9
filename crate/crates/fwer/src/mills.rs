//! Multivariate Mill's ratio bounds on Gaussian upper-orthant
//! probabilities, and the first-order joint tail approximation they
//! justify in the nearly independent regime.

use crate::error::{Error, Result};
use crate::gaussian::{TestConfig, SQRT_2PI};
use crate::matrix::SquareMatrix;
use crate::sampler::cholesky;
use serde::Serialize;

/// Upper-orthant problem `P(X > a)` for `X ~ N(0, V)`, carrying the
/// precision matrix `M = V^{-1}` and `Delta = a^T M`.
#[derive(Clone, Debug)]
pub struct OrthantProblem {
    pub a: Vec<f64>,
    pub v: SquareMatrix,
    pub m: SquareMatrix,
    pub delta: Vec<f64>,
    det_v: f64,
}

/// Regime guard for the first-order expansion: off-diagonals above this
/// magnitude are outside the near-independence asymptotics.
pub const OFFDIAG_REGIME_LIMIT: f64 = 0.2;

fn invert_spd(v: &SquareMatrix) -> Result<(SquareMatrix, f64)> {
    let n = v.dim();
    let l = cholesky(v)?;
    let mut det = 1.0;
    for i in 0..n {
        det *= l.get(i, i) * l.get(i, i);
    }
    let mut inv = SquareMatrix::zeros(n);
    for col in 0..n {
        // forward solve L y = e_col
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l.get(i, k) * y[k];
            }
            y[i] = s / l.get(i, i);
        }
        // back solve L^T x = y
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l.get(k, i) * x[k];
            }
            x[i] = s / l.get(i, i);
        }
        for i in 0..n {
            inv.set(i, col, x[i]);
        }
    }
    Ok((inv, det))
}

pub fn make_orthant_problem(a: &[f64], v: &SquareMatrix) -> Result<OrthantProblem> {
    if a.len() != v.dim() {
        return Err(Error::Shape(format!(
            "threshold vector length {} vs matrix dimension {}",
            a.len(),
            v.dim()
        )));
    }
    let (m, det_v) = invert_spd(v)?;
    let n = v.dim();
    let delta: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| a[j] * m.get(j, i)).sum())
        .collect();
    Ok(OrthantProblem {
        a: a.to_vec(),
        v: v.clone(),
        m,
        delta,
        det_v,
    })
}

/// Savage's two-sided bound on `F(a, M) = P(X > a)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MillsBounds {
    pub lower: f64,
    pub upper: f64,
    /// `f(a, M) (prod Delta_i)^{-1}`, the shared leading factor.
    pub leading: f64,
    /// `(1/2) sum_ij m_ij (1 + delta_ij) / (Delta_i Delta_j)`.
    pub correction: f64,
    /// The lower bound is negative (no information) when `correction >= 1`.
    pub vacuous: bool,
}

pub fn mills_bounds(problem: &OrthantProblem) -> Result<MillsBounds> {
    let k = problem.a.len();
    for (i, &d) in problem.delta.iter().enumerate() {
        if d <= 0.0 {
            return Err(Error::BoundInapplicable { index: i, value: d });
        }
    }
    // f(a, M) = |M|^{1/2} (2 pi)^{-k/2} exp(-a^T M a / 2), |M| = 1/|V|
    let quad: f64 = (0..k)
        .map(|i| problem.a[i] * problem.delta[i])
        .sum();
    let f = (1.0 / problem.det_v).sqrt() / SQRT_2PI.powi(k as i32) * (-0.5 * quad).exp();
    let leading = f / problem.delta.iter().product::<f64>();

    let mut correction = 0.0;
    for i in 0..k {
        for j in 0..k {
            let kron = if i == j { 1.0 } else { 0.0 };
            correction +=
                problem.m.get(i, j) * (1.0 + kron) / (problem.delta[i] * problem.delta[j]);
        }
    }
    correction *= 0.5;

    Ok(MillsBounds {
        lower: leading * (1.0 - correction),
        upper: leading,
        leading,
        correction,
        vacuous: correction >= 1.0,
    })
}

/// Sum of the off-diagonal entries of `w` over ordered pairs.
pub fn offdiag_sum(w: &SquareMatrix) -> f64 {
    let k = w.dim();
    let mut s = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                s += w.get(i, j);
            }
        }
    }
    s
}

/// True when every off-diagonal of `w` is inside the near-independence
/// regime the first-order expansion assumes.
pub fn within_regime(w: &SquareMatrix) -> bool {
    let k = w.dim();
    for i in 0..k {
        for j in 0..k {
            if i != j && w.get(i, j).abs() > OFFDIAG_REGIME_LIMIT {
                return false;
            }
        }
    }
    true
}

/// First-order joint upper-tail approximation
/// `P(X_{i1} > c, ..., X_{ik} > c) ~ (alpha/n)^k (1 + (c^2/2) S)`,
/// with `S` the ordered-pair sum of the off-diagonals of `w`.
pub fn joint_tail_approx(k: usize, config: &TestConfig, w: &SquareMatrix) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidDimension { min: 1, got: 0 });
    }
    if w.dim() != k {
        return Err(Error::Shape(format!(
            "correlation block dimension {} vs k = {}",
            w.dim(),
            k
        )));
    }
    let s = offdiag_sum(w);
    let c2 = config.c * config.c;
    Ok(config.alpha_n.powi(k as i32) * (1.0 + 0.5 * c2 * s))
}
