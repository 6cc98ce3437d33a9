//! Independent high-accuracy orthant probabilities for dimensions 1-3,
//! built from one-dimensional adaptive quadrature and conditioning.
//! Used to validate the Mill's ratio bounds and the FWER estimators;
//! deliberately shares nothing with the sampling or series code paths.

use crate::corr_model::CorrelationModel;
use crate::error::{Error, Result};
use crate::gaussian::{std_normal_cdf, std_normal_pdf, TestConfig};
use crate::matrix::SquareMatrix;

/// Integration is truncated at this many standard deviations; the mass
/// beyond is below 1e-300.
const TRUNCATION: f64 = 40.0;

#[derive(Clone, Copy, Debug)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-12,
            max_subdivisions: 100_000,
        }
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

/// Adaptive Simpson with an explicit work queue so the subdivision count
/// can be capped.
fn adaptive_quadrature(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(&f, a, fa, b, fb);
    // (a, fa, b, fb, previous Simpson estimate, allotted tolerance)
    let mut stack = vec![(a, fa, m, fm, b, fb, whole, spec.abs_tol)];
    let mut total = 0.0;
    let mut worst_unresolved = 0.0f64;
    let mut used = 0usize;
    while let Some((a, fa, m, fm, b, fb, whole, tol)) = stack.pop() {
        used += 1;
        let (left, lm, flm) = simpson(&f, a, fa, m, fm);
        let (right, rm, frm) = simpson(&f, m, fm, b, fb);
        let err = left + right - whole;
        // an interval is also resolved once the error estimate is pure
        // roundoff: ~1e-13 relative to the local integral is the best f64
        // can do, and subdividing further only churns
        let resolved =
            err.abs() <= 15.0 * tol || err.abs() <= 1e-13 * (left.abs() + right.abs());
        if resolved || (b - a) < 1e-14 {
            total += left + right + err / 15.0;
            if !resolved {
                worst_unresolved = worst_unresolved.max(err.abs() / 15.0);
            }
        } else if used >= spec.max_subdivisions {
            return Err(Error::Quadrature {
                requested: spec.abs_tol,
                achieved: err.abs() / 15.0,
            });
        } else {
            stack.push((a, fa, lm, flm, m, fm, left, 0.5 * tol));
            stack.push((m, fm, rm, frm, b, fb, right, 0.5 * tol));
        }
    }
    if worst_unresolved > spec.abs_tol {
        return Err(Error::Quadrature {
            requested: spec.abs_tol,
            achieved: worst_unresolved,
        });
    }
    Ok(total)
}

/// `P(X1 > c1, X2 > c2)` for standard normals with correlation `rho`,
/// via `int_{c1}^{inf} phi(x) Phi(-(c2 - rho x)/sqrt(1-rho^2)) dx`.
pub fn bivariate_upper_orthant(
    c1: f64,
    c2: f64,
    rho: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if rho.abs() >= 1.0 {
        return Err(Error::DegenerateCorrelation);
    }
    let s = (1.0 - rho * rho).sqrt();
    let lo = c1.max(-TRUNCATION);
    if lo >= TRUNCATION {
        return Ok(0.0);
    }
    adaptive_quadrature(
        |x| std_normal_pdf(x) * std_normal_cdf(-(c2 - rho * x) / s),
        lo,
        TRUNCATION,
        spec,
    )
}

/// `P(X > c elementwise)` for a trivariate standard normal with
/// correlation matrix `v`, by conditioning on the first coordinate and
/// reusing the bivariate quadrature on the conditional law.
pub fn trivariate_upper_orthant(
    c: &[f64; 3],
    v: &SquareMatrix,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if v.dim() != 3 {
        return Err(Error::Shape(format!("need a 3x3 matrix, got {}", v.dim())));
    }
    if !v.is_symmetric(1e-12) {
        return Err(Error::Shape("correlation matrix is not symmetric".into()));
    }
    let r12 = v.get(0, 1);
    let r13 = v.get(0, 2);
    let r23 = v.get(1, 2);
    if r12.abs() >= 1.0 || r13.abs() >= 1.0 || r23.abs() >= 1.0 {
        return Err(Error::DegenerateCorrelation);
    }
    let s2 = (1.0 - r12 * r12).sqrt();
    let s3 = (1.0 - r13 * r13).sqrt();
    let cond_rho = (r23 - r12 * r13) / (s2 * s3);
    if cond_rho.abs() >= 1.0 {
        return Err(Error::DegenerateCorrelation);
    }
    let inner_spec = QuadratureSpec {
        abs_tol: spec.abs_tol * 0.01,
        ..*spec
    };
    let lo = c[0].max(-TRUNCATION);
    if lo >= TRUNCATION {
        return Ok(0.0);
    }
    adaptive_quadrature(
        |x| {
            let t2 = (c[1] - r12 * x) / s2;
            let t3 = (c[2] - r13 * x) / s3;
            let inner = bivariate_upper_orthant(t2, t3, cond_rho, &inner_spec)
                .expect("inner quadrature on validated correlation");
            std_normal_pdf(x) * inner
        },
        lo,
        TRUNCATION,
        spec,
    )
}

/// Exact FWER for `n <= 3` by full inclusion-exclusion over the
/// quadrature orthant probabilities.
pub fn exact_fwer_small(
    model: &CorrelationModel,
    config: &TestConfig,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let n = model.dim();
    if n != config.n {
        return Err(Error::Shape(format!(
            "model dimension {} vs config n = {}",
            n, config.n
        )));
    }
    if n > 3 {
        return Err(Error::InvalidDimension { min: 3, got: n });
    }
    let c = config.c;
    let tail = std_normal_cdf(-c);
    match n {
        1 => Ok(tail),
        2 => {
            let rho = model.entry(0, 1);
            Ok(2.0 * tail - bivariate_upper_orthant(c, c, rho, spec)?)
        }
        _ => {
            let dense = model.to_dense()?;
            let mut fwer = 3.0 * tail;
            for i in 0..3 {
                for j in (i + 1)..3 {
                    fwer -= bivariate_upper_orthant(c, c, dense.get(i, j), spec)?;
                }
            }
            let tri_spec = QuadratureSpec {
                abs_tol: spec.abs_tol.max(1e-12) * 100.0,
                ..*spec
            };
            fwer += trivariate_upper_orthant(&[c, c, c], &dense, &tri_spec)?;
            Ok(fwer)
        }
    }
}
