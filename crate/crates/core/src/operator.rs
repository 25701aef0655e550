//! Pointwise kernels, the graph p-Laplacian, the Rayleigh quotient and
//! eigen-residuals.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// `Phi_p(x) = |x|^{p-2} x`, extended by `Phi_p(0) = 0` for `p < 2`.
///
/// Callers are responsible for `p >= 1`.
#[inline]
pub(crate) fn phi_unchecked(p: f64, x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if p == 2.0 {
        x
    } else {
        x.abs().powf(p - 1.0).copysign(x)
    }
}

/// Derivative `(p-1)|x|^{p-2}`; for `p < 2` the singularity at zero is
/// replaced by the value at `|x| = floor`.
#[inline]
pub(crate) fn phi_prime_capped(p: f64, x: f64, floor: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else if p > 2.0 {
        (p - 1.0) * x.abs().powf(p - 2.0)
    } else {
        (p - 1.0) * x.abs().max(floor).powf(p - 2.0)
    }
}

/// Hoelder conjugate `q = p / (p - 1)`; infinite for `p = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

fn check_p(p: f64, min_exclusive: bool) -> Result<()> {
    let ok = p.is_finite() && if min_exclusive { p > 1.0 } else { p >= 1.0 };
    if ok {
        Ok(())
    } else if min_exclusive {
        Err(Error::invalid(format!("exponent must satisfy p > 1 (got {p})")))
    } else {
        Err(Error::invalid(format!("exponent must satisfy p >= 1 (got {p})")))
    }
}

fn check_len(g: &Graph, f: &[f64]) -> Result<()> {
    if f.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            got: f.len(),
        });
    }
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("vertex function has non-finite entries"));
    }
    Ok(())
}

fn check_nonzero(f: &[f64]) -> Result<()> {
    if f.iter().all(|&x| x == 0.0) {
        Err(Error::ZeroFunction)
    } else {
        Ok(())
    }
}

/// `Phi_p(x)`.
pub fn phi(p: f64, x: f64) -> Result<f64> {
    check_p(p, false)?;
    Ok(phi_unchecked(p, x))
}

/// `(Delta_p f)(u) = sum_v w(uv) Phi_p(f(u) - f(v))` for `p > 1`.
pub fn apply_p_laplacian(g: &Graph, f: &[f64], p: f64) -> Result<Vec<f64>> {
    check_p(p, true)?;
    check_len(g, f)?;
    Ok(p_laplacian_unchecked(g, f, p))
}

pub(crate) fn p_laplacian_unchecked(g: &Graph, f: &[f64], p: f64) -> Vec<f64> {
    (0..g.n())
        .map(|u| {
            g.neighbors(u)
                .iter()
                .map(|&(v, w)| w * phi_unchecked(p, f[u] - f[v]))
                .sum()
        })
        .collect()
}

/// `sum_{uv in E} w(uv) |f(u) - f(v)|^p`, once per unordered edge.
pub fn dirichlet_energy(g: &Graph, f: &[f64], p: f64) -> f64 {
    g.edges()
        .iter()
        .map(|e| e.w * (f[e.u] - f[e.v]).abs().powf(p))
        .sum()
}

/// `||f||^p_{l^p(V)} = sum_u mu(u) |f(u)|^p`.
pub fn lp_norm_pow(g: &Graph, f: &[f64], p: f64) -> f64 {
    g.mu()
        .iter()
        .zip(f)
        .map(|(m, x)| m * x.abs().powf(p))
        .sum()
}

pub fn lp_norm(g: &Graph, f: &[f64], p: f64) -> f64 {
    lp_norm_pow(g, f, p).powf(1.0 / p)
}

/// Rescales `f` to unit `l^p(V)` norm.
pub fn normalize(g: &Graph, f: &[f64], p: f64) -> Result<Vec<f64>> {
    check_len(g, f)?;
    check_nonzero(f)?;
    let s = lp_norm(g, f, p);
    // already unit to rounding: keep the exact floats
    if (s - 1.0).abs() <= 8.0 * f64::EPSILON {
        return Ok(f.to_vec());
    }
    Ok(f.iter().map(|x| x / s).collect())
}

/// `R_p(f)`: p-Dirichlet energy over the weighted p-norm.
pub fn rayleigh_quotient(g: &Graph, f: &[f64], p: f64) -> Result<f64> {
    check_p(p, false)?;
    check_len(g, f)?;
    check_nonzero(f)?;
    Ok(dirichlet_energy(g, f, p) / lp_norm_pow(g, f, p))
}

/// Gradient of `R_p` at `f`:
/// `p (Delta_p f - R_p(f) mu Phi_p(f)) / ||f||^p`.
pub fn rq_gradient(g: &Graph, f: &[f64], p: f64) -> Result<Vec<f64>> {
    check_p(p, true)?;
    check_len(g, f)?;
    check_nonzero(f)?;
    let denom = lp_norm_pow(g, f, p);
    let r = dirichlet_energy(g, f, p) / denom;
    let lap = p_laplacian_unchecked(g, f, p);
    Ok(lap
        .iter()
        .enumerate()
        .map(|(u, l)| p * (l - r * g.mu()[u] * phi_unchecked(p, f[u])) / denom)
        .collect())
}

/// Max-norm defect of `Delta_p f = lambda mu Phi_p(f)` after rescaling `f`
/// to unit `l^p(V)` norm.
pub fn eigen_residual(g: &Graph, f: &[f64], lambda: f64, p: f64) -> Result<f64> {
    check_p(p, true)?;
    let f = normalize(g, f, p)?;
    Ok(residual_unchecked(g, &f, lambda, p))
}

pub(crate) fn residual_unchecked(g: &Graph, f: &[f64], lambda: f64, p: f64) -> f64 {
    p_laplacian_unchecked(g, f, p)
        .iter()
        .enumerate()
        .map(|(u, l)| (l - lambda * g.mu()[u] * phi_unchecked(p, f[u])).abs())
        .fold(0.0, f64::max)
}

/// `|ax - by|^p - (|a|^p |x| + |b|^p |y|) |x - y|^{p-1}` for `xy <= 0`.
///
/// Always `<= 0`; zero exactly when `xy = 0`, or `a = b` (`p > 1`), or
/// `ab >= 0` (`p = 1`).
pub fn ax_by_gap(p: f64, a: f64, b: f64, x: f64, y: f64) -> Result<f64> {
    check_p(p, false)?;
    if x * y > 0.0 {
        return Err(Error::invalid(format!("requires xy <= 0 (x = {x}, y = {y})")));
    }
    let lhs = (a * x - b * y).abs().powf(p);
    let rhs = (a.abs().powf(p) * x.abs() + b.abs().powf(p) * y.abs()) * (x - y).abs().powf(p - 1.0);
    Ok(lhs - rhs)
}

/// An eigenpair `(lambda, f)` of `Delta_p` with its residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPair {
    pub p: f64,
    pub lambda: f64,
    pub f: Vec<f64>,
    /// Output of [`eigen_residual`] for `(f, lambda)`.
    pub residual: f64,
    /// `| ||f||_{l^p} - 1 | <= 1e-12`.
    pub normalized: bool,
}

impl EigenPair {
    /// Normalizes `f`, computes the residual and sets the flag. For `p = 1`
    /// the residual is not defined pointwise and is stored as zero; such
    /// pairs are certified by the exact 1-Laplacian verifier instead.
    pub fn new(g: &Graph, p: f64, lambda: f64, f: &[f64]) -> Result<Self> {
        check_p(p, false)?;
        let f = normalize(g, f, p)?;
        let residual = if p > 1.0 {
            residual_unchecked(g, &f, lambda, p)
        } else {
            0.0
        };
        let normalized = (lp_norm(g, &f, p) - 1.0).abs() <= 1e-12;
        Ok(EigenPair {
            p,
            lambda,
            f,
            residual,
            normalized,
        })
    }
}
