//! Shooting solver for the unit path `P_n`.
//!
//! With the reflected extension `f(0) = f(1)` the eigen-equation at vertex
//! `i` reads `Phi_p(f(i) - f(i+1)) = lambda Phi_p(f(i)) - Phi_p(f(i) - f(i-1))`,
//! which is solved forward for `f(i+1)` by inverting `Phi_p` with `Phi_q`.
//! The only equation left is the one at vertex `n`; its defect decides
//! whether `lambda` is an eigenvalue.
//!
//! The number of eigenvalues strictly below `lambda` equals the number of
//! generalized zeros of the shooting solution plus one if the boundary
//! defect and `f(n)` have opposite signs (the discrete Sturm count; at
//! `p = 2` these are the negative pivots of `L - lambda I`).

use serde::Serialize;

use super::continuation::{solve_direct, ContinuationOptions};
use super::{Method, PairDiagnostics, Spectrum};
use crate::error::{Error, Result, SolverError};
use crate::graph::{path_graph, MuMode};
use crate::nodal::{default_zero_tol, generalized_zeros};
use crate::operator::{conjugate, phi_unchecked, EigenPair};

const RESCALE_ABOVE: f64 = 1e150;

#[derive(Debug, Clone, Serialize)]
pub struct ShootingTrace {
    pub lambda: f64,
    /// Shooting solution, `f[0] = 1` unless the recurrence overflowed and the
    /// whole prefix was rescaled (the equation is homogeneous).
    pub f: Vec<f64>,
    /// Generalized zeros of `f` on `1..=n`.
    pub zero_count: usize,
    /// `|H(lambda, f~, n)|`, the defect of the equation at vertex `n`.
    pub boundary_defect: f64,
    /// Number of eigenvalues strictly below `lambda`.
    pub sturm_index: usize,
    #[serde(skip)]
    signed_defect: f64,
}

fn check(n: usize, p: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("path needs n >= 2 (got {n})")));
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::invalid(format!("shooting needs p > 1 (got {p})")));
    }
    Ok(())
}

/// Runs the recurrence from `f(1) = 1` at trial eigenvalue `lambda`.
pub fn path_shoot(n: usize, p: f64, lambda: f64) -> Result<ShootingTrace> {
    check(n, p)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be >= 0 (got {lambda})")));
    }
    Ok(shoot(n, p, conjugate(p), lambda))
}

fn shoot(n: usize, p: f64, q: f64, lambda: f64) -> ShootingTrace {
    let mut f = Vec::with_capacity(n);
    f.push(1.0);
    let mut prev = 1.0;
    for i in 0..n - 1 {
        let cur = f[i];
        let rhs = lambda * phi_unchecked(p, cur) - phi_unchecked(p, cur - prev);
        let next = cur - phi_unchecked(q, rhs);
        prev = cur;
        f.push(next);
        if next.abs() > RESCALE_ABOVE {
            let s = 1.0 / next.abs();
            f.iter_mut().for_each(|x| *x *= s);
            prev *= s;
        }
    }
    let last = f[n - 1];
    let h = phi_unchecked(p, last - f[n - 2]) - lambda * phi_unchecked(p, last);
    let zero_count = generalized_zeros(&f, 0.0).len();
    let boundary = usize::from(last != 0.0 && h * last < 0.0);
    ShootingTrace {
        lambda,
        f,
        zero_count,
        boundary_defect: h.abs(),
        sturm_index: zero_count + boundary,
        signed_defect: h,
    }
}

/// Bisection tolerance on the eigenvalue bracket.
const BRACKET_TOL: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;

/// All `n` eigenpairs of `Delta_p` on the unit path.
///
/// The `k`-th eigenvalue is bracketed by bisection on the Sturm index and
/// polished by regula falsi on the boundary defect. Each returned
/// eigenfunction is checked to have exactly `k - 1` generalized zeros.
/// Pairs whose residual stays above `1e-10` after a Newton refinement are
/// kept, marked unconverged and reported in the warnings; near `p = 1` the
/// eigenfunction's edge differences can be smaller than the spacing of
/// floats around its values.
pub fn path_spectrum(n: usize, p: f64) -> Result<Spectrum> {
    check(n, p)?;
    let q = conjugate(p);
    let g = path_graph(n, MuMode::Unit)?;

    // lambda_n <= 2^{p-1} h_n(P_n) = 2^p
    let mut top = 2f64.powf(p) * 1.01 + 1e-9;
    let mut expansions = 0;
    while shoot(n, p, q, top).sturm_index < n {
        top *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(SolverError::BracketFailure {
                k: n,
                trace: format!("sturm index never reached {n}"),
            }
            .into());
        }
    }

    let mut pairs = Vec::with_capacity(n);
    let mut diagnostics = Vec::with_capacity(n);
    let mut warnings = Vec::new();
    pairs.push(EigenPair::new(&g, p, 0.0, &vec![1.0; n])?);
    diagnostics.push(PairDiagnostics::new(1));

    let mut lo_start = 0.0;
    for k in 2..=n {
        let (mut lo, mut hi) = (lo_start, top);
        let mut n_lo = shoot(n, p, q, lo).sturm_index;
        let n_hi = shoot(n, p, q, hi).sturm_index;
        if n_lo > k - 1 || n_hi < k {
            return Err(SolverError::BracketFailure {
                k,
                trace: format!("index({lo}) = {n_lo}, index({hi}) = {n_hi}"),
            }
            .into());
        }
        let mut iterations = 0;
        while hi - lo > BRACKET_TOL.max(4.0 * f64::EPSILON * hi) && iterations < MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            let idx = shoot(n, p, q, mid).sturm_index;
            if idx < n_lo || idx > n_hi {
                return Err(SolverError::SturmViolation {
                    lambda: mid,
                    trace: format!("index {idx} outside [{n_lo}, {n_hi}] on [{lo}, {hi}]"),
                }
                .into());
            }
            if idx >= k {
                hi = mid;
            } else {
                lo = mid;
                n_lo = idx;
            }
            iterations += 1;
        }
        let lambda = polish(n, p, q, lo, hi);
        let trace = shoot(n, p, q, lambda);
        let f = &trace.f;
        if f[0] == 0.0 || f[n - 1] == 0.0 {
            return Err(SolverError::BracketFailure {
                k,
                trace: "eigenfunction vanishes at an endpoint".into(),
            }
            .into());
        }
        let fmax = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let zeros = generalized_zeros(f, 1e-9 * fmax).len();
        if zeros != k - 1 {
            return Err(SolverError::BracketFailure {
                k,
                trace: format!("eigenfunction has {zeros} generalized zeros, expected {}", k - 1),
            }
            .into());
        }
        let mut pair = EigenPair::new(&g, p, lambda, f)?;
        let mut diag = PairDiagnostics::new(k);
        if pair.residual > 1e-10 {
            // Shooting loses digits when edge differences are tiny (p near
            // 1); Newton from the shot pair recovers them.
            let opts = ContinuationOptions::default();
            if let Some((refined, stats)) = solve_direct(&g, &pair.f, p, &opts)? {
                let zeros = generalized_zeros(&refined.f, default_zero_tol(&refined.f)).len();
                let same = (refined.lambda - lambda).abs() <= 1e-6 * lambda.max(1.0);
                if refined.residual < pair.residual && zeros == k - 1 && same {
                    diag.iterations += stats.newton_iterations;
                    pair = refined;
                }
            }
        }
        if pair.residual > 1e-10 {
            diag.converged = false;
            warnings.push(format!(
                "pair {k}: residual {:.3e} above target 1e-10",
                pair.residual
            ));
        }
        diag.iterations += iterations;
        diagnostics.push(diag);
        pairs.push(pair);
        lo_start = hi;
    }
    for w in pairs.windows(2) {
        if w[1].lambda <= w[0].lambda {
            return Err(SolverError::SturmViolation {
                lambda: w[1].lambda,
                trace: "eigenvalues not strictly increasing".into(),
            }
            .into());
        }
    }
    Ok(Spectrum {
        p,
        method: Method::PathShooting,
        pairs,
        diagnostics,
        warnings,
    })
}

/// Regula falsi (Illinois) on the signed boundary defect inside `[lo, hi]`;
/// returns the trial value with the smallest defect.
fn polish(n: usize, p: f64, q: f64, lo: f64, hi: f64) -> f64 {
    let defect = |x: f64| shoot(n, p, q, x).signed_defect;
    let (mut a, mut fa) = (lo, defect(lo));
    let (mut b, mut fb) = (hi, defect(hi));
    let mut best = if fa.abs() <= fb.abs() { (a, fa.abs()) } else { (b, fb.abs()) };
    if fa * fb > 0.0 {
        return 0.5 * (lo + hi);
    }
    let mut side = 0;
    for _ in 0..60 {
        if fb == fa {
            break;
        }
        let c = (a * fb - b * fa) / (fb - fa);
        if !(c >= a.min(b) && c <= a.max(b)) {
            break;
        }
        let fc = defect(c);
        if fc.abs() < best.1 {
            best = (c, fc.abs());
        }
        if fc == 0.0 {
            break;
        }
        if fc * fb > 0.0 {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= 2.0 * f64::EPSILON * b.abs().max(a.abs()) {
            break;
        }
    }
    best.0
}
