//! Variational eigenvalue sequences of the graph p-Laplacian.
//!
//! * `p = 2`: dense symmetric eigensolve ([`solve_p2_spectrum`]).
//! * `p != 2`, general graphs: continuation in `p` from the `p = 2` pairs
//!   ([`variational_spectrum`]), followed by an upper-bound check against
//!   `2^{p-1} h_k` that flags pairs which left the variational branch.
//! * unit paths: Sturm-indexed shooting ([`path_spectrum`]).

pub mod continuation;
pub mod dense;
pub mod path;

use rayon::prelude::*;
use serde::Serialize;

pub use continuation::{continue_in_p, ContinuationOptions, ContinuationStats};
use continuation::{follow_in_p, solve_direct};
pub use dense::solve_p2_spectrum;
pub use path::{path_shoot, path_spectrum, ShootingTrace};

use crate::cheeger::{cut_ratio, multiway_cheeger_all, EXACT_CAP};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSubset};
use crate::operator::EigenPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DenseP2,
    Continuation,
    PathShooting,
    OneLaplacian,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDiagnostics {
    /// 1-based position in the ascending spectrum.
    pub index: usize,
    /// Newton iterations (continuation) or bisection steps (shooting).
    pub iterations: usize,
    pub p_steps: usize,
    pub halvings: usize,
    /// The `p = 2` seed belonged to a multiple eigenvalue.
    pub branch_ambiguous: bool,
    /// `2^{p-1} h_k(G)` when computed.
    pub upper_bound: Option<f64>,
    /// `lambda_k` exceeded `upper_bound` beyond tolerance.
    pub left_variational_branch: bool,
    /// Residual at or below the solver target.
    pub converged: bool,
    /// Turning points in `p` passed by pseudo-arclength continuation.
    pub folds: usize,
    pub arclength_steps: usize,
    /// The branch from `p = 2` ended before the target exponent and this
    /// pair came from a direct Newton solve at the target instead.
    pub recovered: bool,
}

impl PairDiagnostics {
    pub fn new(index: usize) -> Self {
        PairDiagnostics {
            index,
            iterations: 0,
            p_steps: 0,
            halvings: 0,
            branch_ambiguous: false,
            upper_bound: None,
            left_variational_branch: false,
            converged: true,
            folds: 0,
            arclength_steps: 0,
            recovered: false,
        }
    }
}

/// Eigenpairs in ascending order of `lambda`.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub p: f64,
    pub method: Method,
    pub pairs: Vec<EigenPair>,
    pub diagnostics: Vec<PairDiagnostics>,
    pub warnings: Vec<String>,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|x| x.lambda).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.pairs.iter().map(|x| x.residual).fold(0.0, f64::max)
    }
}

/// Options for [`variational_spectrum`] and [`solve_spectrum`].
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumOptions {
    pub continuation: ContinuationOptions,
    /// Largest `n` for which the `2^{p-1} h_k` check runs (exact `h_k`).
    pub bound_check_max_n: usize,
    /// Relative gap below which `p = 2` eigenvalues count as one.
    pub multiplicity_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            continuation: ContinuationOptions::default(),
            bound_check_max_n: 12,
            multiplicity_tol: 1e-7,
        }
    }
}

/// Same eigenvalue and eigenfunctions equal up to sign.
fn same_pair(a: &EigenPair, b: &EigenPair) -> bool {
    let close = |s: f64| a.f.iter().zip(&b.f).all(|(x, y)| (x - s * y).abs() <= 1e-6);
    same_eigenvalue(a.lambda, b.lambda, 1e-8) && (close(1.0) || close(-1.0))
}

pub(crate) fn same_eigenvalue(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-12
}

/// `p = 2` pairs followed into `p` by continuation, re-sorted ascending.
///
/// Pairs whose eigenvalue exceeds the certified upper bound
/// `2^{p-1} h_k(G)` (plus `1e-9 + 1e-6 lambda_k`), or whose residual stays
/// above the continuation target, are flagged in `diagnostics` and reported
/// in `warnings`; they are kept in the output.
pub fn variational_spectrum(g: &Graph, p: f64, opts: &SpectrumOptions) -> Result<Spectrum> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::invalid(format!("variational spectrum needs p > 1 (got {p})")));
    }
    let base = solve_p2_spectrum(g)?;
    if p == 2.0 {
        return Ok(base);
    }
    let n = g.n();
    let lambdas = base.eigenvalues();
    let ambiguous: Vec<bool> = (0..n)
        .map(|i| {
            (i > 0 && same_eigenvalue(lambdas[i], lambdas[i - 1], opts.multiplicity_tol))
                || (i + 1 < n && same_eigenvalue(lambdas[i], lambdas[i + 1], opts.multiplicity_tol))
        })
        .collect();

    let results: Vec<Result<(EigenPair, ContinuationStats)>> = base
        .pairs
        .par_iter()
        .enumerate()
        .map(|(i, seed)| follow_in_p(g, seed, p, &opts.continuation, i + 1))
        .collect();
    let mut warnings = base.warnings.clone();
    let mut slots: Vec<Option<(EigenPair, ContinuationStats, bool)>> = Vec::with_capacity(n);
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((pair, stats)) => slots.push(Some((pair, stats, false))),
            Err(Error::Solver(e)) => {
                slots.push(None);
                failures.push((i, e));
            }
            Err(e) => return Err(e),
        }
    }
    // a branch can end at a fold short of p: fall back to direct solves
    for (i, err) in failures {
        let seed = &base.pairs[i].f;
        let mut guesses = vec![seed.clone()];
        for j in [i.wrapping_sub(1), i + 1] {
            if let Some(other) = base.pairs.get(j).filter(|_| j > 0) {
                for s in [0.5, -0.5] {
                    guesses.push(seed.iter().zip(&other.f).map(|(a, b)| a + s * b).collect());
                }
            }
        }
        let mut found = None;
        for guess in &guesses {
            if let Some((pair, stats)) = solve_direct(g, guess, p, &opts.continuation)? {
                let duplicate = pair.lambda.abs() <= 1e-9
                    || slots.iter().flatten().any(|(other, _, _)| same_pair(&pair, other));
                if !duplicate {
                    found = Some((pair, stats));
                    break;
                }
            }
        }
        match found {
            Some((pair, stats)) => {
                warnings.push(format!(
                    "seed {}: branch from p = 2 did not reach p = {p} ({err}); replaced by a direct solve",
                    i + 1
                ));
                slots[i] = Some((pair, stats, true));
            }
            None => return Err(err.into()),
        }
    }
    let mut followed: Vec<_> = slots
        .into_iter()
        .flatten()
        .zip(ambiguous.iter().copied())
        .map(|((pair, stats, recovered), amb)| (pair, stats, amb, recovered))
        .collect();
    followed.sort_by(|a, b| a.0.lambda.total_cmp(&b.0.lambda));

    if ambiguous.iter().any(|&a| a) {
        warnings.push("multiple eigenvalue at p = 2: continuation branches may be ambiguous".into());
    }
    let bounds = if n <= opts.bound_check_max_n.min(EXACT_CAP) {
        let h = multiway_cheeger_all(g, n)?;
        Some(h.iter().map(|s| 2f64.powf(p - 1.0) * s.h).collect::<Vec<_>>())
    } else {
        None
    };

    let mut pairs = Vec::with_capacity(n);
    let mut diagnostics = Vec::with_capacity(n);
    for (k, (pair, stats, amb, recovered)) in followed.into_iter().enumerate() {
        let mut d = PairDiagnostics::new(k + 1);
        d.iterations = stats.newton_iterations;
        d.p_steps = stats.p_steps;
        d.halvings = stats.halvings;
        d.branch_ambiguous = amb;
        d.recovered = recovered;
        d.folds = stats.folds;
        d.arclength_steps = stats.arclength_steps;
        d.converged = pair.residual <= opts.continuation.target_residual;
        if !d.converged {
            warnings.push(format!(
                "pair {}: residual {:.3e} above target {:.1e}",
                k + 1,
                pair.residual,
                opts.continuation.target_residual
            ));
        }
        if stats.folds > 0 {
            warnings.push(format!(
                "pair {}: branch passed {} fold(s) in p",
                k + 1,
                stats.folds
            ));
        }
        if let Some(b) = &bounds {
            d.upper_bound = Some(b[k]);
            if pair.lambda > b[k] + 1e-9 + 1e-6 * pair.lambda {
                d.left_variational_branch = true;
                warnings.push(format!(
                    "pair {}: continuation left the variational branch (lambda = {} > {})",
                    k + 1,
                    pair.lambda,
                    b[k]
                ));
            }
        }
        pairs.push(pair);
        diagnostics.push(d);
    }
    Ok(Spectrum {
        p,
        method: Method::Continuation,
        pairs,
        diagnostics,
        warnings,
    })
}

/// Picks the solver: shooting for unit paths (eigenfunctions mapped back to
/// the graph's vertex order), dense at `p = 2`, continuation otherwise.
pub fn solve_spectrum(g: &Graph, p: f64, opts: &SpectrumOptions) -> Result<Spectrum> {
    if let Some(order) = g.unit_path_order() {
        let mut s = path_spectrum(g.n(), p)?;
        for pair in &mut s.pairs {
            let mut f = vec![0.0; g.n()];
            for (pos, &u) in order.iter().enumerate() {
                f[u] = pair.f[pos];
            }
            pair.f = f;
        }
        return Ok(s);
    }
    if p == 2.0 {
        solve_p2_spectrum(g)
    } else {
        variational_spectrum(g, p, opts)
    }
}

/// `2^{p-1} max_i c(A_i)` for disjoint nonempty `A_1..A_k`: an upper bound
/// on `lambda_k^{(p)}` through the span of their indicator functions.
pub fn indicator_span_upper_bound(g: &Graph, p: f64, subsets: &[VertexSubset]) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!("exponent must satisfy p >= 1 (got {p})")));
    }
    if subsets.is_empty() {
        return Err(Error::invalid("need at least one subset"));
    }
    for (i, a) in subsets.iter().enumerate() {
        if a.is_empty() {
            return Err(Error::invalid(format!("subset {} is empty", i + 1)));
        }
        for b in &subsets[..i] {
            if !a.is_disjoint(b) {
                return Err(Error::invalid("subsets overlap"));
            }
        }
    }
    let mut worst = 0.0f64;
    for a in subsets {
        worst = worst.max(cut_ratio(g, a)?);
    }
    Ok(2f64.powf(p - 1.0) * worst)
}
