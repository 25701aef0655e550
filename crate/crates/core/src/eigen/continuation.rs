//! Path-following of eigenpairs in the exponent `p`.
//!
//! At each grid point the augmented system
//!
//! ```text
//! (Delta_p f)(u) - lambda mu(u) Phi_p(f(u)) = 0     for every u
//! (sum_u mu(u) |f(u)|^p - 1) / p             = 0
//! ```
//!
//! is solved by damped Newton. For targets below 2 the system is written in
//! mixed form with unknowns `y = Phi_p(f)` on vertices and the fluxes
//! `g = Phi_p(f(u) - f(v))` on edges:
//!
//! ```text
//! sum_{e at u} +-w(e) g(e) - lambda mu(u) y(u)   = 0
//! Phi_q(g(e)) - Phi_q(y(u)) + Phi_q(y(v))        = 0
//! (sum_u mu(u) |y(u)|^q - 1) / p                 = 0
//! ```
//!
//! Every term is C^1 for `q > 2`, so vanishing edge differences and vanishing
//! vertex values no longer make the Jacobian blow up.
//!
//! When natural continuation cannot advance (a fold in `p`), the solver
//! switches to pseudo-arclength continuation on `(state, lambda, p)` and
//! follows the solution curve until it crosses the target exponent.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result, SolverError};
use crate::graph::Graph;
use crate::operator::{
    conjugate, phi_prime_capped, phi_unchecked, rayleigh_quotient, residual_unchecked, EigenPair,
};

/// Knobs for [`continue_in_p`].
#[derive(Debug, Clone, Serialize)]
pub struct ContinuationOptions {
    /// Initial number of geometric steps between the seed and target exponent.
    pub steps: usize,
    /// Maximum depth of step bisection after a failed Newton solve.
    pub max_halvings: usize,
    pub max_newton_iterations: usize,
    /// Residual demanded of the returned pair.
    pub target_residual: f64,
    /// Smallest target exponent accepted.
    pub p_min: f64,
    /// Floor on `|x|` when differentiating `Phi_r` for `r < 2`.
    pub jacobian_floor: f64,
    /// Step budget of the pseudo-arclength fallback.
    pub arclength_max_steps: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            steps: 16,
            max_halvings: 12,
            max_newton_iterations: 60,
            target_residual: 1e-9,
            p_min: 1.05,
            jacobian_floor: 1e-12,
            arclength_max_steps: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ContinuationStats {
    pub p_steps: usize,
    pub halvings: usize,
    pub newton_iterations: usize,
    /// Accepted pseudo-arclength steps.
    pub arclength_steps: usize,
    /// Turning points in `p` passed on the way to the target.
    pub folds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Form {
    Primal,
    Mixed,
}

struct System<'a> {
    g: &'a Graph,
    form: Form,
    floor: f64,
    /// Scale of the residual rows, for absolute tolerances.
    scale: f64,
}

/// `x` is `[state, lambda]`; the state is `f` (primal) or `[y, g]` (mixed).
impl<'a> System<'a> {
    fn new(g: &'a Graph, form: Form, floor: f64) -> Self {
        let scale = (0..g.n())
            .map(|u| g.degree(u).max(g.mu()[u]))
            .fold(1.0, f64::max);
        System { g, form, floor, scale }
    }

    fn dim(&self) -> usize {
        match self.form {
            Form::Primal => self.g.n(),
            Form::Mixed => self.g.n() + self.g.edges().len(),
        }
    }

    fn encode(&self, f: &[f64], lambda: f64, p: f64) -> Vec<f64> {
        let mut x: Vec<f64> = match self.form {
            Form::Primal => f.to_vec(),
            Form::Mixed => f
                .iter()
                .map(|&v| phi_unchecked(p, v))
                .chain(self.g.edges().iter().map(|e| phi_unchecked(p, f[e.u] - f[e.v])))
                .collect(),
        };
        x.push(lambda);
        x
    }

    fn decode(&self, x: &[f64], p: f64) -> Vec<f64> {
        let n = self.g.n();
        match self.form {
            Form::Primal => x[..n].to_vec(),
            Form::Mixed => {
                let q = conjugate(p);
                x[..n].iter().map(|&v| phi_unchecked(q, v)).collect()
            }
        }
    }

    /// Re-expresses a state at exponent `from` in the coordinates of `to`,
    /// carrying edge differences through the fluxes rather than through
    /// differences of vertex values.
    fn remap(&self, x: &[f64], from: f64, to: f64) -> Vec<f64> {
        match self.form {
            Form::Primal => x.to_vec(),
            Form::Mixed => {
                let q = conjugate(from);
                let d = x.len() - 1;
                x[..d]
                    .iter()
                    .map(|&v| phi_unchecked(to, phi_unchecked(q, v)))
                    .chain(std::iter::once(x[d]))
                    .collect()
            }
        }
    }

    /// Sets vertex values and edge differences below `1e-13 max |f|` to
    /// exact zeros, or `None` if there are none.
    fn snap(&self, x: &[f64], p: f64) -> Option<Vec<f64>> {
        let f = self.decode(x, p);
        let cut = 1e-13 * f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let q = conjugate(p);
        let dim = self.dim();
        let mut out = x.to_vec();
        let mut changed = false;
        for v in &mut out[..dim] {
            let magnitude = match self.form {
                Form::Primal => v.abs(),
                // vertex values and edge differences alike are Phi_q of the unknown
                Form::Mixed => phi_unchecked(q, *v).abs(),
            };
            if *v != 0.0 && magnitude <= cut {
                *v = 0.0;
                changed = true;
            }
        }
        changed.then_some(out)
    }

    fn lambda(&self, x: &[f64]) -> f64 {
        x[self.dim()]
    }

    fn residual(&self, x: &[f64], p: f64) -> DVector<f64> {
        let g = self.g;
        let n = g.n();
        let mu = g.mu();
        let lambda = self.lambda(x);
        let dim = self.dim();
        let mut r = DVector::zeros(dim + 1);
        match self.form {
            Form::Primal => {
                let f = &x[..n];
                let mut norm = 0.0;
                for u in 0..n {
                    let lap: f64 = g
                        .neighbors(u)
                        .iter()
                        .map(|&(v, w)| w * phi_unchecked(p, f[u] - f[v]))
                        .sum();
                    r[u] = lap - lambda * mu[u] * phi_unchecked(p, f[u]);
                    norm += mu[u] * f[u].abs().powf(p);
                }
                r[n] = (norm - 1.0) / p;
            }
            Form::Mixed => {
                let q = conjugate(p);
                let y = &x[..n];
                let flux = &x[n..dim];
                for (e, edge) in g.edges().iter().enumerate() {
                    r[edge.u] += edge.w * flux[e];
                    r[edge.v] -= edge.w * flux[e];
                    r[n + e] = phi_unchecked(q, flux[e]) - phi_unchecked(q, y[edge.u])
                        + phi_unchecked(q, y[edge.v]);
                }
                let mut norm = 0.0;
                for u in 0..n {
                    r[u] -= lambda * mu[u] * y[u];
                    norm += mu[u] * y[u].abs().powf(q);
                }
                r[dim] = (norm - 1.0) / p;
            }
        }
        r
    }

    fn jacobian(&self, x: &[f64], p: f64) -> DMatrix<f64> {
        let g = self.g;
        let n = g.n();
        let mu = g.mu();
        let lambda = self.lambda(x);
        let dim = self.dim();
        let mut j = DMatrix::zeros(dim + 1, dim + 1);
        match self.form {
            Form::Primal => {
                let f = &x[..n];
                for u in 0..n {
                    let mut diag = 0.0;
                    for &(v, w) in g.neighbors(u) {
                        let d = w * phi_prime_capped(p, f[u] - f[v], self.floor);
                        diag += d;
                        j[(u, v)] -= d;
                    }
                    j[(u, u)] += diag - lambda * mu[u] * phi_prime_capped(p, f[u], self.floor);
                    let pf = phi_unchecked(p, f[u]);
                    j[(u, n)] = -mu[u] * pf;
                    j[(n, u)] = mu[u] * pf;
                }
            }
            Form::Mixed => {
                let q = conjugate(p);
                let y = &x[..n];
                let flux = &x[n..dim];
                for (e, edge) in g.edges().iter().enumerate() {
                    j[(edge.u, n + e)] = edge.w;
                    j[(edge.v, n + e)] = -edge.w;
                    j[(n + e, n + e)] = phi_prime_capped(q, flux[e], self.floor);
                    j[(n + e, edge.u)] = -phi_prime_capped(q, y[edge.u], self.floor);
                    j[(n + e, edge.v)] = phi_prime_capped(q, y[edge.v], self.floor);
                }
                for u in 0..n {
                    j[(u, u)] = -lambda * mu[u];
                    j[(u, dim)] = -mu[u] * y[u];
                    j[(dim, u)] = mu[u] * phi_unchecked(q, y[u]) / (p - 1.0);
                }
            }
        }
        j
    }

    /// Central difference of the residual in `p`.
    fn d_dp(&self, x: &[f64], p: f64) -> DVector<f64> {
        let h = 1e-6 * p;
        (self.residual(x, p + h) - self.residual(x, p - h)) / (2.0 * h)
    }

    fn tight(&self) -> f64 {
        1e-13 * self.scale
    }

    fn accept(&self, opts: &ContinuationOptions) -> f64 {
        (0.1 * opts.target_residual).max(self.tight())
    }
}

struct Solve {
    x: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton with Armijo backtracking on the Euclidean residual norm.
/// Converged means `max |r| <= tight`, or `<= accept` once progress stops.
fn damped_newton(
    mut x: Vec<f64>,
    residual: impl Fn(&[f64]) -> DVector<f64>,
    jacobian: impl Fn(&[f64]) -> DMatrix<f64>,
    max_iterations: usize,
    tight: f64,
    accept: f64,
) -> Solve {
    let mut r = residual(&x);
    let mut iterations = 0;
    let done = |x: Vec<f64>, iterations: usize, rmax: f64, strict: bool| Solve {
        x,
        iterations,
        converged: rmax.is_finite() && rmax <= if strict { tight } else { accept },
    };
    loop {
        let rmax = max_abs(&r);
        if rmax <= tight || iterations >= max_iterations {
            return done(x, iterations, rmax, false);
        }
        iterations += 1;
        let jac = jacobian(&x);
        let rhs = -&r;
        let lu_step = jac.clone().lu().solve(&rhs).filter(|s| s.iter().all(|v| v.is_finite()));
        let accepted = match lu_step.and_then(|s| armijo(&x, &s, &r, &residual)) {
            Some(next) => Some(next),
            // rank-deficient systems (vanishing derivatives of Phi at zero)
            None => least_squares_step(jac, &rhs).and_then(|s| armijo(&x, &s, &r, &residual)),
        };
        match accepted {
            Some((tx, tr)) => {
                x = tx;
                r = tr;
            }
            None => return done(x, iterations, rmax, false),
        }
    }
}

/// Backtracking along `step` until `|r|` drops by the Armijo factor.
fn armijo(
    x: &[f64],
    step: &DVector<f64>,
    r: &DVector<f64>,
    residual: &impl Fn(&[f64]) -> DVector<f64>,
) -> Option<(Vec<f64>, DVector<f64>)> {
    let r0 = r.norm();
    let mut t = 1.0;
    while t > 1e-12 {
        let tx: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
        let tr = residual(&tx);
        if tr.iter().all(|v| v.is_finite()) && tr.norm() <= (1.0 - 1e-4 * t) * r0 {
            return Some((tx, tr));
        }
        t *= 0.5;
    }
    None
}

/// Minimum-norm least-squares step with singular values below
/// `1e-12 sigma_max` discarded.
fn least_squares_step(jac: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = jac.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax.is_finite() && smax > 0.0) {
        return None;
    }
    svd.solve(rhs, 1e-12 * smax)
        .ok()
        .filter(|s| s.iter().all(|v| v.is_finite()))
}

fn solve_fixed_p(sys: &System, p: f64, guess: Vec<f64>, opts: &ContinuationOptions) -> Solve {
    let run = |x0: Vec<f64>| {
        damped_newton(
            x0,
            |x| sys.residual(x, p),
            |x| sys.jacobian(x, p),
            opts.max_newton_iterations,
            sys.tight(),
            sys.accept(opts),
        )
    };
    let first = run(guess);
    if first.converged && first.iterations <= 20 {
        return first;
    }
    // slow or failed: retry with rounding-level entries set to exact zeros
    let Some(snapped) = sys.snap(&first.x, p) else {
        return first;
    };
    let second = run(snapped);
    let iterations = first.iterations + second.iterations;
    let pick = if second.converged || !first.converged { second } else { first };
    Solve { iterations, ..pick }
}

/// Rejects a converged solve that jumped away from the previous point.
fn stayed_on_branch(sys: &System, prev: &[f64], p_prev: f64, next: &[f64], p_next: f64) -> bool {
    let f0 = sys.decode(prev, p_prev);
    let f1 = sys.decode(next, p_next);
    let fmax = f0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let moved = f1.iter().zip(&f0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let l0 = sys.lambda(prev);
    moved <= 0.3 * fmax && (sys.lambda(next) - l0).abs() <= 0.25 * l0.abs() + 1e-9
}

/// Unit tangent of the solution curve of `F(x, p) = 0` at `(x, p)`,
/// oriented along `prev`.
fn tangent(sys: &System, xp: &[f64], prev: &DVector<f64>) -> Option<DVector<f64>> {
    let k = xp.len() - 1;
    let (x, p) = (&xp[..k], xp[k]);
    let mut m = DMatrix::zeros(k + 1, k + 1);
    m.view_mut((0, 0), (k, k)).copy_from(&sys.jacobian(x, p));
    m.view_mut((0, k), (k, 1)).copy_from(&sys.d_dp(x, p));
    m.view_mut((k, 0), (1, k + 1)).copy_from(&prev.transpose());
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let t = m.lu().solve(&rhs)?;
    let norm = t.norm();
    if !norm.is_finite() || norm == 0.0 {
        return None;
    }
    let t = t / norm;
    Some(if t.dot(prev) < 0.0 { -t } else { t })
}

/// Pseudo-arclength continuation from a converged `(x, p_from)` until the
/// curve crosses `p_target`, where a fixed-`p` solve finishes the job.
fn arclength(
    sys: &System,
    x0: &[f64],
    p_from: f64,
    p_target: f64,
    opts: &ContinuationOptions,
    stats: &mut ContinuationStats,
) -> Option<Vec<f64>> {
    let k = x0.len();
    let mut xp: Vec<f64> = x0.iter().copied().chain(std::iter::once(p_from)).collect();
    let mut seed_dir = DVector::zeros(k + 1);
    seed_dir[k] = (p_target - p_from).signum();
    let mut t = tangent(sys, &xp, &seed_dir)?;
    let p_floor = 1.0 + 0.5 * (opts.p_min - 1.0);
    let p_ceiling = 2.0 * p_target.max(p_from).max(2.0);
    let (s_min, s_max) = (1e-12, 0.05);
    let mut s = 1e-3;
    let mut attempts = 0;
    while stats.arclength_steps < opts.arclength_max_steps && attempts < 20 * opts.arclength_max_steps {
        attempts += 1;
        if s < s_min {
            return None;
        }
        let pred: Vec<f64> = xp.iter().zip(t.iter()).map(|(a, b)| a + s * b).collect();
        if !(p_floor..=p_ceiling).contains(&pred[k]) {
            s *= 0.5;
            continue;
        }
        let t_fixed = t.clone();
        let pred_v = DVector::from_column_slice(&pred);
        let corr = damped_newton(
            pred.clone(),
            |z| {
                let mut r = sys.residual(&z[..k], z[k]).insert_row(k, 0.0);
                r[k] = t_fixed.dot(&(DVector::from_column_slice(z) - &pred_v));
                r
            },
            |z| {
                let mut m = DMatrix::zeros(k + 1, k + 1);
                m.view_mut((0, 0), (k, k)).copy_from(&sys.jacobian(&z[..k], z[k]));
                m.view_mut((0, k), (k, 1)).copy_from(&sys.d_dp(&z[..k], z[k]));
                m.view_mut((k, 0), (1, k + 1)).copy_from(&t_fixed.transpose());
                m
            },
            12,
            sys.tight(),
            sys.accept(opts),
        );
        stats.newton_iterations += corr.iterations;
        if !corr.converged || !(p_floor..=p_ceiling).contains(&corr.x[k]) {
            s *= 0.5;
            continue;
        }
        let Some(t_new) = tangent(sys, &corr.x, &t) else {
            s *= 0.5;
            continue;
        };
        if t_new.dot(&t) < 0.9 {
            s *= 0.5;
            continue;
        }
        let (p_old, p_new) = (xp[k], corr.x[k]);
        if (p_old - p_target) * (p_new - p_target) <= 0.0 {
            let theta = (p_target - p_old) / (p_new - p_old);
            let guess: Vec<f64> = (0..k).map(|i| xp[i] + theta * (corr.x[i] - xp[i])).collect();
            let fin = solve_fixed_p(sys, p_target, guess, opts);
            stats.newton_iterations += fin.iterations;
            if fin.converged && stayed_on_branch(sys, &corr.x[..k], p_new, &fin.x, p_target) {
                stats.arclength_steps += 1;
                return Some(fin.x);
            }
            s *= 0.5;
            continue;
        }
        if t_new[k] * t[k] < 0.0 {
            stats.folds += 1;
        }
        stats.arclength_steps += 1;
        if corr.iterations <= 3 {
            s = (1.5 * s).min(s_max);
        }
        xp = corr.x;
        t = t_new;
    }
    None
}

/// Greedy coordinate search over nearby floats for the smallest max-norm
/// residual. For `p` near 1 an edge difference far below `|f|` maps to a
/// large flux, so a few ulps in `f` can matter more than Newton accuracy.
fn ulp_polish(g: &Graph, f: &[f64], lambda: f64, p: f64) -> Vec<f64> {
    let n = g.n();
    let mu = g.mu();
    let vertex_defect = |f: &[f64], u: usize| {
        let lap: f64 = g
            .neighbors(u)
            .iter()
            .map(|&(v, w)| w * phi_unchecked(p, f[u] - f[v]))
            .sum();
        (lap - lambda * mu[u] * phi_unchecked(p, f[u])).abs()
    };
    // max defect over u and its neighbours, then the global max
    let local = |f: &[f64], u: usize| {
        g.neighbors(u)
            .iter()
            .map(|&(v, _)| vertex_defect(f, v))
            .fold(vertex_defect(f, u), f64::max)
    };
    let mut f = f.to_vec();
    let mut best = residual_unchecked(g, &f, lambda, p);
    for _sweep in 0..50 {
        let mut improved = false;
        for u in 0..n {
            let before = local(&f, u);
            let original = f[u];
            let mut pick = None;
            let mut pick_local = before;
            for dir in [1.0f64, -1.0] {
                let mut x = original;
                for k in 1..=64u32 {
                    x = if dir > 0.0 { x.next_up() } else { x.next_down() };
                    if !k.is_power_of_two() {
                        continue;
                    }
                    f[u] = x;
                    let l = local(&f, u);
                    if l < pick_local {
                        pick_local = l;
                        pick = Some(x);
                    }
                }
            }
            f[u] = original;
            if let Some(x) = pick {
                f[u] = x;
                let r = residual_unchecked(g, &f, lambda, p);
                if r < best {
                    best = r;
                    improved = true;
                } else if r > best {
                    f[u] = original;
                }
            }
        }
        if !improved {
            break;
        }
    }
    f
}

/// Follows `seed` from its exponent to `p_target` along a geometric grid.
///
/// `index` only labels errors. Newton failures trigger step bisection up to
/// `opts.max_halvings` levels; past that, pseudo-arclength continuation takes
/// over from the last converged point. Fails with
/// [`SolverError::NonConvergence`] if the final residual exceeds
/// `opts.target_residual`.
pub fn continue_in_p(
    g: &Graph,
    seed: &EigenPair,
    p_target: f64,
    opts: &ContinuationOptions,
    index: usize,
) -> Result<(EigenPair, ContinuationStats)> {
    let (pair, stats) = follow_in_p(g, seed, p_target, opts, index)?;
    if pair.residual > opts.target_residual {
        return Err(SolverError::NonConvergence {
            index,
            p: p_target,
            iterations: stats.newton_iterations,
            residual: pair.residual,
            last_lambda: pair.lambda,
            last_iterate: pair.f,
        }
        .into());
    }
    Ok((pair, stats))
}

/// [`continue_in_p`] without the final residual check: the branch was
/// followed to `p_target` and the returned pair is the best float
/// representation found. Near `p = 1` that residual can stay above target
/// because edge differences fall below the float spacing of `f`.
pub(crate) fn follow_in_p(
    g: &Graph,
    seed: &EigenPair,
    p_target: f64,
    opts: &ContinuationOptions,
    index: usize,
) -> Result<(EigenPair, ContinuationStats)> {
    if !(p_target.is_finite() && p_target > 1.0) {
        return Err(Error::invalid(format!("target exponent must exceed 1 (got {p_target})")));
    }
    if p_target < opts.p_min {
        return Err(Error::invalid(format!(
            "target exponent {p_target} is below the continuation minimum {}",
            opts.p_min
        )));
    }
    if seed.f.len() != g.n() {
        return Err(Error::LengthMismatch { expected: g.n(), got: seed.f.len() });
    }
    if seed.p > 1.0 && seed.residual > 1e-8 {
        return Err(Error::invalid(format!(
            "seed residual {:.3e} exceeds 1e-8",
            seed.residual
        )));
    }
    let mut stats = ContinuationStats::default();
    if p_target == seed.p {
        return Ok((seed.clone(), stats));
    }
    // lambda = 0 pairs are piecewise constant and independent of p
    if seed.lambda.abs() <= 1e-12 {
        let pair = EigenPair::new(g, p_target, 0.0, &seed.f)?;
        if pair.residual <= 1e-12 {
            return Ok((pair, stats));
        }
    }

    let form = if p_target < 2.0 { Form::Mixed } else { Form::Primal };
    let sys = System::new(g, form, opts.jacobian_floor);
    let p0 = seed.p;
    let steps = opts.steps.max(1);
    let grid: Vec<f64> = (0..=steps)
        .map(|i| {
            if i == steps {
                p_target
            } else {
                p0 * (p_target / p0).powf(i as f64 / steps as f64)
            }
        })
        .collect();

    let mut x = sys.encode(&seed.f, seed.lambda, p0);
    let mut p_cur = p0;
    // previous converged point for the secant predictor
    let mut before: Option<(Vec<f64>, f64)> = None;
    // (target, depth) stack; processed back to front
    let mut pending: Vec<(f64, usize)> = grid[1..].iter().rev().map(|&p| (p, 0)).collect();
    while let Some((p_next, depth)) = pending.pop() {
        let plain = sys.remap(&x, p_cur, p_next);
        let mut guesses = vec![];
        if let Some((xb, pb)) = &before {
            let older = sys.remap(xb, *pb, p_next);
            let theta = (p_next - p_cur) / (p_cur - pb);
            guesses.push(plain.iter().zip(&older).map(|(a, b)| a + theta * (a - b)).collect());
        }
        guesses.push(plain);
        let mut advanced = false;
        for guess in guesses {
            let res = solve_fixed_p(&sys, p_next, guess, opts);
            stats.newton_iterations += res.iterations;
            if res.converged && stayed_on_branch(&sys, &x, p_cur, &res.x, p_next) {
                before = Some((std::mem::replace(&mut x, res.x), p_cur));
                p_cur = p_next;
                stats.p_steps += 1;
                advanced = true;
                break;
            }
        }
        if advanced {
            continue;
        }
        if depth >= opts.max_halvings {
            match arclength(&sys, &x, p_cur, p_target, opts, &mut stats) {
                Some(xt) => {
                    x = xt;
                    p_cur = p_target;
                    break;
                }
                None => {
                    return Err(SolverError::StepHalvingExhausted {
                        index,
                        p_from: p_cur,
                        p_to: p_next,
                    }
                    .into())
                }
            }
        }
        stats.halvings += 1;
        let mid = (p_cur * p_next).sqrt();
        pending.push((p_next, depth + 1));
        pending.push((mid, depth + 1));
    }
    debug_assert_eq!(p_cur, p_target);
    let pair = finish(g, &sys, &x, p_target, opts, &mut stats)?;
    Ok((pair, stats))
}

/// Newton at fixed `p` from `f_guess` (any scale), with no branch tracking.
/// Returns `None` if Newton does not converge.
pub(crate) fn solve_direct(
    g: &Graph,
    f_guess: &[f64],
    p: f64,
    opts: &ContinuationOptions,
) -> Result<Option<(EigenPair, ContinuationStats)>> {
    let form = if p < 2.0 { Form::Mixed } else { Form::Primal };
    let sys = System::new(g, form, opts.jacobian_floor);
    let guess = EigenPair::new(g, p, 0.0, f_guess)?;
    let lambda = rayleigh_quotient(g, &guess.f, p)?;
    let res = solve_fixed_p(&sys, p, sys.encode(&guess.f, lambda, p), opts);
    let mut stats = ContinuationStats {
        newton_iterations: res.iterations,
        ..Default::default()
    };
    if !res.converged {
        return Ok(None);
    }
    let pair = finish(g, &sys, &res.x, p, opts, &mut stats)?;
    Ok(Some((pair, stats)))
}

/// Turns a converged state into the best float eigenpair available.
fn finish(
    g: &Graph,
    sys: &System,
    x: &[f64],
    p_target: f64,
    opts: &ContinuationOptions,
    stats: &mut ContinuationStats,
) -> Result<EigenPair> {
    // drive the system to rounding level; tiny edge differences need it
    let polished = damped_newton(
        x.to_vec(),
        |z| sys.residual(z, p_target),
        |z| sys.jacobian(z, p_target),
        8,
        0.0,
        f64::INFINITY,
    );
    stats.newton_iterations += polished.iterations;
    let mut pair = EigenPair::new(g, p_target, sys.lambda(x), &sys.decode(x, p_target))?;
    let candidate = EigenPair::new(
        g,
        p_target,
        sys.lambda(&polished.x),
        &sys.decode(&polished.x, p_target),
    )?;
    if candidate.residual < pair.residual {
        pair = candidate;
    }
    let cut = 1e-13 * pair.f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if pair.f.iter().any(|v| *v != 0.0 && v.abs() <= cut) {
        let f: Vec<f64> = pair.f.iter().map(|&v| if v.abs() <= cut { 0.0 } else { v }).collect();
        let candidate = EigenPair::new(g, p_target, pair.lambda, &f)?;
        if candidate.residual < pair.residual {
            pair = candidate;
        }
    }
    if pair.residual > 0.01 * opts.target_residual {
        let f = ulp_polish(g, &pair.f, pair.lambda, p_target);
        let candidate = EigenPair::new(g, p_target, pair.lambda, &f)?;
        if candidate.residual < pair.residual {
            pair = candidate;
        }
    }
    Ok(pair)
}
