//! Strong and weak nodal domains, generalized zeros on paths, Rayleigh
//! quotients over nodal spans, and nodal-count certification.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::eigen::{same_eigenvalue, Spectrum};
use crate::error::{Error, Result};
use crate::graph::{components_of, Graph, VertexSubset};
use crate::operator::{rayleigh_quotient, EigenPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodalKind {
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalDomain {
    pub sign: Sign,
    pub vertices: VertexSubset,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalDecomposition {
    pub kind: NodalKind,
    pub domains: Vec<NodalDomain>,
    /// Vertices with `|f(u)| <= zero_tol`.
    pub zero_set: VertexSubset,
}

impl NodalDecomposition {
    pub fn count(&self) -> usize {
        self.domains.len()
    }
}

/// `1e-9 * max|f|`.
pub fn default_zero_tol(f: &[f64]) -> f64 {
    1e-9 * f.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn check_len(g: &Graph, f: &[f64]) -> Result<()> {
    if f.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            got: f.len(),
        });
    }
    Ok(())
}

fn zero_set(f: &[f64], tol: f64) -> VertexSubset {
    VertexSubset::from_mask(&f.iter().map(|x| x.abs() <= tol).collect::<Vec<_>>())
}

fn domains(g: &Graph, sign: Sign, keep: impl Fn(usize) -> bool) -> Vec<NodalDomain> {
    components_of(g, keep)
        .into_iter()
        .map(|c| NodalDomain {
            sign,
            vertices: VertexSubset::new(g.n(), c).expect("component vertices are in range"),
        })
        .collect()
}

/// Components of `{f > tol}` and `{f < -tol}`, positive domains first.
pub fn strong_nodal_domains(g: &Graph, f: &[f64], zero_tol: f64) -> Result<NodalDecomposition> {
    check_len(g, f)?;
    let mut out = domains(g, Sign::Plus, |u| f[u] > zero_tol);
    out.extend(domains(g, Sign::Minus, |u| f[u] < -zero_tol));
    Ok(NodalDecomposition {
        kind: NodalKind::Strong,
        domains: out,
        zero_set: zero_set(f, zero_tol),
    })
}

/// Components of `{f >= -tol}` and `{f <= tol}`, positive domains first.
///
/// A component on which `f` vanishes is maximal for both sets; it is
/// reported once, with sign `+`.
pub fn weak_nodal_domains(g: &Graph, f: &[f64], zero_tol: f64) -> Result<NodalDecomposition> {
    check_len(g, f)?;
    let mut out = domains(g, Sign::Plus, |u| f[u] >= -zero_tol);
    let plus: Vec<VertexSubset> = out.iter().map(|d| d.vertices.clone()).collect();
    out.extend(
        domains(g, Sign::Minus, |u| f[u] <= zero_tol)
            .into_iter()
            .filter(|d| !plus.contains(&d.vertices)),
    );
    Ok(NodalDecomposition {
        kind: NodalKind::Weak,
        domains: out,
        zero_set: zero_set(f, zero_tol),
    })
}

pub fn nodal_domains(
    g: &Graph,
    f: &[f64],
    kind: NodalKind,
    zero_tol: f64,
) -> Result<NodalDecomposition> {
    match kind {
        NodalKind::Strong => strong_nodal_domains(g, f, zero_tol),
        NodalKind::Weak => weak_nodal_domains(g, f, zero_tol),
    }
}

/// Left endpoints `a` (0-based) of the generalized zeros `(a, a+1]` of a
/// sequence: `f(a) != 0` and `f(a) f(a+1) <= 0`, where entries with
/// `|x| <= tol` count as zero.
pub fn generalized_zeros(f: &[f64], tol: f64) -> Vec<usize> {
    let z = |x: f64| if x.abs() <= tol { 0.0 } else { x };
    (0..f.len().saturating_sub(1))
        .filter(|&a| {
            let (x, y) = (z(f[a]), z(f[a + 1]));
            x != 0.0 && x * y <= 0.0
        })
        .collect()
}

/// [`generalized_zeros`] of `f` read along a path graph. Positions refer to
/// the path order returned by [`Graph::path_order`].
pub fn generalized_zeros_on_path(g: &Graph, f: &[f64], tol: f64) -> Result<Vec<usize>> {
    check_len(g, f)?;
    let order = g
        .path_order()
        .ok_or_else(|| Error::InvalidGraph("generalized zeros need a path graph".into()))?;
    let along: Vec<f64> = order.iter().map(|&u| f[u]).collect();
    Ok(generalized_zeros(&along, tol))
}

/// Largest `R_p(sum_i alpha_i f|_{A_i})` found over the domains `A_i` of
/// `pair.f`: `samples` random unit vectors `alpha`, the coordinate vectors,
/// and every sign pattern `alpha in {1,-1}^m` when `m <= 12`.
pub fn nodal_space_max_rq(
    g: &Graph,
    pair: &EigenPair,
    kind: NodalKind,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if pair.p > 1.0 && pair.residual > 1e-8 {
        return Err(Error::invalid(format!(
            "eigenpair residual {:.3e} exceeds 1e-8",
            pair.residual
        )));
    }
    let dec = nodal_domains(g, &pair.f, kind, default_zero_tol(&pair.f))?;
    let m = dec.count();
    if m == 0 {
        return Err(Error::invalid("empty nodal decomposition"));
    }
    let pieces: Vec<&VertexSubset> = dec.domains.iter().map(|d| &d.vertices).collect();
    let combine = |alpha: &[f64]| {
        let mut h = vec![0.0; g.n()];
        for (a, piece) in alpha.iter().zip(&pieces) {
            for &u in piece.members() {
                h[u] += a * pair.f[u];
            }
        }
        h
    };
    let mut best = f64::NEG_INFINITY;
    let mut eval = |alpha: &[f64]| -> Result<()> {
        let h = combine(alpha);
        if h.iter().any(|&x| x != 0.0) {
            best = best.max(rayleigh_quotient(g, &h, pair.p)?);
        }
        Ok(())
    };
    for i in 0..m {
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        eval(&e)?;
    }
    if m <= 12 {
        // R_p is even, so fixing alpha_0 = 1 covers all patterns.
        for bits in 0..1u32 << (m - 1) {
            let alpha: Vec<f64> = (0..m)
                .map(|i| if i > 0 && bits >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            eval(&alpha)?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let mut alpha: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        alpha.iter_mut().for_each(|a| *a /= norm);
        eval(&alpha)?;
    }
    Ok(best.max(0.0))
}

/// Nodal counts of one eigenpair against their bounds.
#[derive(Debug, Clone, Serialize)]
pub struct NodalCheck {
    /// 1-based position in the spectrum.
    pub k: usize,
    pub lambda: f64,
    pub residual: f64,
    /// First index and size of the group of (numerically) equal eigenvalues.
    pub group_first: usize,
    pub multiplicity: usize,
    pub strong: usize,
    pub weak: usize,
    pub strong_bound: usize,
    pub weak_bound: usize,
    pub strong_pass: bool,
    pub weak_pass: bool,
    /// Whether the weak count is exactly 2; only checked for `lambda_2` pairs
    /// with `p > 1`.
    pub lambda2_two_weak: Option<bool>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NodalReport {
    pub p: f64,
    pub multiplicity_tol: f64,
    pub checks: Vec<NodalCheck>,
    pub pass: bool,
}

/// Groups of consecutive eigenvalues within `rel` of each other, as
/// `(first, size)` per position (0-based `first`).
pub(crate) fn multiplicity_groups(lambdas: &[f64], rel: f64) -> Vec<(usize, usize)> {
    let mut out = vec![(0, 0); lambdas.len()];
    let mut start = 0;
    for i in 1..=lambdas.len() {
        if i == lambdas.len() || !same_eigenvalue(lambdas[i - 1], lambdas[i], rel) {
            for slot in &mut out[start..i] {
                *slot = (start, i - start);
            }
            start = i;
        }
    }
    out
}

/// Checks every pair of `spectrum` against the nodal bounds.
///
/// With `k` the first index of the pair's eigenvalue and `r` its
/// multiplicity: strong `<= k + r - 1`; weak `<= k` for `p > 1` and
/// `<= k + r - 1` for `p = 1`; `lambda_2` eigenfunctions have exactly two
/// weak domains when `p > 1`.
pub fn certify_nodal_bounds(
    g: &Graph,
    spectrum: &Spectrum,
    multiplicity_tol: f64,
) -> Result<NodalReport> {
    let lambdas = spectrum.eigenvalues();
    let groups = multiplicity_groups(&lambdas, multiplicity_tol);
    let p = spectrum.p;
    let mut checks = Vec::with_capacity(lambdas.len());
    for (i, pair) in spectrum.pairs.iter().enumerate() {
        let tol = default_zero_tol(&pair.f);
        let strong = strong_nodal_domains(g, &pair.f, tol)?.count();
        let weak = weak_nodal_domains(g, &pair.f, tol)?.count();
        let (first, r) = groups[i];
        let k = first + 1;
        let strong_bound = k + r - 1;
        let weak_bound = if p > 1.0 { k } else { k + r - 1 };
        let lambda2_two_weak = (p > 1.0 && k == 2).then_some(weak == 2);
        let strong_pass = strong <= strong_bound;
        let weak_pass = weak <= weak_bound;
        checks.push(NodalCheck {
            k: i + 1,
            lambda: pair.lambda,
            residual: pair.residual,
            group_first: k,
            multiplicity: r,
            strong,
            weak,
            strong_bound,
            weak_bound,
            strong_pass,
            weak_pass,
            lambda2_two_weak,
            pass: strong_pass && weak_pass && lambda2_two_weak.unwrap_or(true),
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(NodalReport {
        p,
        multiplicity_tol,
        checks,
        pass,
    })
}
