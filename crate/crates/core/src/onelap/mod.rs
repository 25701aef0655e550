//! The set-valued 1-Laplacian in exact rational arithmetic.
//!
//! `(lambda, f)` is an eigenpair when there are antisymmetric edge values
//! `z(uv) in Sign(f(u) - f(v))` and `s(u) in Sign(f(u))` with
//! `sum_v w(uv) z(uv) = lambda mu(u) s(u)` at every vertex. Once the signs of
//! `f` and of its differences are fixed this is a linear feasibility
//! problem, decided here by an exact simplex.

mod simplex;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::cheeger::multiway_cheeger_all;
use crate::eigen::{Method, PairDiagnostics, Spectrum};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nodal::{default_zero_tol, strong_nodal_domains, weak_nodal_domains};
use crate::operator::EigenPair;
use simplex::{Lp, Outcome, Rel};

pub type Rational = BigRational;

/// Largest graph accepted by [`enumerate_1lap_eigenvalues`].
pub const ENUMERATION_CAP: usize = 6;

fn ser_q<S: Serializer>(x: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

fn ser_qs<S: Serializer>(xs: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| x.to_string()))
}

/// Exact value of a finite float.
pub fn rational(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::invalid(format!("{x} is not a finite number")))
}

/// `Sign(x)`: `{1}`, `{-1}` or `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignSet {
    Plus,
    Minus,
    Interval,
}

impl SignSet {
    pub fn of(x: &Rational) -> Self {
        if x.is_positive() {
            SignSet::Plus
        } else if x.is_negative() {
            SignSet::Minus
        } else {
            SignSet::Interval
        }
    }

    pub fn contains(self, x: &Rational) -> bool {
        match self {
            SignSet::Plus => x.is_one(),
            SignSet::Minus => *x == -Rational::one(),
            SignSet::Interval => x.abs() <= Rational::one(),
        }
    }

    fn fixed(self) -> Option<Rational> {
        match self {
            SignSet::Plus => Some(Rational::one()),
            SignSet::Minus => Some(-Rational::one()),
            SignSet::Interval => None,
        }
    }
}

/// A graph with exact rational weights and measure.
#[derive(Debug, Clone)]
pub struct RationalGraph {
    mu: Vec<Rational>,
    /// `(u, v, w)` with `u < v`.
    edges: Vec<(usize, usize, Rational)>,
    connected: bool,
}

impl RationalGraph {
    /// Converts every weight and measure exactly (floats are dyadic
    /// rationals).
    pub fn from_graph(g: &Graph) -> Result<Self> {
        Ok(RationalGraph {
            mu: g.mu().iter().map(|&m| rational(m)).collect::<Result<_>>()?,
            edges: g
                .edges()
                .iter()
                .map(|e| Ok((e.u, e.v, rational(e.w)?)))
                .collect::<Result<_>>()?,
            connected: g.is_connected(),
        })
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[Rational] {
        &self.mu
    }

    pub fn edges(&self) -> &[(usize, usize, Rational)] {
        &self.edges
    }
}

/// A witness (or the lack of one) for a 1-Laplacian eigenpair.
#[derive(Debug, Clone, Serialize)]
pub struct OneLapCertificate {
    pub feasible: bool,
    #[serde(serialize_with = "ser_q")]
    pub lambda: Rational,
    /// `z(uv)` per edge, in the graph's edge order (`u < v`); `z(vu) = -z(uv)`.
    #[serde(serialize_with = "ser_qs")]
    pub z: Vec<Rational>,
    #[serde(serialize_with = "ser_qs")]
    pub s: Vec<Rational>,
}

impl OneLapCertificate {
    /// Substitutes `z` and `s` into both inclusions and the vertex
    /// equations.
    pub fn recheck(&self, g: &RationalGraph, f: &[Rational]) -> bool {
        if !self.feasible || self.z.len() != g.edges.len() || self.s.len() != g.n() {
            return false;
        }
        let mut flow = vec![Rational::zero(); g.n()];
        for ((u, v, w), z) in g.edges.iter().zip(&self.z) {
            if !SignSet::of(&(&f[*u] - &f[*v])).contains(z) {
                return false;
            }
            flow[*u] += w * z;
            flow[*v] -= w * z;
        }
        (0..g.n()).all(|u| {
            SignSet::of(&f[u]).contains(&self.s[u]) && flow[u] == &self.lambda * &g.mu[u] * &self.s[u]
        })
    }
}

/// Decides exactly whether `(lambda, f)` is an eigenpair of the 1-Laplacian.
pub fn verify_1lap_eigenpair(
    g: &RationalGraph,
    f: &[Rational],
    lambda: &Rational,
) -> Result<OneLapCertificate> {
    if f.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            got: f.len(),
        });
    }
    if !g.connected {
        return Err(Error::InvalidGraph("1-Laplacian verification needs a connected graph".into()));
    }
    if lambda.is_negative() {
        return Err(Error::invalid("lambda must be >= 0"));
    }
    let mut lp = Lp::new();
    let one = Rational::one();
    let z_var: Vec<std::result::Result<usize, Rational>> = g
        .edges
        .iter()
        .map(|(u, v, _)| match SignSet::of(&(&f[*u] - &f[*v])).fixed() {
            Some(x) => Err(x),
            None => Ok(lp.add_var(-one.clone(), Some(one.clone()))),
        })
        .collect();
    let s_var: Vec<std::result::Result<usize, Rational>> = f
        .iter()
        .map(|x| match SignSet::of(x).fixed() {
            Some(x) => Err(x),
            None => Ok(lp.add_var(-one.clone(), Some(one.clone()))),
        })
        .collect();
    // sum_v w z(uv) - lambda mu(u) s(u) = 0
    for u in 0..g.n() {
        let mut coefs = Vec::new();
        let mut rhs = Rational::zero();
        for (e, (a, b, w)) in g.edges.iter().enumerate() {
            let sign = if *a == u {
                one.clone()
            } else if *b == u {
                -one.clone()
            } else {
                continue;
            };
            match &z_var[e] {
                Ok(j) => coefs.push((*j, sign * w)),
                Err(x) => rhs -= sign * w * x,
            }
        }
        let c = lambda * &g.mu[u];
        match &s_var[u] {
            Ok(j) => coefs.push((*j, -c)),
            Err(x) => rhs += c * x,
        }
        lp.add_row(coefs, Rel::Eq, rhs);
    }
    let pick = |v: &std::result::Result<usize, Rational>, x: &[Rational]| match v {
        Ok(j) => x[*j].clone(),
        Err(val) => val.clone(),
    };
    Ok(match lp.minimize(&[]) {
        Outcome::Optimal { x, .. } => OneLapCertificate {
            feasible: true,
            lambda: lambda.clone(),
            z: z_var.iter().map(|v| pick(v, &x)).collect(),
            s: s_var.iter().map(|v| pick(v, &x)).collect(),
        },
        _ => OneLapCertificate {
            feasible: false,
            lambda: lambda.clone(),
            z: Vec::new(),
            s: Vec::new(),
        },
    })
}

/// A sign/order pattern: a weak order of the vertex values (`levels`,
/// `0` = smallest) together with the position of zero.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Pattern {
    pub levels: Vec<usize>,
    /// `2j + 1`: level `j` is zero; `2j`: zero lies strictly between levels
    /// `j - 1` and `j` (below all levels for `j = 0`, above all for
    /// `j = m`).
    pub zero: usize,
}

impl Pattern {
    pub fn level_count(&self) -> usize {
        self.levels.iter().max().map_or(0, |m| m + 1)
    }

    fn flipped(&self) -> Pattern {
        let m = self.level_count();
        Pattern {
            levels: self.levels.iter().map(|l| m - 1 - l).collect(),
            zero: 2 * m - self.zero,
        }
    }

    /// An integer-valued function realizing the pattern.
    pub fn representative(&self) -> Vec<i64> {
        let j = (self.zero / 2) as i64;
        let on_level = self.zero % 2 == 1;
        self.levels
            .iter()
            .map(|&l| {
                let l = l as i64;
                if on_level || l < j {
                    l - j
                } else {
                    l - j + 1
                }
            })
            .collect()
    }
}

/// The feasible eigenvalues `[lo, hi]` of one pattern.
#[derive(Debug, Clone, Serialize)]
pub struct PatternEigenvalues {
    pub pattern: Pattern,
    #[serde(serialize_with = "ser_q")]
    pub lo: Rational,
    #[serde(serialize_with = "ser_q")]
    pub hi: Rational,
    pub representative: Vec<i64>,
}

/// A maximal interval of eigenvalues (a point when `lo = hi`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenvalueInterval {
    #[serde(serialize_with = "ser_q")]
    pub lo: Rational,
    #[serde(serialize_with = "ser_q")]
    pub hi: Rational,
}

impl EigenvalueInterval {
    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }
}

/// Every eigenvalue of the 1-Laplacian on a graph with at most
/// [`ENUMERATION_CAP`] vertices.
#[derive(Debug, Clone, Serialize)]
pub struct OneLapEnumeration {
    /// Feasible patterns up to `f -> -f`, in canonical order.
    pub patterns: Vec<PatternEigenvalues>,
    /// Union over all patterns.
    pub eigenvalues: Vec<EigenvalueInterval>,
    /// Union over nonconstant patterns.
    pub nonconstant: Vec<EigenvalueInterval>,
}

fn merge(mut xs: Vec<EigenvalueInterval>) -> Vec<EigenvalueInterval> {
    xs.sort_by(|a, b| a.lo.cmp(&b.lo).then(a.hi.cmp(&b.hi)));
    let mut out: Vec<EigenvalueInterval> = Vec::new();
    for x in xs {
        match out.last_mut() {
            Some(last) if x.lo <= last.hi => {
                if x.hi > last.hi {
                    last.hi = x.hi;
                }
            }
            _ => out.push(x),
        }
    }
    out
}

fn weak_orders(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for m in 1..=n {
        let mut code = vec![0usize; n];
        loop {
            let mut hit = vec![false; m];
            code.iter().for_each(|&c| hit[c] = true);
            if hit.iter().all(|&h| h) {
                out.push(code.clone());
            }
            let mut i = 0;
            while i < n && code[i] == m - 1 {
                code[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
            code[i] += 1;
        }
    }
    out
}

fn patterns(n: usize) -> Vec<Pattern> {
    let mut out = Vec::new();
    for levels in weak_orders(n) {
        let m = levels.iter().max().unwrap() + 1;
        for zero in 0..=2 * m {
            let p = Pattern {
                levels: levels.clone(),
                zero,
            };
            if m == 1 && zero == 1 {
                continue;
            }
            if p <= p.flipped() {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

/// `[min lambda, max lambda]` over the eigenvalues admitted by a pattern.
fn pattern_interval(g: &RationalGraph, p: &Pattern) -> Option<(Rational, Rational)> {
    let f: Vec<Rational> = p
        .representative()
        .into_iter()
        .map(|v| Rational::from_integer(BigInt::from(v)))
        .collect();
    let one = Rational::one();
    let mut lp = Lp::new();
    let lambda = lp.add_var(Rational::zero(), None);
    let z_var: Vec<std::result::Result<usize, Rational>> = g
        .edges
        .iter()
        .map(|(u, v, _)| match SignSet::of(&(&f[*u] - &f[*v])).fixed() {
            Some(x) => Err(x),
            None => Ok(lp.add_var(-one.clone(), Some(one.clone()))),
        })
        .collect();
    for u in 0..g.n() {
        let mut coefs = Vec::new();
        let mut rhs = Rational::zero();
        for (e, (a, b, w)) in g.edges.iter().enumerate() {
            let sign = if *a == u {
                one.clone()
            } else if *b == u {
                -one.clone()
            } else {
                continue;
            };
            match &z_var[e] {
                Ok(j) => coefs.push((*j, sign * w)),
                Err(x) => rhs -= sign * w * x,
            }
        }
        match SignSet::of(&f[u]).fixed() {
            // flow(u) = lambda mu(u) s(u)
            Some(s) => {
                coefs.push((lambda, -(&g.mu[u] * s)));
                lp.add_row(coefs, Rel::Eq, rhs);
            }
            // |flow(u)| <= lambda mu(u)
            None => {
                let mut upper = coefs.clone();
                upper.push((lambda, -g.mu[u].clone()));
                lp.add_row(upper, Rel::Le, rhs.clone());
                coefs.push((lambda, g.mu[u].clone()));
                lp.add_row(coefs, Rel::Ge, rhs);
            }
        }
    }
    let lo = match lp.minimize(&[(lambda, one.clone())]) {
        Outcome::Optimal { value, .. } => value,
        _ => return None,
    };
    let hi = match lp.minimize(&[(lambda, -one)]) {
        Outcome::Optimal { value, .. } => -value,
        _ => unreachable!("a pattern with a nonzero vertex bounds lambda"),
    };
    Some((lo, hi))
}

/// All eigenvalues of the 1-Laplacian, by case analysis over every weak
/// order of the vertex values with a designated zero level.
pub fn enumerate_1lap_eigenvalues(g: &Graph) -> Result<OneLapEnumeration> {
    if g.n() > ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            n: g.n(),
            cap: ENUMERATION_CAP,
        });
    }
    let rg = RationalGraph::from_graph(g)?;
    let found: Vec<PatternEigenvalues> = patterns(g.n())
        .into_par_iter()
        .filter_map(|p| {
            let (lo, hi) = pattern_interval(&rg, &p)?;
            Some(PatternEigenvalues {
                representative: p.representative(),
                pattern: p,
                lo,
                hi,
            })
        })
        .collect();
    let interval = |x: &PatternEigenvalues| EigenvalueInterval {
        lo: x.lo.clone(),
        hi: x.hi.clone(),
    };
    let eigenvalues = merge(found.iter().map(interval).collect());
    let nonconstant = merge(
        found
            .iter()
            .filter(|x| x.pattern.level_count() >= 2)
            .map(interval)
            .collect(),
    );
    Ok(OneLapEnumeration {
        patterns: found,
        eigenvalues,
        nonconstant,
    })
}

/// Nodal counts of one pattern feasible at an indexed eigenvalue.
#[derive(Debug, Clone, Serialize)]
pub struct OneLapNodalCheck {
    pub pattern: Pattern,
    pub strong: usize,
    pub weak: usize,
    pub pass: bool,
}

/// An eigenvalue `lambda_k` pinned down by `h_2 <= lambda_k <= h_k`.
#[derive(Debug, Clone, Serialize)]
pub struct IndexedEigenvalue {
    pub k: usize,
    pub h_k: f64,
    /// The eigenvalue if exactly one lies in `[h_2, h_k]` (`0` for `k = 1`).
    #[serde(serialize_with = "ser_opt_q")]
    pub lambda: Option<Rational>,
    /// First index and size of the run of equal determined values.
    pub group_first: usize,
    pub multiplicity: usize,
    /// `k + r - 1` with `k = group_first`.
    pub bound: usize,
    pub checks: Vec<OneLapNodalCheck>,
}

fn ser_opt_q<S: Serializer>(x: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(x) => s.serialize_str(&x.to_string()),
        None => s.serialize_none(),
    }
}

/// Eigenvalues at `p = 1` with their variational indices where these are
/// forced, and the nodal bound for every eigenfunction pattern.
#[derive(Debug, Clone, Serialize)]
pub struct OneLapReport {
    pub enumeration: OneLapEnumeration,
    pub h: Vec<f64>,
    pub indexed: Vec<IndexedEigenvalue>,
    pub pass: bool,
}

fn intervals_in(set: &[EigenvalueInterval], lo: &Rational, hi: &Rational) -> Vec<EigenvalueInterval> {
    set.iter()
        .filter(|x| &x.lo <= hi && &x.hi >= lo)
        .map(|x| EigenvalueInterval {
            lo: x.lo.clone().max(lo.clone()),
            hi: x.hi.clone().min(hi.clone()),
        })
        .collect()
}

/// The variational `lambda_k` at `p = 1` lies in `[lambda_2, 2^0 h_k]` with
/// `lambda_2 = h_2`; when the eigenvalue set meets `[h_2, h_k]` in a single
/// point, that point is `lambda_k`. Every pattern feasible at a determined
/// `lambda_k` must have at most `k + r - 1` strong and weak nodal domains.
pub fn one_laplacian_report(g: &Graph) -> Result<OneLapReport> {
    let enumeration = enumerate_1lap_eigenvalues(g)?;
    let n = g.n();
    let h: Vec<f64> = multiway_cheeger_all(g, n)?.iter().map(|x| x.h).collect();
    let hq: Vec<Rational> = h.iter().map(|&x| rational(x)).collect::<Result<_>>()?;
    // h_2 is attained as a cut ratio, so its float rounding may miss the
    // exact eigenvalue by one ulp; snap to nearby eigenvalue endpoints.
    let snap = |x: &Rational| -> Rational {
        for iv in &enumeration.eigenvalues {
            for e in [&iv.lo, &iv.hi] {
                let d = (e - x).abs().to_f64().unwrap_or(f64::INFINITY);
                if d <= 1e-12 * e.to_f64().unwrap_or(0.0).abs().max(1.0) {
                    return e.clone();
                }
            }
        }
        x.clone()
    };
    let hq: Vec<Rational> = hq.iter().map(snap).collect();
    let mut lambdas: Vec<Option<Rational>> = Vec::with_capacity(n);
    for k in 1..=n {
        if k == 1 {
            lambdas.push(Some(Rational::zero()));
            continue;
        }
        let hit = intervals_in(&enumeration.eigenvalues, &hq[1], &hq[k - 1]);
        lambdas.push(match hit.as_slice() {
            [x] if x.is_point() => Some(x.lo.clone()),
            _ => None,
        });
    }
    let mut indexed = Vec::with_capacity(n);
    let mut pass = true;
    for k in 1..=n {
        let Some(lambda) = lambdas[k - 1].clone() else {
            indexed.push(IndexedEigenvalue {
                k,
                h_k: h[k - 1],
                lambda: None,
                group_first: k,
                multiplicity: 0,
                bound: 0,
                checks: Vec::new(),
            });
            continue;
        };
        let same = |i: usize| lambdas[i].as_ref() == Some(&lambda);
        let first = (0..k).rev().take_while(|&i| same(i)).last().unwrap() + 1;
        let last = (k - 1..n).take_while(|&i| same(i)).last().unwrap() + 1;
        let r = last - first + 1;
        let bound = first + r - 1;
        let checks: Vec<OneLapNodalCheck> = enumeration
            .patterns
            .iter()
            .filter(|x| x.lo <= lambda && lambda <= x.hi)
            .map(|x| {
                let f: Vec<f64> = x.representative.iter().map(|&v| v as f64).collect();
                let tol = default_zero_tol(&f);
                let strong = strong_nodal_domains(g, &f, tol)?.count();
                let weak = weak_nodal_domains(g, &f, tol)?.count();
                Ok(OneLapNodalCheck {
                    pattern: x.pattern.clone(),
                    strong,
                    weak,
                    pass: strong <= bound && weak <= bound,
                })
            })
            .collect::<Result<_>>()?;
        pass &= checks.iter().all(|c| c.pass);
        indexed.push(IndexedEigenvalue {
            k,
            h_k: h[k - 1],
            lambda: Some(lambda),
            group_first: first,
            multiplicity: r,
            bound,
            checks,
        });
    }
    Ok(OneLapReport {
        enumeration,
        h,
        indexed,
        pass,
    })
}

impl OneLapReport {
    /// Determined eigenvalues as a `p = 1` spectrum. Each eigenfunction is
    /// the feasible pattern with the most weak nodal domains.
    pub fn spectrum(&self, g: &Graph) -> Result<Spectrum> {
        let mut pairs = Vec::new();
        let mut diagnostics = Vec::new();
        let mut warnings = Vec::new();
        for ix in &self.indexed {
            let Some(lambda) = &ix.lambda else {
                warnings.push(format!("lambda_{} is not determined by h_2 and h_{}", ix.k, ix.k));
                break;
            };
            let pattern = if ix.k == 1 {
                None
            } else {
                ix.checks.iter().max_by(|a, b| a.weak.cmp(&b.weak).then(b.pattern.cmp(&a.pattern)))
            };
            let f: Vec<f64> = match pattern {
                Some(c) => c.pattern.representative().iter().map(|&v| v as f64).collect(),
                None => vec![1.0; g.n()],
            };
            let lambda = lambda
                .to_f64()
                .ok_or_else(|| Error::invalid("eigenvalue out of range"))?;
            pairs.push(EigenPair::new(g, 1.0, lambda, &f)?);
            diagnostics.push(PairDiagnostics::new(ix.k));
        }
        Ok(Spectrum {
            p: 1.0,
            method: Method::OneLaplacian,
            pairs,
            diagnostics,
            warnings,
        })
    }
}
