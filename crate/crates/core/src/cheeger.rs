//! Cut ratios, multiway Cheeger constants, sweep cuts and the two-sided
//! Cheeger certificate for `lambda_k`.

use std::cmp::Ordering;
use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::{solve_p2_spectrum, Spectrum};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSubset};
use crate::nodal::{default_zero_tol, strong_nodal_domains};
use crate::operator::{conjugate, rayleigh_quotient};

/// Largest `n` accepted by the exact multiway Cheeger search.
pub const EXACT_CAP: usize = 14;

/// Families are `k` disjoint nonempty subsets; they need not cover `V`.
pub const FAMILY_DEFINITION: &str = "disjoint nonempty subsets, not necessarily covering V";

fn boundary_and_measure(g: &Graph, members: &[usize], inside: &[bool]) -> (f64, f64) {
    let mut bnd = 0.0;
    let mut mu = 0.0;
    for &u in members {
        mu += g.mu()[u];
        for &(v, w) in g.neighbors(u) {
            if !inside[v] {
                bnd += w;
            }
        }
    }
    (bnd, mu)
}

/// `c(A) = w(E(A, V \ A)) / mu(A)`.
pub fn cut_ratio(g: &Graph, a: &VertexSubset) -> Result<f64> {
    if a.universe() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            got: a.universe(),
        });
    }
    if a.is_empty() {
        return Err(Error::invalid("cut ratio of the empty set"));
    }
    let (bnd, mu) = boundary_and_measure(g, a.members(), &a.mask());
    Ok(bnd / mu)
}

/// `k >= 1` nonempty pairwise disjoint subsets, ordered by smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct SubsetFamily {
    subsets: Vec<VertexSubset>,
}

impl SubsetFamily {
    pub fn new(mut subsets: Vec<VertexSubset>) -> Result<Self> {
        if subsets.is_empty() {
            return Err(Error::invalid("a subset family needs k >= 1 subsets"));
        }
        for (i, a) in subsets.iter().enumerate() {
            if a.is_empty() {
                return Err(Error::invalid(format!("subset {} is empty", i + 1)));
            }
            if a.universe() != subsets[0].universe() {
                return Err(Error::invalid("subsets come from different graphs"));
            }
            if subsets[..i].iter().any(|b| !a.is_disjoint(b)) {
                return Err(Error::invalid("subsets overlap"));
            }
        }
        subsets.sort_by_key(|s| s.members()[0]);
        Ok(SubsetFamily { subsets })
    }

    pub fn subsets(&self) -> &[VertexSubset] {
        &self.subsets
    }

    pub fn k(&self) -> usize {
        self.subsets.len()
    }

    /// `max_i c(A_i)`.
    pub fn max_cut_ratio(&self, g: &Graph) -> Result<f64> {
        let mut m = 0.0f64;
        for a in &self.subsets {
            m = m.max(cut_ratio(g, a)?);
        }
        Ok(m)
    }

    fn key(&self) -> Vec<&[usize]> {
        self.subsets.iter().map(|s| s.members()).collect()
    }
}

/// `h_k(G)` with a minimizing family.
#[derive(Debug, Clone, Serialize)]
pub struct MultiwayCheeger {
    pub k: usize,
    pub h: f64,
    pub family: SubsetFamily,
    /// `false` for the spectral heuristic, whose `h` is only an upper bound.
    pub exact: bool,
}

fn check_k(g: &Graph, k: usize) -> Result<()> {
    if k == 0 || k > g.n() {
        return Err(Error::invalid(format!("k must satisfy 1 <= k <= n = {} (got {k})", g.n())));
    }
    Ok(())
}

/// Exact `h_k` by branch and bound over assignments `V -> {0, 1..k}`
/// (`0` = unused), with blocks numbered by first appearance.
///
/// Among minimizers the family whose blocks, sorted by smallest member and
/// compared as vertex lists, is lexicographically smallest is returned.
pub fn multiway_cheeger(g: &Graph, k: usize) -> Result<MultiwayCheeger> {
    check_k(g, k)?;
    if g.n() > EXACT_CAP {
        return Err(Error::CapExceeded {
            n: g.n(),
            cap: EXACT_CAP,
        });
    }
    Ok(Search::new(g, k).run())
}

/// `h_1 .. h_kmax`, computed in parallel.
pub fn multiway_cheeger_all(g: &Graph, kmax: usize) -> Result<Vec<MultiwayCheeger>> {
    check_k(g, kmax)?;
    (1..=kmax).into_par_iter().map(|k| multiway_cheeger(g, k)).collect()
}

const MAX_K: usize = EXACT_CAP;

struct Search<'a> {
    g: &'a Graph,
    k: usize,
    order: Vec<usize>,
    /// mu of the vertices at positions `>= i` of `order`.
    mu_rest: Vec<f64>,
    assign: Vec<usize>,
    best: f64,
    best_family: Option<SubsetFamily>,
}

#[derive(Clone, Copy)]
struct State {
    opened: usize,
    fixed: [f64; MAX_K + 1],
    mu: [f64; MAX_K + 1],
}

impl<'a> Search<'a> {
    fn new(g: &'a Graph, k: usize) -> Self {
        let n = g.n();
        // breadth-first order keeps boundary weights fixed early
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                order.push(u);
                for &(v, _) in g.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        let mut mu_rest = vec![0.0; n + 1];
        for i in (0..n).rev() {
            mu_rest[i] = mu_rest[i + 1] + g.mu()[order[i]];
        }
        Search {
            g,
            k,
            order,
            mu_rest,
            assign: vec![usize::MAX; n],
            best: f64::INFINITY,
            best_family: None,
        }
    }

    fn eps(&self) -> f64 {
        1e-12 * self.best.max(1.0)
    }

    /// The `k` vertices with the smallest `c({u})`.
    fn seed(&mut self) {
        let g = self.g;
        let mut single: Vec<(f64, usize)> = (0..g.n()).map(|u| (g.degree(u) / g.mu()[u], u)).collect();
        single.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let subsets = single[..self.k]
            .iter()
            .map(|&(_, u)| VertexSubset::new(g.n(), [u]).unwrap())
            .collect();
        let family = SubsetFamily::new(subsets).unwrap();
        self.best = family.max_cut_ratio(g).unwrap();
        self.best_family = Some(family);
    }

    fn run(mut self) -> MultiwayCheeger {
        self.seed();
        let state = State {
            opened: 0,
            fixed: [0.0; MAX_K + 1],
            mu: [0.0; MAX_K + 1],
        };
        self.descend(0, state);
        MultiwayCheeger {
            k: self.k,
            h: self.best,
            family: self.best_family.unwrap(),
            exact: true,
        }
    }

    fn descend(&mut self, depth: usize, s: State) {
        let n = self.g.n();
        let remaining = n - depth;
        if s.opened + remaining < self.k {
            return;
        }
        let mut lb = 0.0f64;
        for b in 1..=s.opened {
            lb = lb.max(s.fixed[b] / (s.mu[b] + self.mu_rest[depth]));
        }
        if lb > self.best + self.eps() {
            return;
        }
        if depth == n {
            self.leaf();
            return;
        }
        let u = self.order[depth];
        let top = (s.opened + 1).min(self.k);
        for label in 0..=top {
            let mut t = s;
            if label > s.opened {
                t.opened = label;
            }
            for &(v, w) in self.g.neighbors(u) {
                let lv = self.assign[v];
                if lv == usize::MAX || lv == label {
                    continue;
                }
                if lv > 0 {
                    t.fixed[lv] += w;
                }
                if label > 0 {
                    t.fixed[label] += w;
                }
            }
            if label > 0 {
                t.mu[label] += self.g.mu()[u];
            }
            self.assign[u] = label;
            self.descend(depth + 1, t);
            self.assign[u] = usize::MAX;
        }
    }

    fn leaf(&mut self) {
        let n = self.g.n();
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); self.k];
        for u in 0..n {
            let l = self.assign[u];
            if l > 0 {
                blocks[l - 1].push(u);
            }
        }
        if blocks.iter().any(|b| b.is_empty()) {
            return;
        }
        let subsets = blocks
            .into_iter()
            .map(|b| VertexSubset::new(n, b).unwrap())
            .collect();
        let family = SubsetFamily::new(subsets).unwrap();
        let value = family.max_cut_ratio(self.g).unwrap();
        let eps = self.eps();
        let better = match &self.best_family {
            None => true,
            Some(cur) => {
                value < self.best - eps
                    || (value <= self.best + eps && family.key().cmp(&cur.key()) == Ordering::Less)
            }
        };
        if better {
            self.best = if value < self.best - eps { value } else { value.min(self.best) };
            self.best_family = Some(family);
        }
    }
}

/// Upper bound on `h_k` from recursive spectral bisection; `exact = false`.
///
/// The largest block is split repeatedly: along components if its induced
/// subgraph is disconnected, otherwise at the prefix of the Fiedler order
/// minimizing the larger of the two cut ratios.
pub fn multiway_cheeger_approx(g: &Graph, k: usize) -> Result<MultiwayCheeger> {
    check_k(g, k)?;
    let n = g.n();
    let mut blocks: Vec<Vec<usize>> = vec![(0..n).collect()];
    while blocks.len() < k {
        let (idx, _) = blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.len() >= 2)
            .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0)))
            .expect("k <= n leaves a splittable block");
        let block = blocks.swap_remove(idx);
        let (a, b) = bisect(g, &block)?;
        blocks.push(a);
        blocks.push(b);
    }
    let subsets = blocks
        .into_iter()
        .map(|b| VertexSubset::new(n, b))
        .collect::<Result<Vec<_>>>()?;
    let family = SubsetFamily::new(subsets)?;
    Ok(MultiwayCheeger {
        k,
        h: family.max_cut_ratio(g)?,
        family,
        exact: false,
    })
}

fn bisect(g: &Graph, block: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let local: std::collections::HashMap<usize, usize> =
        block.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let edges: Vec<(usize, usize, f64)> = g
        .edges()
        .iter()
        .filter_map(|e| Some((*local.get(&e.u)?, *local.get(&e.v)?, e.w)))
        .collect();
    let mu: Vec<f64> = block.iter().map(|&u| g.mu()[u]).collect();
    let sub = Graph::new(mu, edges)?;
    let comps = sub.components();
    if comps.len() > 1 {
        let first: Vec<usize> = comps[0].iter().map(|&i| block[i]).collect();
        let rest: Vec<usize> = block.iter().copied().filter(|u| !first.contains(u)).collect();
        return Ok((first, rest));
    }
    let fiedler = &solve_p2_spectrum(&sub)?.pairs[1].f;
    let mut sorted: Vec<usize> = (0..block.len()).collect();
    sorted.sort_by(|&a, &b| fiedler[a].total_cmp(&fiedler[b]).then(a.cmp(&b)));
    let mut best = (f64::INFINITY, 1);
    for cut in 1..block.len() {
        let a = VertexSubset::new(g.n(), sorted[..cut].iter().map(|&i| block[i]))?;
        let b = VertexSubset::new(g.n(), sorted[cut..].iter().map(|&i| block[i]))?;
        let v = cut_ratio(g, &a)?.max(cut_ratio(g, &b)?);
        if v < best.0 {
            best = (v, cut);
        }
    }
    let a = sorted[..best.1].iter().map(|&i| block[i]).collect();
    let b = sorted[best.1..].iter().map(|&i| block[i]).collect();
    Ok((a, b))
}

/// The best threshold set `A_t = {u : |f(u)|^p > t}` of a vertex function.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCut {
    pub set: VertexSubset,
    pub cut_ratio: f64,
    pub threshold: f64,
    pub rayleigh_quotient: f64,
    /// `p R_p(f)^{1/p} (tau/2)^{1/q}`.
    pub bound: f64,
    pub satisfied: bool,
}

/// `p R_p(f)^{1/p} (tau/2)^{1/q}`, an upper bound on the best sweep cut.
pub fn sweep_bound(g: &Graph, f: &[f64], p: f64) -> Result<f64> {
    let r = rayleigh_quotient(g, f, p)?;
    let inv_q = 1.0 / conjugate(p);
    Ok(p * r.powf(1.0 / p) * (g.tau() / 2.0).powf(inv_q))
}

/// Evaluates `c(A_t)` for every `t in {|f(u)|^p} u {0}` with `A_t` nonempty
/// and returns the minimizer (the smallest such `t` on ties).
pub fn sweep_cut(g: &Graph, f: &[f64], p: f64) -> Result<SweepCut> {
    let bound = sweep_bound(g, f, p)?;
    let rq = rayleigh_quotient(g, f, p)?;
    let pw: Vec<f64> = f.iter().map(|x| x.abs().powf(p)).collect();
    let mut thresholds: Vec<f64> = pw.iter().copied().chain([0.0]).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut best: Option<(f64, f64, VertexSubset)> = None;
    for t in thresholds {
        let mask: Vec<bool> = pw.iter().map(|&x| x > t).collect();
        if !mask.contains(&true) {
            continue;
        }
        let a = VertexSubset::from_mask(&mask);
        let c = cut_ratio(g, &a)?;
        if best.as_ref().is_none_or(|b| c < b.0) {
            best = Some((c, t, a));
        }
    }
    let (c, t, set) = best.expect("f is nonzero");
    Ok(SweepCut {
        set,
        cut_ratio: c,
        threshold: t,
        rayleigh_quotient: rq,
        bound,
        satisfied: c <= bound * (1.0 + 1e-12),
    })
}

/// Both sides of `(2/tau)^{p-1} (h_m/p)^p <= lambda_k <= 2^{p-1} h_k` for
/// one eigenpair, with `m` its number of strong nodal domains.
#[derive(Debug, Clone, Serialize)]
pub struct CheegerCertificate {
    pub p: f64,
    pub q: f64,
    pub k: usize,
    pub lambda_k: f64,
    pub m: usize,
    pub h_k: f64,
    pub h_m: f64,
    pub tau: f64,
    pub lower: f64,
    pub upper: f64,
    /// `1e-9 + 1e-6 lambda_k`.
    pub tol: f64,
    pub lower_pass: bool,
    pub upper_pass: bool,
    pub pass: bool,
}

pub fn cheeger_lower(p: f64, tau: f64, h_m: f64) -> f64 {
    (2.0 / tau).powf(p - 1.0) * (h_m / p).powf(p)
}

pub fn cheeger_upper(p: f64, h_k: f64) -> f64 {
    2f64.powf(p - 1.0) * h_k
}

/// Certificates for every pair of `spectrum`, using exact `h_k`.
pub fn certify_cheeger(g: &Graph, spectrum: &Spectrum) -> Result<Vec<CheegerCertificate>> {
    let hs: Vec<f64> = multiway_cheeger_all(g, g.n())?.iter().map(|x| x.h).collect();
    certify_cheeger_with(g, spectrum, &hs)
}

/// [`certify_cheeger`] with precomputed `h_1 .. h_n`.
pub fn certify_cheeger_with(
    g: &Graph,
    spectrum: &Spectrum,
    h: &[f64],
) -> Result<Vec<CheegerCertificate>> {
    if h.len() < spectrum.pairs.len() {
        return Err(Error::invalid("need h_k for every eigenpair"));
    }
    let p = spectrum.p;
    let tau = g.tau();
    spectrum
        .pairs
        .iter()
        .enumerate()
        .map(|(i, pair)| {
            let k = i + 1;
            let m = strong_nodal_domains(g, &pair.f, default_zero_tol(&pair.f))?.count();
            let h_k = h[i];
            let h_m = h[m.max(1) - 1];
            let lower = cheeger_lower(p, tau, h_m);
            let upper = cheeger_upper(p, h_k);
            let lambda_k = pair.lambda;
            let tol = 1e-9 + 1e-6 * lambda_k.abs();
            let lower_pass = lower - tol <= lambda_k;
            let upper_pass = lambda_k <= upper + tol;
            Ok(CheegerCertificate {
                p,
                q: conjugate(p),
                k,
                lambda_k,
                m,
                h_k,
                h_m,
                tau,
                lower,
                upper,
                tol,
                lower_pass,
                upper_pass,
                pass: lower_pass && upper_pass,
            })
        })
        .collect()
}
