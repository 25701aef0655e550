//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use plap::cheeger::{certify_cheeger_with, multiway_cheeger_all, sweep_cut};
use plap::eigen::{path_spectrum, solve_p2_spectrum, solve_spectrum, Spectrum, SpectrumOptions};
use plap::nodal::{
    certify_nodal_bounds, default_zero_tol, generalized_zeros, nodal_space_max_rq, strong_nodal_domains,
    weak_nodal_domains, NodalKind,
};
use plap::onelap::{enumerate_1lap_eigenvalues, one_laplacian_report, verify_1lap_eigenpair, RationalGraph};
use plap::operator::{ax_by_gap, conjugate, rq_gradient};
use plap::report::{cmd_certify, RunOptions};
use plap::{path_graph, Graph, MuMode};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, t: Duration) -> Result<(), String> {
    ensure(t < limit, || format!("runtime {t:.2?} exceeds {limit:?}"))
}

// ---------------------------------------------------------------- 1

/// Characteristic polynomial coefficients `c_0 .. c_n` (`c_n = 1`) by
/// Faddeev-LeVerrier.
fn char_poly(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = vec![vec![0.0; n]; n];
    for k in 1..=n {
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                next[i][j] = (0..n).map(|l| a[i][l] * m[l][j]).sum::<f64>();
            }
            next[i][i] += c[n - k + 1];
        }
        m = next;
        let tr: f64 = (0..n).map(|i| (0..n).map(|l| a[i][l] * m[l][i]).sum::<f64>()).sum();
        c[n - k] = -tr / k as f64;
    }
    c
}

fn path_closed_form(n: usize, k: usize) -> f64 {
    2.0 - 2.0 * (PI * (k - 1) as f64 / n as f64).cos()
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    // closed form against the roots of det(L - x I) for P4
    let mut lap = vec![vec![0.0; 4]; 4];
    for i in 0..3 {
        lap[i][i] += 1.0;
        lap[i + 1][i + 1] += 1.0;
        lap[i][i + 1] = -1.0;
        lap[i + 1][i] = -1.0;
    }
    let c = char_poly(&lap);
    let roots: Vec<f64> = (1..=4).map(|k| path_closed_form(4, k)).collect();
    for &x in &roots {
        let v: f64 = c.iter().rev().fold(0.0, |acc, ci| acc * x + ci);
        ensure(v.abs() <= 1e-9, || format!("char poly of P4 at {x} is {v:e}"))?;
    }
    ensure(roots.windows(2).all(|w| w[1] - w[0] > 1e-3), || "closed-form roots of P4 not distinct".into())?;
    let mut worst: f64 = 0.0;
    for n in 3..=10 {
        let s = solve_p2_spectrum(&path_graph(n, MuMode::Unit).unwrap()).map_err(|e| e.to_string())?;
        ensure(s.pairs.len() == n, || format!("P{n}: {} pairs", s.pairs.len()))?;
        for (k, pair) in (1..).zip(&s.pairs) {
            let err = (pair.lambda - path_closed_form(n, k)).abs();
            worst = worst.max(err);
            ensure(err <= 1e-9, || format!("P{n} k={k}: error {err:e}"))?;
        }
    }
    within(Duration::from_secs(1), t.elapsed())?;
    Ok(format!("n = 3..10, max error {worst:.1e}"))
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 3..=10 {
        let g = path_graph(n, MuMode::Unit).unwrap();
        let dense = solve_p2_spectrum(&g).map_err(|e| e.to_string())?;
        let shot = path_spectrum(n, 2.0).map_err(|e| e.to_string())?;
        for (k, (a, b)) in (1..).zip(dense.pairs.iter().zip(&shot.pairs)) {
            let err = (a.lambda - b.lambda).abs();
            worst = worst.max(err);
            ensure(err <= 1e-8, || format!("P{n} k={k}: shooting {} vs dense {}", b.lambda, a.lambda))?;
        }
        for p in [1.2, 1.5, 3.0] {
            let s = path_spectrum(n, p).map_err(|e| e.to_string())?;
            ensure(s.pairs.len() == n, || format!("P{n} p={p}: {} pairs", s.pairs.len()))?;
            ensure(s.pairs.windows(2).all(|w| w[0].lambda < w[1].lambda), || {
                format!("P{n} p={p}: eigenvalues not strictly increasing")
            })?;
            for (k, pair) in (1..).zip(&s.pairs) {
                let tol = default_zero_tol(&pair.f);
                let strong = strong_nodal_domains(&g, &pair.f, tol).unwrap().count();
                let weak = weak_nodal_domains(&g, &pair.f, tol).unwrap().count();
                let zeros = generalized_zeros(&pair.f, tol).len();
                ensure(strong == k && weak == k && zeros == k - 1, || {
                    format!("P{n} p={p} k={k}: strong {strong}, weak {weak}, zeros {zeros}")
                })?;
            }
        }
    }
    within(Duration::from_secs(10), t.elapsed())?;
    Ok(format!("n = 3..10, dense agreement {worst:.1e}"))
}

// ---------------------------------------------------------------- 3, 5

struct Solved {
    graph: Graph,
    spectra: Vec<Spectrum>,
}

fn criterion_3_graphs() -> Vec<Graph> {
    let mut r = common::rng(11);
    (0..50)
        .map(|_| {
            let n = r.random_range(3..=9);
            let mode = common::random_mode(&mut r);
            common::random_connected(&mut r, n, 0.3, mode)
        })
        .collect()
}

fn criterion_3(solved: &mut Vec<Solved>) -> Outcome {
    let t = Instant::now();
    let opts = SpectrumOptions::default();
    let mut checked = 0;
    let mut skipped = 0;
    let mut failures = Vec::new();
    for (i, g) in criterion_3_graphs().into_iter().enumerate() {
        let mut spectra = Vec::new();
        for p in [1.2, 2.0, 3.0] {
            let s = match solve_spectrum(&g, p, &opts) {
                Ok(s) => s,
                Err(e) => {
                    failures.push(format!("graph {i} p={p}: {e}"));
                    continue;
                }
            };
            let report = certify_nodal_bounds(&g, &s, opts.multiplicity_tol).unwrap();
            for c in &report.checks {
                if c.lambda2_two_weak == Some(false) {
                    failures.push(format!("graph {i} p={p} k={}: lambda_2 has {} weak domains", c.k, c.weak));
                }
                if c.residual > 1e-9 {
                    skipped += 1;
                    continue;
                }
                checked += 1;
                if !(c.strong_pass && c.weak_pass) {
                    failures.push(format!(
                        "graph {i} p={p} k={}: strong {}/{}, weak {}/{}",
                        c.k, c.strong, c.strong_bound, c.weak, c.weak_bound
                    ));
                }
            }
            spectra.push(s);
        }
        solved.push(Solved { graph: g, spectra });
    }
    ensure(failures.is_empty(), || format!("{} failure(s): {}", failures.len(), failures.join("; ")))?;
    within(Duration::from_secs(120), t.elapsed())?;
    Ok(format!("{checked} pairs certified, {skipped} above residual 1e-9 excluded"))
}

fn criterion_5(solved: &[Solved]) -> Outcome {
    ensure(!solved.is_empty(), || "no pairs from criterion 3".into())?;
    let mut checked = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for (i, x) in solved.iter().enumerate() {
        for s in &x.spectra {
            for (k, pair) in (1..).zip(&s.pairs) {
                if pair.residual > 1e-9 {
                    continue;
                }
                for kind in [NodalKind::Strong, NodalKind::Weak] {
                    let m = nodal_space_max_rq(&x.graph, pair, kind, 1000, 5).map_err(|e| e.to_string())?;
                    worst = worst.max(m - pair.lambda);
                    checked += 1;
                    if m > pair.lambda + 1e-8 {
                        failures.push(format!("graph {i} p={} k={k} {kind:?}: {m} > {}", s.p, pair.lambda));
                    }
                }
            }
        }
    }
    ensure(failures.is_empty(), || format!("{} failure(s): {}", failures.len(), failures.join("; ")))?;
    Ok(format!("{checked} spans, max(R - lambda) = {worst:.1e}"))
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let mut r = common::rng(4);
    let sides = |p: f64, a: f64, b: f64, x: f64, y: f64| {
        let lhs = (a * x - b * y).abs().powf(p);
        let rhs = (a.abs().powf(p) * x.abs() + b.abs().powf(p) * y.abs()) * (x - y).abs().powf(p - 1.0);
        lhs.max(rhs).max(f64::MIN_POSITIVE)
    };
    let draw = |r: &mut common::TestRng| {
        let p = if r.random_bool(0.2) { 1.0 } else { r.random_range(1.0..5.0) };
        let x: f64 = r.random_range(0.0..3.0);
        let y: f64 = -r.random_range(0.0..3.0);
        let (x, y) = if r.random_bool(0.5) { (x, y) } else { (y, x) };
        (p, r.random_range(-3.0..3.0), r.random_range(-3.0..3.0), x, y)
    };
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100_000 {
        let (p, a, b, x, y) = draw(&mut r);
        let gap = ax_by_gap(p, a, b, x, y).map_err(|e| e.to_string())?;
        let scale = sides(p, a, b, x, y);
        worst = worst.max(gap / scale);
        ensure(gap <= 1e-12 * scale, || format!("gap {gap:e} at p={p} a={a} b={b} x={x} y={y}"))?;
    }
    let mut equality = 0;
    for case in 0..3 {
        for _ in 0..10_000 {
            let (mut p, mut a, mut b, mut x, mut y) = draw(&mut r);
            match case {
                0 => {
                    p = p.max(1.0 + 1e-3);
                    b = a;
                }
                1 => {
                    p = 1.0;
                    b = b.abs() * a.signum();
                }
                _ => {
                    if r.random_bool(0.5) {
                        x = 0.0
                    } else {
                        y = 0.0
                    }
                }
            }
            if a == 0.0 && case == 1 {
                a = 1.0;
            }
            let gap = ax_by_gap(p, a, b, x, y).map_err(|e| e.to_string())?;
            let scale = sides(p, a, b, x, y);
            ensure(gap.abs() <= 1e-12 * scale, || {
                format!("equality case {case}: gap {gap:e} at p={p} a={a} b={b} x={x} y={y}")
            })?;
            equality += 1;
        }
    }
    within(Duration::from_secs(5), t.elapsed())?;
    Ok(format!("1e5 samples, max scaled gap {worst:.1e}; {equality} equality cases"))
}

// ---------------------------------------------------------------- 6

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let g = path_graph(3, MuMode::Degree).unwrap();
    let e = enumerate_1lap_eigenvalues(&g).map_err(|e| e.to_string())?;
    ensure(e.nonconstant.len() == 1 && e.nonconstant[0].lo == q(1, 1) && e.nonconstant[0].hi == q(1, 1), || {
        format!("nonconstant set {:?}", e.nonconstant)
    })?;
    let rg = RationalGraph::from_graph(&g).map_err(|e| e.to_string())?;
    let f = [q(1, 1), q(-1, 1), q(1, 1)];
    let yes = verify_1lap_eigenpair(&rg, &f, &q(1, 1)).map_err(|e| e.to_string())?;
    ensure(yes.feasible && yes.recheck(&rg, &f), || "(f, 1) rejected".into())?;
    let no = verify_1lap_eigenpair(&rg, &f, &q(1, 2)).map_err(|e| e.to_string())?;
    ensure(!no.feasible, || "(f, 1/2) accepted".into())?;
    let ff = [1.0, -1.0, 1.0];
    let strong = strong_nodal_domains(&g, &ff, 0.0).unwrap().count();
    let weak = weak_nodal_domains(&g, &ff, 0.0).unwrap().count();
    ensure(strong == 3 && weak == 3, || format!("strong {strong}, weak {weak}"))?;
    let report = one_laplacian_report(&g).map_err(|e| e.to_string())?;
    let ix = &report.indexed[1];
    ensure(ix.lambda == Some(q(1, 1)) && ix.group_first == 2 && ix.multiplicity == 2, || {
        format!("lambda_2 = {:?}, group ({}, {})", ix.lambda, ix.group_first, ix.multiplicity)
    })?;
    let bound = ix.group_first + ix.multiplicity - 1;
    ensure(bound == 3 && weak <= bound, || format!("k + r - 1 = {bound}"))?;
    ensure(weak > ix.group_first, || "weak count does not exceed the p > 1 bound k = 2".into())?;
    within(Duration::from_secs(1), t.elapsed())?;
    Ok("nonconstant eigenvalues {1}; f = (1,-1,1): 3 strong, 3 weak <= k+r-1 = 3, > 2".into())
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let mut graphs: Vec<(String, Graph)> =
        (4..=8).map(|n| (format!("P{n}"), path_graph(n, MuMode::Unit).unwrap())).collect();
    let mut r = common::rng(7);
    for i in 0..20 {
        let n = r.random_range(3..=10);
        let mode = common::random_mode(&mut r);
        graphs.push((format!("random {i} (n={n})"), common::random_connected(&mut r, n, 0.3, mode)));
    }
    let opts = SpectrumOptions::default();
    let mut failures = Vec::new();
    let mut certified = 0;
    let mut oracle_checked = 0;
    let mut gaps = Vec::new();
    for (name, g) in &graphs {
        let h: Vec<f64> = multiway_cheeger_all(g, g.n()).map_err(|e| e.to_string())?.iter().map(|x| x.h).collect();
        // the subset oracle is cheap enough for every graph here (n <= 10)
        {
            let dp = common::subset_dp_cheeger(g);
            for (k, (a, b)) in (1..).zip(h.iter().zip(&dp)) {
                if (a - b).abs() > 1e-12 * b.max(1.0) {
                    failures.push(format!("{name}: h_{k} = {a} but enumeration gives {b}"));
                }
            }
            oracle_checked += 1;
        }
        let mut path_gap = Vec::new();
        for p in [1.1, 1.5, 2.0, 3.0] {
            let s = match solve_spectrum(g, p, &opts) {
                Ok(s) => s,
                Err(e) => {
                    failures.push(format!("{name} p={p}: {e}"));
                    continue;
                }
            };
            for c in certify_cheeger_with(g, &s, &h).map_err(|e| e.to_string())? {
                certified += 1;
                if !c.pass {
                    failures.push(format!(
                        "{name} p={p} k={}: {:.6e} <= {:.6e} <= {:.6e} (m={})",
                        c.k, c.lower, c.lambda_k, c.upper, c.m
                    ));
                }
                if name.starts_with('P') && c.k == 2 {
                    path_gap.push((p, (c.upper - c.lambda_k) / c.lambda_k));
                }
            }
        }
        if name.starts_with('P') {
            let at = |p: f64| path_gap.iter().find(|x| x.0 == p).map(|x| x.1);
            match (at(1.1), at(3.0)) {
                (Some(a), Some(b)) if a < b => gaps.push(format!("{name} {a:.3}<{b:.3}")),
                (a, b) => failures.push(format!("{name}: k=2 gap at p=1.1 {a:?} not below p=3 {b:?}")),
            }
        }
    }
    ensure(failures.is_empty(), || format!("{} failure(s): {}", failures.len(), failures.join("; ")))?;
    within(Duration::from_secs(300), t.elapsed())?;
    Ok(format!(
        "{certified} certificates on {} graphs, h verified by enumeration on {oracle_checked}; k=2 gaps {}",
        graphs.len(),
        gaps.join(", ")
    ))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let mut r = common::rng(8);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let n = r.random_range(2..=10);
        let mode = common::random_mode(&mut r);
        let g = common::random_connected(&mut r, n, 0.4, mode);
        let p = if i % 10 == 0 { 1.0 } else { r.random_range(1.0..4.0) };
        let mut f: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut r)).collect();
        if i % 7 == 0 {
            f[0] = 0.0;
        }
        let cut = sweep_cut(&g, &f, p).map_err(|e| e.to_string())?;
        // recompute R_p(f), the bound and c(A) from scratch
        let energy: f64 = g.edges().iter().map(|e| e.w * (f[e.u] - f[e.v]).abs().powf(p)).sum();
        let norm: f64 = (0..n).map(|u| g.mu()[u] * f[u].abs().powf(p)).sum();
        let tau = (0..n).map(|u| g.degree(u) / g.mu()[u]).fold(0.0, f64::max);
        let bound = p * (energy / norm).powf(1.0 / p) * (tau / 2.0).powf(1.0 / conjugate(p));
        let inside = cut.set.mask();
        let boundary: f64 = g.edges().iter().filter(|e| inside[e.u] != inside[e.v]).map(|e| e.w).sum();
        let volume: f64 = (0..n).filter(|&u| inside[u]).map(|u| g.mu()[u]).sum();
        let c = boundary / volume;
        let level = cut.threshold;
        ensure((0..n).all(|u| inside[u] == (f[u].abs().powf(p) > level)), || {
            format!("instance {i}: set is not a threshold set")
        })?;
        ensure(c <= bound * (1.0 + 1e-12), || format!("instance {i}: c(A) = {c} > {bound} at p={p}"))?;
        worst = worst.max(c / bound);
    }
    within(Duration::from_secs(30), t.elapsed())?;
    Ok(format!("1000 instances, max c(A)/bound = {worst:.3}"))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let mut r = common::rng(9);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = r.random_range(2..=10);
        let mode = common::random_mode(&mut r);
        let g = common::random_connected(&mut r, n, 0.4, mode);
        let p = r.random_range(1.2..4.0);
        let f: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut r)).collect();
        let grad = rq_gradient(&g, &f, p).map_err(|e| e.to_string())?;
        let rq = |x: &[f64]| {
            let e: f64 = g.edges().iter().map(|e| e.w * (x[e.u] - x[e.v]).abs().powf(p)).sum();
            let m: f64 = (0..n).map(|u| g.mu()[u] * x[u].abs().powf(p)).sum();
            e / m
        };
        let h = 1e-6;
        let fd: Vec<f64> = (0..n)
            .map(|u| {
                let mut a = f.clone();
                let mut b = f.clone();
                a[u] += h;
                b[u] -= h;
                (rq(&a) - rq(&b)) / (2.0 * h)
            })
            .collect();
        let scale = grad.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let err = grad.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        worst = worst.max(err);
        ensure(err <= 1e-4, || format!("instance {i}: relative error {err:e} at p={p}"))?;
    }
    Ok(format!("100 instances, max relative error {worst:.1e}"))
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Outcome {
    let mut r = common::rng(10);
    let g = common::random_connected(&mut r, 7, 0.4, MuMode::Degree);
    let opts = RunOptions {
        seed: 42,
        ..RunOptions::default()
    };
    let mut sizes = Vec::new();
    for g in [path_graph(5, MuMode::Unit).unwrap(), g] {
        let a = cmd_certify(&g, &[1.1, 1.5, 2.0, 3.0], &opts).map_err(|e| e.to_string())?.to_json();
        let b = cmd_certify(&g, &[1.1, 1.5, 2.0, 3.0], &opts).map_err(|e| e.to_string())?.to_json();
        ensure(a == b, || format!("reports differ for n = {}", g.n()))?;
        sizes.push(a.len());
    }
    Ok(format!("byte-identical reports ({} and {} bytes)", sizes[0], sizes[1]))
}

fn main() -> ExitCode {
    let mut solved = Vec::new();
    let mut failed = 0;
    let mut run = |id: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let out = f();
        let dt = t.elapsed();
        match out {
            Ok(msg) => println!("criterion {id:>2} PASS  {name}: {msg} [{dt:.2?}]"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {msg} [{dt:.2?}]");
            }
        }
    };
    run(1, "p = 2 path spectra", &mut criterion_1);
    run(2, "path shooting", &mut criterion_2);
    run(3, "nodal bounds", &mut || criterion_3(&mut solved));
    run(4, "ax_by_gap", &mut criterion_4);
    run(5, "nodal span quotients", &mut || criterion_5(&solved));
    run(6, "1-Laplacian on P3", &mut criterion_6);
    run(7, "Cheeger certificates", &mut criterion_7);
    run(8, "sweep cuts", &mut criterion_8);
    run(9, "Rayleigh quotient gradient", &mut criterion_9);
    run(10, "determinism", &mut criterion_10);
    if failed == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
