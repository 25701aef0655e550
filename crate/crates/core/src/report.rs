//! The `solve`, `certify` and `cheeger` pipelines and their reports.
//!
//! Reports serialize to one JSON document per run. Given the same graph,
//! parameters and seed the document is byte-identical; wall-clock timings
//! are only included on request.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cheeger::{
    certify_cheeger_with, multiway_cheeger, multiway_cheeger_all, multiway_cheeger_approx, sweep_cut,
    CheegerCertificate, MultiwayCheeger, SweepCut, EXACT_CAP,
};
use crate::eigen::{solve_spectrum, Spectrum, SpectrumOptions};
use crate::error::{Error, Result};
use crate::graph::{Graph, MuMode};
use crate::nodal::{certify_nodal_bounds, nodal_space_max_rq, NodalKind, NodalReport};
use crate::onelap::{one_laplacian_report, OneLapReport, ENUMERATION_CAP};
use crate::operator::ax_by_gap;

pub const SCHEMA_VERSION: &str = "plap-report/1";

/// Default exponents for `certify`.
pub const DEFAULT_P_LIST: [f64; 4] = [1.1, 1.5, 2.0, 3.0];

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    /// SHA-256 of the canonical edge list.
    pub sha256: String,
    pub n: usize,
    pub edges: usize,
    pub mu_mode: MuMode,
    pub connected: bool,
    pub tau: f64,
}

impl InputDigest {
    pub fn of(g: &Graph) -> Self {
        InputDigest {
            sha256: g.digest(),
            n: g.n(),
            edges: g.edges().len(),
            mu_mode: g.mu_mode(),
            connected: g.is_connected(),
            tau: g.tau(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOptions {
    pub spectrum: SpectrumOptions,
    /// Seed for every random spot check.
    pub seed: u64,
    /// Random coefficient vectors per nodal span.
    pub nodal_span_samples: usize,
    /// Random `(p, a, b, x, y)` draws for the `ax_by_gap` check.
    pub gap_samples: usize,
    /// Absolute slack for `nodal_space_max_rq <= lambda`.
    pub nodal_span_tol: f64,
    pub one_laplacian: bool,
    pub approx: bool,
    #[serde(skip)]
    pub timings: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            spectrum: SpectrumOptions::default(),
            seed: 0,
            nodal_span_samples: 1000,
            gap_samples: 1000,
            nodal_span_tol: 1e-8,
            one_laplacian: false,
            approx: false,
            timings: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Parameters {
    pub p: Vec<f64>,
    pub k: Option<usize>,
    pub options: RunOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// A residual at or below the solver target.
    Convergence,
    Certificate,
}

/// One pass/fail record.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub p: Option<f64>,
    pub k: Option<usize>,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Certified,
    CertificateFailure,
    NonConvergence,
}

impl Status {
    /// `0`, `1` or `3`; parse and usage errors (`2`) never produce a report.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Certified => 0,
            Status::CertificateFailure => 1,
            Status::NonConvergence => 3,
        }
    }
}

/// Largest Rayleigh quotients over the strong and weak nodal spans of one
/// eigenfunction.
#[derive(Debug, Clone, Serialize)]
pub struct NodalSpanCheck {
    pub k: usize,
    pub lambda: f64,
    pub strong_max_rq: f64,
    pub weak_max_rq: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapCheck {
    pub samples: usize,
    /// Largest `ax_by_gap / scale` seen, with `scale` the larger side.
    pub max_scaled_gap: f64,
    pub pass: bool,
}

/// Everything computed at one exponent.
#[derive(Debug, Clone, Serialize)]
pub struct PSection {
    pub p: f64,
    pub spectrum: Option<Spectrum>,
    pub nodal: Option<NodalReport>,
    pub cheeger: Option<Vec<CheegerCertificate>>,
    pub nodal_spans: Vec<NodalSpanCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub command: &'static str,
    pub input: InputDigest,
    pub parameters: Parameters,
    pub spectra: Vec<PSection>,
    pub cheeger_constants: Vec<MultiwayCheeger>,
    pub sweep: Option<SweepCut>,
    pub gap_check: Option<GapCheck>,
    pub one_laplacian: Option<OneLapReport>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub status: Status,
    pub pass: bool,
    /// Seconds per stage; only with `RunOptions::timings`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl RunReport {
    fn new(command: &'static str, g: &Graph, parameters: Parameters) -> Self {
        let mut warnings = Vec::new();
        if !g.is_connected() {
            warnings.push("graph disconnected".to_string());
        }
        RunReport {
            schema: SCHEMA_VERSION,
            command,
            input: InputDigest::of(g),
            parameters,
            spectra: Vec::new(),
            cheeger_constants: Vec::new(),
            sweep: None,
            gap_check: None,
            one_laplacian: None,
            checks: Vec::new(),
            warnings,
            status: Status::Certified,
            pass: true,
            timings: None,
        }
    }

    fn check(&mut self, name: &str, kind: CheckKind, p: Option<f64>, k: Option<usize>, pass: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            kind,
            p,
            k,
            pass,
            detail,
        });
    }

    fn finalize(&mut self) {
        let failed = |kind| self.checks.iter().any(|c| c.kind == kind && !c.pass);
        self.status = if failed(CheckKind::Certificate) {
            Status::CertificateFailure
        } else if failed(CheckKind::Convergence) {
            Status::NonConvergence
        } else {
            Status::Certified
        };
        self.pass = self.status == Status::Certified;
        let mut extra = Vec::new();
        for s in self.spectra.iter().filter_map(|x| x.spectrum.as_ref()) {
            for w in s.warnings.iter().filter(|w| !self.warnings.contains(w)) {
                extra.push(format!("p = {}: {w}", s.p));
            }
        }
        for w in extra {
            if !self.warnings.contains(&w) {
                self.warnings.push(w);
            }
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain no maps with non-string keys")
    }

    /// One row per eigenpair: `p,k,lambda,residual,converged,method,f1..fn`.
    pub fn write_spectra_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> =
            ["p", "k", "lambda", "residual", "converged", "method"].map(String::from).to_vec();
        header.extend((1..=self.input.n).map(|u| format!("f{u}")));
        w.write_record(&header).map_err(csv_error)?;
        for s in self.spectra.iter().filter_map(|x| x.spectrum.as_ref()) {
            let method = serde_json::to_value(s.method).expect("enum").as_str().unwrap_or("").to_string();
            for (pair, d) in s.pairs.iter().zip(&s.diagnostics) {
                let mut row = vec![
                    s.p.to_string(),
                    d.index.to_string(),
                    pair.lambda.to_string(),
                    pair.residual.to_string(),
                    d.converged.to_string(),
                    method.clone(),
                ];
                row.extend(pair.f.iter().map(|x| x.to_string()));
                w.write_record(&row).map_err(csv_error)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One row per `k`: `k,h,exact,family` with 1-based labels joined by
    /// spaces and subsets separated by `|`.
    pub fn write_cheeger_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "h", "exact", "family"]).map_err(csv_error)?;
        for c in &self.cheeger_constants {
            let family: Vec<String> = c
                .family
                .subsets()
                .iter()
                .map(|a| a.labels().iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" "))
                .collect();
            w.write_record([c.k.to_string(), c.h.to_string(), c.exact.to_string(), family.join("|")])
                .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

struct Clock {
    on: bool,
    start: Instant,
    stages: BTreeMap<String, f64>,
}

impl Clock {
    fn new(on: bool) -> Self {
        Clock {
            on,
            start: Instant::now(),
            stages: BTreeMap::new(),
        }
    }

    fn lap(&mut self, stage: impl Into<String>) {
        if self.on {
            let now = Instant::now();
            self.stages.insert(stage.into(), (now - self.start).as_secs_f64());
            self.start = now;
        }
    }

    fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.on.then_some(self.stages)
    }
}

fn spectrum_at(g: &Graph, p: f64, opts: &SpectrumOptions) -> Result<Spectrum> {
    if p == 1.0 {
        one_laplacian_report(g)?.spectrum(g)
    } else {
        solve_spectrum(g, p, opts)
    }
}

fn record_residuals(report: &mut RunReport, s: &Spectrum, target: f64) {
    if s.p == 1.0 {
        return;
    }
    for (pair, d) in s.pairs.iter().zip(&s.diagnostics) {
        report.check(
            "residual",
            CheckKind::Convergence,
            Some(s.p),
            Some(d.index),
            pair.residual <= target,
            format!("residual {:.3e}, target {target:.1e}", pair.residual),
        );
    }
}

/// Spectrum at one exponent. `p = 1` goes through the exact 1-Laplacian
/// enumeration and is limited to small graphs.
pub fn cmd_solve(g: &Graph, p: f64, opts: &RunOptions) -> Result<RunReport> {
    let mut clock = Clock::new(opts.timings);
    let mut report = RunReport::new(
        "solve",
        g,
        Parameters {
            p: vec![p],
            k: None,
            options: opts.clone(),
        },
    );
    let s = spectrum_at(g, p, &opts.spectrum)?;
    clock.lap(format!("spectrum p={p}"));
    record_residuals(&mut report, &s, opts.spectrum.continuation.target_residual);
    report.spectra.push(PSection {
        p,
        spectrum: Some(s),
        nodal: None,
        cheeger: None,
        nodal_spans: Vec::new(),
    });
    report.finalize();
    report.timings = clock.finish();
    Ok(report)
}

/// Random `(p, a, b, x, y)` with `xy <= 0`, checking `ax_by_gap <= 1e-12`
/// relative to the larger side.
pub fn gap_spot_check(samples: usize, seed: u64) -> Result<GapCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let p = if rng.random_bool(0.1) { 1.0 } else { rng.random_range(1.0..4.0) };
        let a = rng.random_range(-2.0..2.0);
        let b = rng.random_range(-2.0..2.0);
        let x: f64 = rng.random_range(0.0..2.0);
        let y: f64 = -rng.random_range(0.0..2.0);
        let (x, y) = if rng.random_bool(0.5) { (x, y) } else { (y, x) };
        let gap = ax_by_gap(p, a, b, x, y)?;
        let lhs = (a * x - b * y).abs().powf(p);
        let rhs = (a.abs().powf(p) * x.abs() + b.abs().powf(p) * y.abs()) * (x - y).abs().powf(p - 1.0);
        worst = worst.max(gap / lhs.max(rhs).max(f64::MIN_POSITIVE));
    }
    Ok(GapCheck {
        samples,
        max_scaled_gap: worst,
        pass: worst <= 1e-12,
    })
}

/// The full pipeline at every `p` in `p_list`: spectra, nodal bounds, nodal
/// spans, Cheeger certificates (exact `h_k`, `n <= EXACT_CAP`), the
/// `ax_by_gap` spot check and, on request, the exact 1-Laplacian.
///
/// Certificates are only evaluated for pairs whose residual meets the
/// solver target; other pairs fail their convergence check instead. A
/// solver error at one exponent is recorded and the run continues.
pub fn cmd_certify(g: &Graph, p_list: &[f64], opts: &RunOptions) -> Result<RunReport> {
    if p_list.is_empty() {
        return Err(Error::invalid("empty p list"));
    }
    let mut clock = Clock::new(opts.timings);
    let mut report = RunReport::new(
        "certify",
        g,
        Parameters {
            p: p_list.to_vec(),
            k: None,
            options: opts.clone(),
        },
    );
    let target = opts.spectrum.continuation.target_residual;
    let h: Option<Vec<MultiwayCheeger>> = if g.n() <= EXACT_CAP {
        Some(multiway_cheeger_all(g, g.n())?)
    } else {
        report.warnings.push(format!(
            "n = {} exceeds the exact h_k cap {EXACT_CAP}; Cheeger certificates skipped",
            g.n()
        ));
        None
    };
    clock.lap("cheeger constants");
    let hs: Option<Vec<f64>> = h.as_ref().map(|h| h.iter().map(|x| x.h).collect());
    if let Some(h) = h {
        report.cheeger_constants = h;
    }

    for &p in p_list {
        let s = match spectrum_at(g, p, &opts.spectrum) {
            Ok(s) => s,
            Err(Error::Solver(e)) => {
                report.check("spectrum", CheckKind::Convergence, Some(p), None, false, e.to_string());
                report.spectra.push(PSection {
                    p,
                    spectrum: None,
                    nodal: None,
                    cheeger: None,
                    nodal_spans: Vec::new(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        clock.lap(format!("spectrum p={p}"));
        record_residuals(&mut report, &s, target);
        let certified = |k: usize| p == 1.0 || s.pairs[k - 1].residual <= target;

        let nodal = certify_nodal_bounds(g, &s, opts.spectrum.multiplicity_tol)?;
        for c in nodal.checks.iter().filter(|c| certified(c.k)) {
            let mut detail = format!(
                "strong {} <= {}, weak {} <= {}",
                c.strong, c.strong_bound, c.weak, c.weak_bound
            );
            if let Some(two) = c.lambda2_two_weak {
                detail += &format!(", lambda_2 has two weak domains: {two}");
            }
            report.check("nodal bounds", CheckKind::Certificate, Some(p), Some(c.k), c.pass, detail);
        }

        let mut spans = Vec::new();
        if p > 1.0 {
            for (i, pair) in s.pairs.iter().enumerate().filter(|(i, _)| certified(i + 1)) {
                let seed = opts.seed.wrapping_add(i as u64);
                let strong = nodal_space_max_rq(g, pair, NodalKind::Strong, opts.nodal_span_samples, seed)?;
                let weak = nodal_space_max_rq(g, pair, NodalKind::Weak, opts.nodal_span_samples, seed)?;
                let pass = strong.max(weak) <= pair.lambda + opts.nodal_span_tol;
                report.check(
                    "nodal span",
                    CheckKind::Certificate,
                    Some(p),
                    Some(i + 1),
                    pass,
                    format!("max R_p strong {strong:.12e}, weak {weak:.12e}, lambda {:.12e}", pair.lambda),
                );
                spans.push(NodalSpanCheck {
                    k: i + 1,
                    lambda: pair.lambda,
                    strong_max_rq: strong,
                    weak_max_rq: weak,
                    pass,
                });
            }
        }
        clock.lap(format!("nodal p={p}"));

        let cheeger = match &hs {
            Some(hs) => {
                let certs = certify_cheeger_with(g, &s, hs)?;
                for c in certs.iter().filter(|c| certified(c.k)) {
                    report.check(
                        "cheeger",
                        CheckKind::Certificate,
                        Some(p),
                        Some(c.k),
                        c.pass,
                        format!(
                            "{:.12e} <= lambda {:.12e} <= {:.12e} (m = {}, tol {:.1e})",
                            c.lower, c.lambda_k, c.upper, c.m, c.tol
                        ),
                    );
                }
                Some(certs)
            }
            None => None,
        };
        clock.lap(format!("cheeger p={p}"));

        report.spectra.push(PSection {
            p,
            spectrum: Some(s),
            nodal: Some(nodal),
            cheeger,
            nodal_spans: spans,
        });
    }

    if opts.gap_samples > 0 {
        let gap = gap_spot_check(opts.gap_samples, opts.seed)?;
        report.check(
            "ax_by_gap",
            CheckKind::Certificate,
            None,
            None,
            gap.pass,
            format!("{} samples, max scaled gap {:.3e}", gap.samples, gap.max_scaled_gap),
        );
        report.gap_check = Some(gap);
        clock.lap("ax_by_gap");
    }

    if opts.one_laplacian {
        if g.n() <= ENUMERATION_CAP {
            let r = one_laplacian_report(g)?;
            for ix in r.indexed.iter().filter(|ix| ix.lambda.is_some() && ix.k > 1) {
                let lambda = ix.lambda.as_ref().expect("filtered").to_string();
                let worst = ix.checks.iter().map(|c| c.strong.max(c.weak)).max().unwrap_or(0);
                report.check(
                    "one-laplacian nodal bound",
                    CheckKind::Certificate,
                    Some(1.0),
                    Some(ix.k),
                    ix.checks.iter().all(|c| c.pass),
                    format!(
                        "lambda {lambda}: {} pattern(s), at most {worst} domains, bound {}",
                        ix.checks.len(),
                        ix.bound
                    ),
                );
            }
            report.one_laplacian = Some(r);
            clock.lap("one-laplacian");
        } else {
            report.warnings.push(format!(
                "n = {} exceeds the 1-Laplacian enumeration cap {ENUMERATION_CAP}; skipped",
                g.n()
            ));
        }
    }

    report.finalize();
    report.timings = clock.finish();
    Ok(report)
}

/// `h_1 .. h_k` with minimizing families, and optionally the sweep cut of
/// a vertex function at exponent `p`. Above [`EXACT_CAP`] the spectral
/// heuristic is used when `opts.approx` is set.
pub fn cmd_cheeger(
    g: &Graph,
    k: usize,
    sweep: Option<(&[f64], f64)>,
    opts: &RunOptions,
) -> Result<RunReport> {
    if k == 0 || k > g.n() {
        return Err(Error::invalid(format!("k must satisfy 1 <= k <= n = {} (got {k})", g.n())));
    }
    let mut clock = Clock::new(opts.timings);
    let mut report = RunReport::new(
        "cheeger",
        g,
        Parameters {
            p: sweep.map(|(_, p)| vec![p]).unwrap_or_default(),
            k: Some(k),
            options: opts.clone(),
        },
    );
    report.cheeger_constants = if g.n() <= EXACT_CAP {
        if k == g.n() {
            multiway_cheeger_all(g, k)?
        } else {
            // Large k dominate the search; only compute what was asked.
            (1..=k).map(|j| multiway_cheeger(g, j)).collect::<Result<_>>()?
        }
    } else if opts.approx {
        report.warnings.push("h_k from spectral bisection: upper bounds only".to_string());
        (1..=k).map(|j| multiway_cheeger_approx(g, j)).collect::<Result<_>>()?
    } else {
        return Err(Error::CapExceeded {
            n: g.n(),
            cap: EXACT_CAP,
        });
    };
    clock.lap("cheeger constants");
    if let Some((f, p)) = sweep {
        if f.len() != g.n() {
            return Err(Error::LengthMismatch {
                expected: g.n(),
                got: f.len(),
            });
        }
        let cut = sweep_cut(g, f, p)?;
        report.check(
            "sweep bound",
            CheckKind::Certificate,
            Some(p),
            None,
            cut.satisfied,
            format!("c(A) = {:.12e} <= {:.12e}", cut.cut_ratio, cut.bound),
        );
        report.sweep = Some(cut);
        clock.lap("sweep");
    }
    report.finalize();
    report.timings = clock.finish();
    Ok(report)
}

/// Parses an eigenfunction file: one value per line in vertex order;
/// blank lines and `#` comments are skipped.
pub fn parse_vertex_function(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let x: f64 = line.parse().map_err(|_| {
            Error::parse(i + 1, crate::error::ParseErrorKind::Malformed(line.to_string()))
        })?;
        if !x.is_finite() {
            return Err(Error::parse(i + 1, crate::error::ParseErrorKind::Malformed(line.to_string())));
        }
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::path_graph;

    fn quick() -> RunOptions {
        RunOptions {
            nodal_span_samples: 50,
            gap_samples: 200,
            ..RunOptions::default()
        }
    }

    #[test]
    fn status_precedence() {
        let g = path_graph(3, MuMode::Unit).unwrap();
        let mut r = RunReport::new("solve", &g, Parameters { p: vec![], k: None, options: quick() });
        r.check("a", CheckKind::Convergence, None, None, false, String::new());
        r.finalize();
        assert_eq!(r.status, Status::NonConvergence);
        r.check("b", CheckKind::Certificate, None, None, false, String::new());
        r.finalize();
        assert_eq!(r.status, Status::CertificateFailure);
        assert_eq!(r.status.exit_code(), 1);
    }

    #[test]
    fn certify_p4_passes() {
        let g = path_graph(4, MuMode::Unit).unwrap();
        let r = cmd_certify(&g, &[1.5, 2.0], &quick()).unwrap();
        assert!(r.pass, "{:?}", r.failures().collect::<Vec<_>>());
        assert_eq!(r.spectra.len(), 2);
        assert!(r.timings.is_none());
        assert!(!r.to_json().contains("timings"));
    }

    #[test]
    fn timings_only_on_request() {
        let g = path_graph(3, MuMode::Unit).unwrap();
        let opts = RunOptions { timings: true, ..quick() };
        let r = cmd_solve(&g, 2.0, &opts).unwrap();
        assert!(r.to_json().contains("timings"));
    }

    #[test]
    fn cheeger_validates_k() {
        let g = path_graph(4, MuMode::Unit).unwrap();
        assert!(cmd_cheeger(&g, 5, None, &quick()).is_err());
        let r = cmd_cheeger(&g, 3, None, &quick()).unwrap();
        let h: Vec<f64> = r.cheeger_constants.iter().map(|c| c.h).collect();
        assert_eq!(h, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn spectra_csv_layout() {
        let g = path_graph(3, MuMode::Unit).unwrap();
        let r = cmd_solve(&g, 2.0, &quick()).unwrap();
        let mut buf = Vec::new();
        r.write_spectra_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "p,k,lambda,residual,converged,method,f1,f2,f3");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn vertex_function_files() {
        assert_eq!(parse_vertex_function("1\n# c\n\n-2.5\n").unwrap(), vec![1.0, -2.5]);
        assert!(matches!(parse_vertex_function("1\nx\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn gap_check_holds() {
        assert!(gap_spot_check(2000, 3).unwrap().pass);
    }
}
