use nalgebra::{DMatrix, SymmetricEigen};

use super::{Method, PairDiagnostics, Spectrum};
use crate::error::Result;
use crate::graph::Graph;
use crate::operator::EigenPair;

/// All eigenpairs of `L f = lambda M f` with `M = diag(mu)`, from the
/// symmetric matrix `M^{-1/2} L M^{-1/2}`.
///
/// Eigenvectors are back-transformed, have unit `l^2(V)` norm, and are
/// oriented so that their first non-negligible entry is positive. On a
/// connected graph the first pair is set to exactly `(0, constant)`.
pub fn solve_p2_spectrum(g: &Graph) -> Result<Spectrum> {
    let n = g.n();
    let inv_sqrt: Vec<f64> = g.mu().iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        a[(u, u)] = g.degree(u) * inv_sqrt[u] * inv_sqrt[u];
    }
    for e in g.edges() {
        let x = -e.w * inv_sqrt[e.u] * inv_sqrt[e.v];
        a[(e.u, e.v)] = x;
        a[(e.v, e.u)] = x;
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let connected = g.is_connected();
    let mut warnings = Vec::new();
    if !connected {
        warnings.push("graph disconnected".to_string());
    }

    let mut pairs = Vec::with_capacity(n);
    for (k, &i) in order.iter().enumerate() {
        let (lambda, f) = if k == 0 && connected {
            (0.0, vec![1.0; n])
        } else {
            let col = eig.eigenvectors.column(i);
            let mut f: Vec<f64> = (0..n).map(|u| col[u] * inv_sqrt[u]).collect();
            orient(&mut f);
            (eig.eigenvalues[i].max(0.0), f)
        };
        pairs.push(EigenPair::new(g, 2.0, lambda, &f)?);
    }
    let diagnostics = (1..=n).map(PairDiagnostics::new).collect();
    Ok(Spectrum {
        p: 2.0,
        method: Method::DenseP2,
        pairs,
        diagnostics,
        warnings,
    })
}

/// Flips `f` so its first entry above `1e-8 * max|f|` is positive.
pub(crate) fn orient(f: &mut [f64]) {
    let max = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = f.iter().find(|x| x.abs() > 1e-8 * max) {
        if *first < 0.0 {
            f.iter_mut().for_each(|x| *x = -*x);
        }
    }
}
