#![allow(dead_code)]

use plap::{Graph, MuMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected graph: random spanning tree plus extra edges with probability
/// `density`, weights in `[0.5, 2]`, measure by `mode` (explicit draws from
/// `[0.5, 2]`).
pub fn random_connected(rng: &mut ChaCha8Rng, n: usize, density: f64, mode: MuMode) -> Graph {
    let mut edges = Vec::new();
    let mut present = vec![vec![false; n]; n];
    for v in 1..n {
        let u = rng.random_range(0..v);
        present[u][v] = true;
        edges.push((u, v, rng.random_range(0.5..2.0)));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !present[u][v] && rng.random_bool(density) {
                edges.push((u, v, rng.random_range(0.5..2.0)));
            }
        }
    }
    match mode {
        MuMode::Explicit => {
            let mu = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
            Graph::new(mu, edges).unwrap()
        }
        m => Graph::with_mu_mode(n, edges, m).unwrap(),
    }
}

pub fn random_mode(rng: &mut ChaCha8Rng) -> MuMode {
    [MuMode::Unit, MuMode::Degree, MuMode::Explicit][rng.random_range(0..3)]
}

/// `h_1 .. h_n` by dynamic programming over vertex subsets (`3^n` work):
/// `F_k(U)` is the best family of `k` disjoint subsets of `U`; either the
/// lowest vertex of `U` is unused or it lies in the first subset.
pub fn subset_dp_cheeger(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let full = 1usize << n;
    let mut c = vec![f64::INFINITY; full];
    for mask in 1..full {
        let mut bnd = 0.0;
        let mut mu = 0.0;
        for u in 0..n {
            if mask >> u & 1 == 1 {
                mu += g.mu()[u];
                for &(v, w) in g.neighbors(u) {
                    if mask >> v & 1 == 0 {
                        bnd += w;
                    }
                }
            }
        }
        c[mask] = bnd / mu;
    }
    let mut prev = vec![0.0; full]; // F_0 = 0
    let mut out = Vec::with_capacity(n);
    for _k in 1..=n {
        let mut cur = vec![f64::INFINITY; full];
        for u in 1..full {
            let low = u & u.wrapping_neg();
            let mut best = cur[u ^ low];
            let rest = u ^ low;
            let mut sub = rest;
            loop {
                let a = sub | low;
                let v = c[a].max(prev[u ^ a]);
                if v < best {
                    best = v;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
            cur[u] = best;
        }
        out.push(cur[full - 1]);
        prev = cur;
    }
    out
}
