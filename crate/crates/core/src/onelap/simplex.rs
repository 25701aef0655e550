//! Dense two-phase simplex over exact rationals with Bland's rule.
//!
//! Small problems only: every pivot touches the whole tableau.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub(crate) type Q = BigRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Rel {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Outcome {
    Optimal { value: Q, x: Vec<Q> },
    Infeasible,
    Unbounded,
}

/// `min c.x` subject to linear rows and `lower <= x <= upper`.
#[derive(Debug, Clone, Default)]
pub(crate) struct Lp {
    lower: Vec<Q>,
    upper: Vec<Option<Q>>,
    rows: Vec<(Vec<(usize, Q)>, Rel, Q)>,
}

impl Lp {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn add_var(&mut self, lower: Q, upper: Option<Q>) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.lower.len() - 1
    }

    pub(crate) fn add_row(&mut self, coefs: Vec<(usize, Q)>, rel: Rel, rhs: Q) {
        self.rows.push((coefs, rel, rhs));
    }

    pub(crate) fn minimize(&self, objective: &[(usize, Q)]) -> Outcome {
        let n = self.lower.len();
        // shift x = lower + y, y >= 0, and turn finite upper bounds into rows
        let mut rows: Vec<(Vec<Q>, Rel, Q)> = Vec::new();
        for (coefs, rel, rhs) in &self.rows {
            let mut a = vec![Q::zero(); n];
            let mut b = rhs.clone();
            for (j, c) in coefs {
                a[*j] += c;
                b -= c * &self.lower[*j];
            }
            rows.push((a, *rel, b));
        }
        for j in 0..n {
            if let Some(u) = &self.upper[j] {
                let mut a = vec![Q::zero(); n];
                a[j] = Q::one();
                rows.push((a, Rel::Le, u - &self.lower[j]));
            }
        }
        let m = rows.len();
        let slacks = rows.iter().filter(|r| r.1 != Rel::Eq).count();
        let cols = n + slacks + m;
        let rhs_col = cols;
        let mut tab = vec![vec![Q::zero(); cols + 1]; m];
        let mut basis = vec![0; m];
        let mut s = n;
        for (i, (a, rel, b)) in rows.into_iter().enumerate() {
            let row = &mut tab[i];
            row[..n].clone_from_slice(&a);
            match rel {
                Rel::Le => {
                    row[s] = Q::one();
                    s += 1;
                }
                Rel::Ge => {
                    row[s] = -Q::one();
                    s += 1;
                }
                Rel::Eq => {}
            }
            row[rhs_col] = b;
            if row[rhs_col].is_negative() {
                row.iter_mut().for_each(|x| *x = -x.clone());
            }
            row[n + slacks + i] = Q::one();
            basis[i] = n + slacks + i;
        }
        let first_art = n + slacks;

        let mut t = Tableau { tab, basis, cols };
        // phase 1
        let mut cost = vec![Q::zero(); cols];
        cost[first_art..].iter_mut().for_each(|c| *c = Q::one());
        let allowed: Vec<bool> = (0..cols).map(|j| j < first_art).collect();
        if !t.optimize(&cost, &allowed) {
            unreachable!("phase one is bounded below by zero");
        }
        if t.objective(&cost).is_positive() {
            return Outcome::Infeasible;
        }
        // drive artificial variables out of the basis
        let mut i = 0;
        while i < t.tab.len() {
            if t.basis[i] >= first_art {
                match (0..first_art).find(|&j| !t.tab[i][j].is_zero()) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.tab.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        // phase 2
        let mut cost = vec![Q::zero(); cols];
        let mut constant = Q::zero();
        for (j, c) in objective {
            cost[*j] += c;
            constant += c * &self.lower[*j];
        }
        if !t.optimize(&cost, &allowed) {
            return Outcome::Unbounded;
        }
        let mut y = vec![Q::zero(); cols];
        for (i, &b) in t.basis.iter().enumerate() {
            y[b] = t.tab[i][cols].clone();
        }
        let x: Vec<Q> = (0..n).map(|j| &self.lower[j] + &y[j]).collect();
        Outcome::Optimal {
            value: constant + t.objective(&cost),
            x,
        }
    }
}

struct Tableau {
    tab: Vec<Vec<Q>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn objective(&self, cost: &[Q]) -> Q {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| &cost[b] * &self.tab[i][self.cols])
            .sum()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = Q::one() / &self.tab[r][c];
        self.tab[r].iter_mut().for_each(|x| *x *= &inv);
        let pivot_row = self.tab[r].clone();
        for (i, row) in self.tab.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule. Returns `false` if the objective is unbounded below.
    fn optimize(&mut self, cost: &[Q], allowed: &[bool]) -> bool {
        loop {
            let entering = (0..self.cols).find(|&j| {
                allowed[j] && !self.basis.contains(&j) && {
                    let reduced: Q = &cost[j]
                        - self
                            .basis
                            .iter()
                            .enumerate()
                            .map(|(i, &b)| &cost[b] * &self.tab[i][j])
                            .sum::<Q>();
                    reduced.is_negative()
                }
            });
            let Some(j) = entering else {
                return true;
            };
            let mut leave: Option<(usize, Q)> = None;
            for i in 0..self.tab.len() {
                if self.tab[i][j].is_positive() {
                    let ratio = &self.tab[i][self.cols] / &self.tab[i][j];
                    let better = match &leave {
                        None => true,
                        Some((l, best)) => {
                            ratio < *best || (ratio == *best && self.basis[i] < self.basis[*l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((i, _)) => self.pivot(i, j),
                None => return false,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(a: i64, b: i64) -> Q {
        Q::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn small_lp() {
        // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0  ->  x = 8/5, y = 6/5
        let mut lp = Lp::new();
        let x = lp.add_var(q(0, 1), None);
        let y = lp.add_var(q(0, 1), None);
        lp.add_row(vec![(x, q(1, 1)), (y, q(2, 1))], Rel::Le, q(4, 1));
        lp.add_row(vec![(x, q(3, 1)), (y, q(1, 1))], Rel::Le, q(6, 1));
        match lp.minimize(&[(x, q(-1, 1)), (y, q(-1, 1))]) {
            Outcome::Optimal { value, x } => {
                assert_eq!(value, q(-14, 5));
                assert_eq!(x, vec![q(8, 5), q(6, 5)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bounds_equalities_and_infeasibility() {
        let mut lp = Lp::new();
        let z = lp.add_var(q(-1, 1), Some(q(1, 1)));
        lp.add_row(vec![(z, q(1, 1))], Rel::Eq, q(-1, 2));
        assert!(matches!(lp.minimize(&[]), Outcome::Optimal { ref x, .. } if x[0] == q(-1, 2)));
        lp.add_row(vec![(z, q(1, 1))], Rel::Ge, q(0, 1));
        assert_eq!(lp.minimize(&[]), Outcome::Infeasible);
    }

    #[test]
    fn unbounded_and_redundant() {
        let mut lp = Lp::new();
        let x = lp.add_var(q(0, 1), None);
        let y = lp.add_var(q(0, 1), None);
        lp.add_row(vec![(x, q(1, 1)), (y, q(1, 1))], Rel::Eq, q(1, 1));
        lp.add_row(vec![(x, q(2, 1)), (y, q(2, 1))], Rel::Eq, q(2, 1));
        assert!(matches!(lp.minimize(&[(x, q(1, 1))]), Outcome::Optimal { ref value, .. } if value.is_zero()));
        let mut lp = Lp::new();
        let x = lp.add_var(q(0, 1), None);
        lp.add_row(vec![(x, q(1, 1))], Rel::Ge, q(1, 1));
        assert_eq!(lp.minimize(&[(x, q(-1, 1))]), Outcome::Unbounded);
    }
}
