//! Exact sparse Gaussian elimination over the rationals.
//!
//! Rows are eliminated in index order, so systems whose unknowns are numbered
//! along a band (unfolded weight layers) keep their fill-in inside the band.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use crate::rational::Rational;

/// Sparse square system `A x = b`.
#[derive(Clone, Debug, Default)]
pub struct SparseSystem {
    rows: Vec<BTreeMap<usize, Rational>>,
    rhs: Vec<Rational>,
}

impl SparseSystem {
    pub fn new(n: usize) -> Self {
        SparseSystem { rows: vec![BTreeMap::new(); n], rhs: vec![Rational::zero(); n] }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Adds `v` to entry `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, v: &Rational) {
        if v.is_zero() {
            return;
        }
        let e = self.rows[i].entry(j).or_insert_with(Rational::zero);
        *e += v;
        if e.is_zero() {
            self.rows[i].remove(&j);
        }
    }

    pub fn add_rhs(&mut self, i: usize, v: &Rational) {
        self.rhs[i] += v;
    }

    /// Solves the system; `None` when it is singular.
    pub fn solve(self) -> Option<Vec<Rational>> {
        let n = self.rows.len();
        let SparseSystem { mut rows, mut rhs } = self;
        let mut cols: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (i, row) in rows.iter().enumerate() {
            for &j in row.keys() {
                cols[j].insert(i);
            }
        }
        let mut done = vec![false; n];
        let mut pivot_row_of = vec![usize::MAX; n];
        for col in 0..n {
            // Prefer the diagonal row, otherwise the lowest unused row touching the column.
            let pr = if !done[col] && rows[col].contains_key(&col) {
                col
            } else {
                *cols[col].iter().find(|&&r| !done[r])?
            };
            done[pr] = true;
            pivot_row_of[col] = pr;
            let pivot_row = std::mem::take(&mut rows[pr]);
            let pivot = pivot_row[&col].clone();
            let pivot_rhs = rhs[pr].clone();
            let targets: Vec<usize> = cols[col].iter().copied().filter(|&r| !done[r]).collect();
            for r in targets {
                let factor = rows[r].remove(&col).expect("column index out of sync") / &pivot;
                cols[col].remove(&r);
                for (&j, v) in pivot_row.iter() {
                    if j == col {
                        continue;
                    }
                    let e = rows[r].entry(j).or_insert_with(Rational::zero);
                    *e -= &factor * v;
                    if e.is_zero() {
                        rows[r].remove(&j);
                        cols[j].remove(&r);
                    } else {
                        cols[j].insert(r);
                    }
                }
                let delta = &factor * &pivot_rhs;
                rhs[r] -= delta;
            }
            for &j in pivot_row.keys() {
                cols[j].remove(&pr);
            }
            rows[pr] = pivot_row;
        }
        // Back substitution in reverse pivot order.
        let mut x = vec![Rational::zero(); n];
        for col in (0..n).rev() {
            let pr = pivot_row_of[col];
            let row = &rows[pr];
            let mut acc = rhs[pr].clone();
            for (&j, v) in row.range(..) {
                if j != col {
                    acc -= v * &x[j];
                }
            }
            x[col] = acc / &row[&col];
        }
        Some(x)
    }
}

/// Dense convenience wrapper.
pub fn solve_dense(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let mut sys = SparseSystem::new(b.len());
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            sys.add(i, j, v);
        }
        sys.add_rhs(i, &b[i]);
    }
    sys.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rint};

    #[test]
    fn solves_small_system() {
        let a = vec![vec![rint(2), rint(1)], vec![rint(1), rint(3)]];
        let x = solve_dense(&a, &[rint(3), rint(5)]).unwrap();
        assert_eq!(x, vec![rat(4, 5), rat(7, 5)]);
    }

    #[test]
    fn needs_row_exchange() {
        let a = vec![vec![rint(0), rint(1)], vec![rint(1), rint(0)]];
        let x = solve_dense(&a, &[rint(7), rint(9)]).unwrap();
        assert_eq!(x, vec![rint(9), rint(7)]);
    }

    #[test]
    fn singular_detected() {
        let a = vec![vec![rint(1), rint(2)], vec![rint(2), rint(4)]];
        assert!(solve_dense(&a, &[rint(1), rint(2)]).is_none());
    }
}
