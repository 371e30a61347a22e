//! Two-phase primal simplex over exact rationals with Bland's pivoting rule.
//!
//! Dense tableau; meant for the small programs that show up in certificate
//! fallbacks and ground-truth checks, not for large instances.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub rel: Relation,
    pub rhs: Rational,
}

/// Maximize `objective · x` subject to the constraints. Variables are
/// non-negative unless marked free.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub free: Vec<bool>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { value: Rational, x: Vec<Rational> },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![Rational::zero(); num_vars],
            free: vec![false; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<(usize, Rational)>, rel: Relation, rhs: Rational) {
        self.constraints.push(Constraint { coeffs, rel, rhs });
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    ncols: usize,
    first_artificial: usize,
    /// column of each original variable: (positive part, optional negative part)
    var_cols: Vec<(usize, Option<usize>)>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let mut var_cols = Vec::with_capacity(lp.num_vars());
        let mut next = 0;
        for j in 0..lp.num_vars() {
            if lp.free[j] {
                var_cols.push((next, Some(next + 1)));
                next += 2;
            } else {
                var_cols.push((next, None));
                next += 1;
            }
        }
        let structural = next;
        let m = lp.constraints.len();
        // Normalise signs so every right-hand side is non-negative.
        let normalized: Vec<(Vec<(usize, Rational)>, Relation, Rational)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs.is_negative() {
                    let rel = match c.rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|(j, v)| (*j, -v)).collect(), rel, -&c.rhs)
                } else {
                    (c.coeffs.clone(), c.rel, c.rhs.clone())
                }
            })
            .collect();
        let slack_count = normalized.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
        let art_count = normalized.iter().filter(|(_, r, _)| *r != Relation::Le).count();
        let first_artificial = structural + slack_count;
        let ncols = first_artificial + art_count;
        let mut rows = vec![vec![Rational::zero(); ncols]; m];
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut slack, mut art) = (structural, first_artificial);
        for (i, (coeffs, rel, b)) in normalized.into_iter().enumerate() {
            for (j, v) in coeffs {
                let (p, n) = var_cols[j];
                rows[i][p] += &v;
                if let Some(n) = n {
                    rows[i][n] -= &v;
                }
            }
            match rel {
                Relation::Le => {
                    rows[i][slack] = Rational::one();
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    rows[i][slack] = -Rational::one();
                    slack += 1;
                    rows[i][art] = Rational::one();
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    rows[i][art] = Rational::one();
                    basis.push(art);
                    art += 1;
                }
            }
            rhs.push(b);
        }
        Tableau { rows, rhs, basis, ncols, first_artificial, var_cols }
    }

    fn pivot(&mut self, r: usize, e: usize, obj: &mut [Rational], obj_val: &mut Rational) {
        let p = self.rows[r][e].clone();
        if !p.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
            self.rhs[r] /= &p;
        }
        let pivot_row = self.rows[r].clone();
        let nz: Vec<usize> = (0..self.ncols).filter(|&j| !pivot_row[j].is_zero()).collect();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][e].is_zero() {
                continue;
            }
            let f = self.rows[i][e].clone();
            for &j in &nz {
                let d = &f * &pivot_row[j];
                self.rows[i][j] -= d;
            }
            let d = &f * &pivot_rhs;
            self.rhs[i] -= d;
        }
        if !obj[e].is_zero() {
            let f = obj[e].clone();
            for &j in &nz {
                let d = &f * &pivot_row[j];
                obj[j] -= d;
            }
            *obj_val += &f * &pivot_rhs;
        }
        self.basis[r] = e;
    }

    /// Reduced costs for maximizing `cost` over the current basis.
    fn reduced(&self, cost: &[Rational]) -> (Vec<Rational>, Rational) {
        let mut obj = cost.to_vec();
        let mut val = Rational::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for j in 0..self.ncols {
                if !self.rows[i][j].is_zero() {
                    obj[j] -= cb * &self.rows[i][j];
                }
            }
            val += cb * &self.rhs[i];
        }
        (obj, val)
    }

    /// Runs simplex iterations; `allowed` bounds the entering columns. Returns false if unbounded.
    fn iterate(&mut self, obj: &mut [Rational], val: &mut Rational, allowed: usize) -> bool {
        loop {
            let Some(e) = (0..allowed).find(|&j| obj[j].is_positive()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                if self.rows[i][e].is_positive() {
                    let ratio = &self.rhs[i] / &self.rows[i][e];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = best else {
                return false;
            };
            self.pivot(r, e, obj, val);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        // Phase 1: maximise minus the sum of artificials.
        let mut phase1 = vec![Rational::zero(); self.ncols];
        for c in phase1.iter_mut().skip(self.first_artificial) {
            *c = -Rational::one();
        }
        let (mut obj, mut val) = self.reduced(&phase1);
        self.iterate(&mut obj, &mut val, self.ncols);
        if val.is_negative() {
            return LpOutcome::Infeasible;
        }
        // Drive remaining artificials out of the basis or drop redundant rows.
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.first_artificial {
                if let Some(e) = (0..self.first_artificial).find(|&j| !self.rows[i][j].is_zero()) {
                    let mut dummy = vec![Rational::zero(); self.ncols];
                    let mut dv = Rational::zero();
                    self.pivot(i, e, &mut dummy, &mut dv);
                } else {
                    self.rows.remove(i);
                    self.rhs.remove(i);
                    self.basis.remove(i);
                    continue;
                }
            }
            i += 1;
        }
        let mut cost = vec![Rational::zero(); self.ncols];
        for (j, c) in lp.objective.iter().enumerate() {
            let (p, n) = self.var_cols[j];
            cost[p] += c;
            if let Some(n) = n {
                cost[n] -= c;
            }
        }
        let (mut obj, mut val) = self.reduced(&cost);
        if !self.iterate(&mut obj, &mut val, self.first_artificial) {
            return LpOutcome::Unbounded;
        }
        let mut col_val = vec![Rational::zero(); self.ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            col_val[b] = self.rhs[i].clone();
        }
        let x = self
            .var_cols
            .iter()
            .map(|&(p, n)| match n {
                Some(n) => &col_val[p] - &col_val[n],
                None => col_val[p].clone(),
            })
            .collect();
        LpOutcome::Optimal { value: val, x }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rint};

    #[test]
    fn textbook_max() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![rint(3), rint(5)];
        lp.add(vec![(0, rint(1))], Relation::Le, rint(4));
        lp.add(vec![(1, rint(2))], Relation::Le, rint(12));
        lp.add(vec![(0, rint(3)), (1, rint(2))], Relation::Le, rint(18));
        match lp.solve() {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(value, rint(36));
                assert_eq!(x, vec![rint(2), rint(6)]);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x + y with x - y = -3, x >= -5, y <= 1, both free: x = -5, y = -2
        let mut lp = LinearProgram::new(2);
        lp.free = vec![true, true];
        lp.objective = vec![-rint(1), -rint(1)];
        lp.add(vec![(0, rint(1)), (1, -rint(1))], Relation::Eq, rint(-3));
        lp.add(vec![(0, rint(1))], Relation::Ge, rint(-5));
        lp.add(vec![(1, rint(1))], Relation::Le, rint(1));
        match lp.solve() {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(x, vec![rint(-5), rint(-2)]);
                assert_eq!(value, rint(7));
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![(0, rint(1))], Relation::Ge, rint(2));
        lp.add(vec![(0, rint(1))], Relation::Le, rint(1));
        assert_eq!(lp.solve(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new(1);
        lp.objective = vec![rint(1)];
        lp.add(vec![(0, rint(1))], Relation::Ge, rat(1, 2));
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_redundant_rows() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![rint(1), rint(1)];
        lp.add(vec![(0, rint(1)), (1, rint(1))], Relation::Eq, rint(1));
        lp.add(vec![(0, rint(2)), (1, rint(2))], Relation::Eq, rint(2));
        match lp.solve() {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, rint(1)),
            o => panic!("{o:?}"),
        }
    }
}
