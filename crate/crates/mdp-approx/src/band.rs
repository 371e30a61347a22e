//! Banded LU factorization without pivoting.
//!
//! Only used for `I - P` of a policy on the unfolded model; those matrices
//! are nonsingular M-matrices, for which elimination in natural order keeps
//! positive pivots and bounded growth.

pub(crate) struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    a: Vec<f64>,
}

impl BandLu {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        BandLu { n, kl, ku, a: vec![0.0; n * (kl + ku + 1)] }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    /// Zeroes the matrix for reuse.
    pub fn clear(&mut self) {
        self.a.fill(0.0);
    }

    /// Adds `v` to entry (i, j), which must lie inside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.at(i, j);
        self.a[k] += v;
    }

    /// In-place factorization; false when a pivot vanishes.
    pub fn factor(&mut self) -> bool {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let piv = self.a[self.at(k, k)];
            if piv == 0.0 || !piv.is_finite() {
                return false;
            }
            for i in k + 1..n.min(k + kl + 1) {
                let ik = self.at(i, k);
                if self.a[ik] == 0.0 {
                    continue;
                }
                let l = self.a[ik] / piv;
                self.a[ik] = l;
                for j in k + 1..n.min(k + ku + 1) {
                    let kj = self.at(k, j);
                    let ij = self.at(i, j);
                    self.a[ij] -= l * self.a[kj];
                }
            }
        }
        true
    }

    pub fn solve(&self, b: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for i in 0..n {
            let mut s = b[i];
            for j in i.saturating_sub(kl)..i {
                s -= self.a[self.at(i, j)] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n.min(i + ku + 1) {
                s -= self.a[self.at(i, j)] * b[j];
            }
            b[i] = s / self.a[self.at(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_system() {
        // 2x0 - x1 = 1, -x0 + 2x1 - x2 = 0, -x1 + 2x2 = 1  =>  x = (1, 1, 1)
        let mut lu = BandLu::new(3, 1, 1);
        for i in 0..3 {
            lu.add(i, i, 2.0);
            if i > 0 {
                lu.add(i, i - 1, -1.0);
                lu.add(i - 1, i, -1.0);
            }
        }
        assert!(lu.factor());
        let mut b = vec![1.0, 0.0, 1.0];
        lu.solve(&mut b);
        for x in b {
            assert!((x - 1.0).abs() < 1e-12);
        }
    }
}
