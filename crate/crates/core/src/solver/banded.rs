//! Banded LU factorization with partial pivoting, in the classic band
//! storage layout (2*kl + ku + 1 rows, with kl rows of fill-in headroom).

use crate::error::{Error, Result};

pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandedMatrix { n, kl, ku, ldab, data: vec![0.0; ldab * n] }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, row: usize, col: usize) -> usize {
        debug_assert!(row + self.ku + self.kl >= col && col + self.kl >= row);
        col * self.ldab + (self.kl + self.ku + row - col)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[self.idx(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        let i = self.idx(row, col);
        self.data[i] = v;
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let i = self.idx(row, col);
        self.data[i] += v;
    }

    /// In-place LU with partial pivoting; returns the pivot row chosen at
    /// each elimination column.
    pub fn factorize(mut self) -> Result<BandedLu> {
        let n = self.n;
        let kl = self.kl;
        let upper = self.kl + self.ku;
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let row_end = (j + kl).min(n - 1);
            let mut piv = j;
            let mut piv_abs = self.get(j, j).abs();
            for i in j + 1..=row_end {
                let a = self.get(i, j).abs();
                if a > piv_abs {
                    piv = i;
                    piv_abs = a;
                }
            }
            if piv_abs < 1e-300 {
                return Err(Error::SingularMatrix);
            }
            ipiv[j] = piv;
            let col_end = (j + upper).min(n - 1);
            if piv != j {
                for k in j..=col_end {
                    let a = self.get(j, k);
                    let b = self.get(piv, k);
                    self.set(j, k, b);
                    self.set(piv, k, a);
                }
            }
            let diag = self.get(j, j);
            for i in j + 1..=row_end {
                let l = self.get(i, j) / diag;
                self.set(i, j, l);
                if l != 0.0 {
                    for k in j + 1..=col_end {
                        let v = self.get(i, k) - l * self.get(j, k);
                        self.set(i, k, v);
                    }
                }
            }
        }
        Ok(BandedLu { mat: self, ipiv })
    }
}

pub struct BandedLu {
    mat: BandedMatrix,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.mat.n;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: rhs.len() });
        }
        let mut x = rhs.to_vec();
        let kl = self.mat.kl;
        let upper = self.mat.kl + self.mat.ku;
        for j in 0..n {
            let piv = self.ipiv[j];
            if piv != j {
                x.swap(j, piv);
            }
            let xj = x[j];
            if xj != 0.0 {
                for i in j + 1..=(j + kl).min(n - 1) {
                    x[i] -= self.mat.get(i, j) * xj;
                }
            }
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for k in j + 1..=(j + upper).min(n - 1) {
                s -= self.mat.get(j, k) * x[k];
            }
            x[j] = s / self.mat.get(j, j);
        }
        Ok(x)
    }
}
