//! Banded LU with partial pivoting, LAPACK-style column-major band storage.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    /// A zero n×n matrix with `kl` sub- and `ku` super-diagonals. Room for
    /// `kl` extra super-diagonals is reserved for pivoting fill-in.
    pub fn zeros(n: usize, kl: usize, ku: usize) -> BandMatrix {
        let ld = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            ld,
            data: vec![0.0; ld * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ld + (i + self.kl + self.ku - j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i > j + self.kl || j > i + self.ku + self.kl {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Panics when (i, j) lies outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i <= j + self.kl && j <= i + self.ku, "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// Solves A x = b in place, consuming the matrix.
    pub fn solve(mut self, b: &mut [f64]) -> Result<()> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let kv = kl + ku;
        let mut piv = vec![0usize; n];
        // upper band limit of column j after fill-in
        for j in 0..n {
            let last = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.data[self.idx(j, j)].abs();
            for i in j + 1..=last {
                let v = self.data[self.idx(i, j)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(j));
            }
            piv[j] = p;
            let jend = (j + kv).min(n - 1);
            if p != j {
                for c in j..=jend {
                    let a = self.idx(j, c);
                    let bb = self.idx(p, c);
                    self.data.swap(a, bb);
                }
            }
            let inv = 1.0 / self.data[self.idx(j, j)];
            for i in j + 1..=last {
                let k = self.idx(i, j);
                self.data[k] *= inv;
            }
            for c in j + 1..=jend {
                let ujc = self.data[self.idx(j, c)];
                if ujc == 0.0 {
                    continue;
                }
                let base_c = c * self.ld + kl + ku - c;
                let base_j = j * self.ld + kl + ku - j;
                for i in j + 1..=last {
                    self.data[base_c + i] -= self.data[base_j + i] * ujc;
                }
            }
        }
        // forward: apply row swaps and unit-lower solve
        for j in 0..n {
            b.swap(j, piv[j]);
            let bj = b[j];
            if bj != 0.0 {
                for i in j + 1..=(j + kl).min(n - 1) {
                    b[i] -= self.data[self.idx(i, j)] * bj;
                }
            }
        }
        // backward
        for j in (0..n).rev() {
            b[j] /= self.data[self.idx(j, j)];
            let bj = b[j];
            if bj != 0.0 {
                for i in j.saturating_sub(kv)..j {
                    b[i] -= self.data[self.idx(i, j)] * bj;
                }
            }
        }
        Ok(())
    }
}
