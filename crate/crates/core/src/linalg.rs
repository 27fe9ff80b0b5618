//! Banded LU factorization with partial pivoting.
//!
//! Storage follows the LAPACK `gbtrf` layout: column-major, with `kl` extra
//! rows on top reserved for the fill-in created by row interchanges, so the
//! factored `U` has upper bandwidth `kl + ku`.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            ldab,
            ab: vec![0.0; ldab * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        self.kl + self.ku + r - c + c * self.ldab
    }

    #[inline]
    fn in_band(&self, r: usize, c: usize) -> bool {
        r <= c + self.kl && c <= r + self.ku
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        if self.in_band(r, c) {
            self.ab[self.idx(r, c)]
        } else {
            0.0
        }
    }

    /// Accumulates `value` into entry `(r, c)`.
    ///
    /// Panics if the entry lies outside the declared band.
    pub fn add(&mut self, r: usize, c: usize, value: f64) {
        assert!(
            self.in_band(r, c),
            "entry ({r}, {c}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.idx(r, c);
        self.ab[k] += value;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            let r0 = c.saturating_sub(self.ku);
            let r1 = (c + self.kl).min(self.n - 1);
            for r in r0..=r1 {
                y[r] += self.ab[self.idx(r, c)] * x[c];
            }
        }
        y
    }

    /// Factors in place. Consumes the matrix because the storage is reused.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let kv = kl + ku;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        let mut max_pivot = 0.0f64;
        let mut min_pivot = f64::INFINITY;

        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = self.ab[self.idx(j, j)].abs();
            for t in 1..=km {
                let v = self.ab[self.idx(j + t, j)].abs();
                if v > best {
                    best = v;
                    jp = t;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(format!("zero pivot in column {j} of {n}")));
            }
            max_pivot = max_pivot.max(best);
            min_pivot = min_pivot.min(best);
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.idx(j, c);
                    let b = self.idx(j + jp, c);
                    self.ab.swap(a, b);
                }
            }
            if km > 0 {
                let pivot = self.ab[self.idx(j, j)];
                for t in 1..=km {
                    let k = self.idx(j + t, j);
                    self.ab[k] /= pivot;
                }
                for c in (j + 1)..=ju {
                    let ujc = self.ab[self.idx(j, c)];
                    if ujc == 0.0 {
                        continue;
                    }
                    for t in 1..=km {
                        let l = self.ab[self.idx(j + t, j)];
                        let k = self.idx(j + t, c);
                        self.ab[k] -= l * ujc;
                    }
                }
            }
        }
        debug_assert!(kv < self.ldab);
        Ok(BandLu {
            m: self,
            ipiv,
            pivot_ratio: if max_pivot > 0.0 { min_pivot / max_pivot } else { 0.0 },
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    ipiv: Vec<usize>,
    pivot_ratio: f64,
}

impl BandLu {
    /// Smallest over largest pivot magnitude; a cheap conditioning indicator.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = &self.m;
        let n = m.n;
        assert_eq!(b.len(), n);
        let kv = m.kl + m.ku;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(p, j);
            }
            let km = m.kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                for t in 1..=km {
                    b[j + t] -= m.ab[m.idx(j + t, j)] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= m.ab[m.idx(j, j)];
            let bj = b[j];
            if bj != 0.0 {
                for r in j.saturating_sub(kv)..j {
                    b[r] -= m.ab[m.idx(r, j)] * bj;
                }
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
                .unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in (k + 1)..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn matches_dense_elimination_on_random_band_matrices() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (5, 1, 1), (40, 3, 2), (60, 0, 4), (33, 5, 0)] {
            let mut band = BandMatrix::zeros(n, kl, ku);
            let mut dense = vec![vec![0.0; n]; n];
            for r in 0..n {
                for c in r.saturating_sub(kl)..=(r + ku).min(n - 1) {
                    // small diagonal forces pivoting
                    let v: f64 = rng.gen_range(-1.0..1.0) * if r == c { 1e-3 } else { 1.0 };
                    band.add(r, c, v);
                    dense[r][c] = v;
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let expect = dense_solve(dense, b.clone());
            let x = band.clone().factor().unwrap().solve(&b);
            let scale = expect.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (u, v) in x.iter().zip(&expect) {
                assert!((u - v).abs() < 1e-9 * scale, "{u} vs {v}");
            }
            let r = band.matvec(&x);
            for (ri, bi) in r.iter().zip(&b) {
                assert!((ri - bi).abs() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn zero_matrix_is_singular() {
        let m = BandMatrix::zeros(3, 1, 1);
        assert!(matches!(m.factor(), Err(Error::Singular(_))));
    }
}
