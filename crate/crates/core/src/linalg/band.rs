//! Banded storage with LU factorization (partial pivoting) and
//! pivot-free inertia counts for symmetric band matrices.

use super::sparse::CsrMatrix;

/// Square band matrix in LAPACK `gbtrf` layout: `kl` sub-diagonals, `ku`
/// super-diagonals and `kl` extra rows of head-room for pivoting fill-in.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self { n, kl, ku, ldab, data: vec![0.0; ldab * n] }
    }

    /// Builds `A - sigma·B` in the permuted ordering `order[new] = old`.
    pub fn shifted(a: &CsrMatrix, b: &CsrMatrix, sigma: f64, order: &[usize], bw: usize) -> Self {
        let n = a.nrows();
        let mut pos = vec![0usize; n];
        for (new, &old) in order.iter().enumerate() {
            pos[old] = new;
        }
        let mut m = Self::zeros(n, bw, bw);
        for (i, j, v) in a.triplets() {
            m.add(pos[i], pos[j], v);
        }
        if sigma != 0.0 {
            for (i, j, v) in b.triplets() {
                m.add(pos[i], pos[j], -sigma * v);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.ku + self.kl >= j && j + self.kl >= i);
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i.abs_diff(j) <= if i > j { self.kl } else { self.ku }, "entry ({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Number of negative pivots of the unpivoted symmetric elimination.
    /// By Sylvester's law of inertia this is the number of negative
    /// eigenvalues of a symmetric matrix. Tiny pivots are replaced by
    /// `-pivmin`, the usual Sturm-count convention.
    pub fn negative_pivots(mut self) -> usize {
        let n = self.n;
        let bw = self.kl;
        let pivmin = f64::MIN_POSITIVE.sqrt() * self.max_abs().max(1.0);
        let mut negatives = 0;
        for k in 0..n {
            let mut p = self.get(k, k);
            if p.abs() < pivmin {
                p = -pivmin;
                self.set(k, k, p);
            }
            if p < 0.0 {
                negatives += 1;
            }
            let last = (k + bw).min(n - 1);
            for i in k + 1..=last {
                let l = self.get(i, k) / p;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=last {
                    let v = self.get(i, j) - l * self.get(k, j);
                    self.set(i, j, v);
                }
            }
        }
        negatives
    }

    /// In-place LU factorization with partial pivoting.
    /// Exactly zero pivots are replaced by a tiny multiple of the matrix
    /// scale so that nearly singular shifts (inverse iteration) still solve.
    pub fn lu(mut self) -> BandLu {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let tiny = f64::EPSILON * self.max_abs().max(f64::MIN_POSITIVE);
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let last_row = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.get(j, j).abs();
            for i in j + 1..=last_row {
                let v = self.get(i, j).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            ipiv[j] = p;
            let last_col = (j + ku + kl).min(n - 1);
            if p != j {
                for c in j..=last_col {
                    let a = self.get(j, c);
                    let b = self.get(p, c);
                    self.set(j, c, b);
                    self.set(p, c, a);
                }
            }
            if self.get(j, j).abs() < tiny {
                self.set(j, j, if self.get(j, j) < 0.0 { -tiny } else { tiny });
            }
            let piv = self.get(j, j);
            for i in j + 1..=last_row {
                let l = self.get(i, j) / piv;
                self.set(i, j, l);
                if l == 0.0 {
                    continue;
                }
                for c in j + 1..=last_col {
                    let v = self.get(i, c) - l * self.get(j, c);
                    self.set(i, c, v);
                }
            }
        }
        BandLu { m: self, ipiv }
    }
}

pub struct BandLu {
    m: BandMatrix,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.m.n;
        let (kl, ku) = (self.m.kl, self.m.ku);
        for j in 0..n {
            b.swap(j, self.ipiv[j]);
            let bj = b[j];
            if bj != 0.0 {
                for i in j + 1..=(j + kl).min(n - 1) {
                    b[i] -= self.m.get(i, j) * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.m.get(j, j);
            let bj = b[j];
            for i in j.saturating_sub(ku + kl)..j {
                b[i] -= self.m.get(i, j) * bj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn random_band(n: usize, bw: usize, seed: u64) -> CsrMatrix {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..(i + bw + 1).min(n) {
                let v = next();
                t.push((i, j, v));
                if i != j {
                    t.push((j, i, v));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn lu_solves_like_dense() {
        let n = 40;
        let a = random_band(n, 3, 7);
        let order: Vec<usize> = (0..n).collect();
        let lu = BandMatrix::shifted(&a, &CsrMatrix::identity(n), 0.0, &order, 3).lu();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = rhs.clone();
        lu.solve_in_place(&mut x);
        let dense = a.to_dense().lu().solve(&DVector::from_vec(rhs)).unwrap();
        for i in 0..n {
            assert!((x[i] - dense[i]).abs() < 1e-9 * dense.amax());
        }
    }

    #[test]
    fn inertia_matches_dense_eigenvalues() {
        let n = 30;
        let a = random_band(n, 2, 3);
        let eig = nalgebra::SymmetricEigen::new(a.to_dense()).eigenvalues;
        let order: Vec<usize> = (0..n).collect();
        for &sigma in &[-1.0, -0.3, 0.0, 0.2, 0.9] {
            let count = BandMatrix::shifted(&a, &CsrMatrix::identity(n), sigma, &order, 2).negative_pivots();
            let expected = eig.iter().filter(|&&l| l < sigma).count();
            assert_eq!(count, expected, "sigma = {sigma}");
        }
        let _ = DMatrix::<f64>::zeros(1, 1);
    }
}
