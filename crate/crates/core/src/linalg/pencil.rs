//! Symmetric-definite generalized eigenproblems `A x = λ B x` with `B`
//! positive definite.
//!
//! Two routes are provided. [`SymmetricPencil::dense_eigen`] reduces the
//! pencil by a Cholesky factorization of `B` and calls a dense symmetric
//! eigensolver. [`SymmetricPencil::band_eigen`] works directly on the sparse
//! band structure: eigenvalues by bisection on Sturm (inertia) counts,
//! eigenvectors by shifted inverse iteration, finished with a Rayleigh–Ritz
//! step inside clusters of nearly equal eigenvalues.

use nalgebra::{DMatrix, DVector};

use super::band::BandMatrix;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Eigenvalues (ascending) and `B`-orthonormal eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct PencilEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub struct SymmetricPencil<'a> {
    a: &'a CsrMatrix,
    b: &'a CsrMatrix,
    order: Vec<usize>,
    bw: usize,
}

const CLUSTER_RTOL: f64 = 1e-7;

impl<'a> SymmetricPencil<'a> {
    pub fn new(a: &'a CsrMatrix, b: &'a CsrMatrix) -> Self {
        assert_eq!(a.nrows(), b.nrows());
        let n = a.nrows();
        let natural: Vec<usize> = (0..n).collect();
        // Interleaving 0, n-1, 1, n-2, ... turns a cyclic (periodic) band
        // into an ordinary band of twice the width.
        let interleaved: Vec<usize> = (0..n)
            .map(|p| if p % 2 == 0 { p / 2 } else { n - 1 - p / 2 })
            .collect();
        let bw_of = |o: &[usize]| a.bandwidth(o).max(b.bandwidth(o));
        let (bw_nat, bw_int) = (bw_of(&natural), bw_of(&interleaved));
        let (order, bw) = if bw_int < bw_nat { (interleaved, bw_int) } else { (natural, bw_nat) };
        Self { a, b, order, bw }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        BandMatrix::shifted(self.a, self.b, sigma, &self.order, self.bw).negative_pivots()
    }

    fn upper_bound(&self) -> f64 {
        let n = self.dim();
        let mut ub = 1.0;
        while self.count_below(ub) < n {
            ub *= 2.0;
            if !ub.is_finite() {
                break;
            }
        }
        ub
    }

    fn lower_bound(&self) -> f64 {
        let mut lb = -1.0;
        while self.count_below(lb) > 0 {
            lb *= 2.0;
            if !lb.is_finite() {
                break;
            }
        }
        lb
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    fn bisect(&self, k: usize, mut lo: f64, mut hi: f64, atol: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= atol + 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) || mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn solve_shifted(&self, sigma: f64) -> impl Fn(&mut Vec<f64>) + '_ {
        let lu = BandMatrix::shifted(self.a, self.b, sigma, &self.order, self.bw).lu();
        let order = &self.order;
        move |x: &mut Vec<f64>| {
            let mut permuted: Vec<f64> = order.iter().map(|&o| x[o]).collect();
            lu.solve_in_place(&mut permuted);
            for (p, &o) in order.iter().enumerate() {
                x[o] = permuted[p];
            }
        }
    }

    fn b_normalize(&self, x: &mut [f64]) {
        let nrm = self.b.quad_form(x).max(0.0).sqrt();
        if nrm > 0.0 {
            x.iter_mut().for_each(|v| *v /= nrm);
        }
    }

    fn b_orthogonalize(&self, x: &mut [f64], against: &[Vec<f64>]) {
        for _ in 0..2 {
            let bx = self.b.mul_vec(x);
            for q in against {
                let c: f64 = q.iter().zip(&bx).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(q).for_each(|(xi, qi)| *xi -= c * qi);
            }
        }
    }

    /// Lowest `count` eigenpairs through bisection and inverse iteration.
    pub fn band_eigen(&self, count: usize) -> Result<PencilEigen> {
        self.band_eigen_range(0, count)
    }

    /// Eigenpairs with 0-based indices `first..first + count`.
    pub fn band_eigen_range(&self, first: usize, count: usize) -> Result<PencilEigen> {
        let n = self.dim();
        if first + count > n {
            return Err(Error::Eigensolver {
                reason: format!("requested indices up to {} of a {n}-dimensional pencil", first + count),
                residual: f64::NAN,
            });
        }
        let ub = self.upper_bound();
        let lb = self.lower_bound();
        let atol = 2.0 * f64::EPSILON * ub.abs().max(lb.abs());
        let mut values = Vec::with_capacity(count);
        let mut lo = lb;
        for k in first..first + count {
            let v = self.bisect(k, lo, ub, atol);
            values.push(v);
            lo = v - 2.0 * atol - 4.0 * f64::EPSILON * v.abs();
            lo = lo.max(lb);
        }

        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
        let mut cluster_start = 0;
        for (idx, &lambda) in values.iter().enumerate() {
            if idx > 0 && !same_cluster(values[idx - 1], lambda, ub) {
                cluster_start = idx;
            }
            let solve = self.solve_shifted(lambda);
            let mut x = start_vector(n, first + idx);
            let cluster = &vectors[cluster_start..idx];
            for _ in 0..3 {
                let mut y = self.b.mul_vec(&x);
                solve(&mut y);
                self.b_orthogonalize(&mut y, cluster);
                self.b_normalize(&mut y);
                x = y;
            }
            vectors.push(x);
        }

        let mut out = DMatrix::from_fn(n, count, |i, j| vectors[j][i]);
        // Rayleigh–Ritz inside each cluster, Rayleigh quotient elsewhere.
        let mut s = 0;
        while s < count {
            let mut e = s + 1;
            while e < count && same_cluster(values[e - 1], values[e], ub) {
                e += 1;
            }
            self.rayleigh_ritz(&mut out, &mut values, s, e)?;
            s = e;
        }
        for j in 0..count {
            let col: Vec<f64> = out.column(j).iter().copied().collect();
            let res = residual(self.a, self.b, &col, values[j]);
            if !(res <= 1e-6) {
                return Err(Error::Eigensolver {
                    reason: format!("inverse iteration did not converge for eigenvalue index {}", first + j),
                    residual: res,
                });
            }
        }
        Ok(PencilEigen { values, vectors: out })
    }

    fn rayleigh_ritz(&self, vecs: &mut DMatrix<f64>, values: &mut [f64], s: usize, e: usize) -> Result<()> {
        let block = vecs.columns(s, e - s).into_owned();
        let ab = block.transpose() * self.a.mul_dense(&block);
        let bb = block.transpose() * self.b.mul_dense(&block);
        let small = dense_pencil(&symmetrize(ab), &symmetrize(bb))?;
        let rotated = &block * &small.vectors;
        for j in 0..e - s {
            let mut col: Vec<f64> = rotated.column(j).iter().copied().collect();
            fix_sign(&mut col);
            vecs.set_column(s + j, &DVector::from_vec(col));
            values[s + j] = small.values[j];
        }
        Ok(())
    }

    /// Full decomposition via Cholesky reduction to a standard symmetric
    /// problem; returns the lowest `count` pairs.
    pub fn dense_eigen(&self, count: usize) -> Result<PencilEigen> {
        let mut full = dense_pencil(&self.a.to_dense(), &self.b.to_dense())?;
        full.values.truncate(count);
        let vectors = full.vectors.columns(0, count).into_owned();
        Ok(PencilEigen { values: full.values, vectors })
    }
}

fn same_cluster(a: f64, b: f64, scale: f64) -> bool {
    (b - a).abs() <= CLUSTER_RTOL * a.abs().max(b.abs()).max(1e-3 * scale.min(1.0))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Deterministic, well-spread start vector for inverse iteration.
fn start_vector(n: usize, k: usize) -> Vec<f64> {
    let mut s = 0x9E37_79B9_7F4A_7C15u64 ^ (k as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    (0..n)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            1.0 + (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

/// Makes the entry of largest magnitude positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best * (1.0 + 1e-9) {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Backward-error style residual `‖A x − λ B x‖ / ((‖A‖ + |λ| ‖B‖) ‖x‖)`
/// with infinity-norm matrix norms.
pub fn residual(a: &CsrMatrix, b: &CsrMatrix, x: &[f64], lambda: f64) -> f64 {
    let ax = a.mul_vec(x);
    let bx = b.mul_vec(x);
    let num: f64 = ax.iter().zip(&bx).map(|(p, q)| (p - lambda * q).powi(2)).sum::<f64>().sqrt();
    let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let den = (a.max_abs_row_sum() + lambda.abs() * b.max_abs_row_sum()) * xn;
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Dense symmetric-definite pencil via Cholesky of `B`; ascending values.
pub fn dense_pencil(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<PencilEigen> {
    let chol = b.clone().cholesky().ok_or_else(|| Error::Eigensolver {
        reason: "mass-type matrix is not positive definite".into(),
        residual: f64::NAN,
    })?;
    let l = chol.l();
    let linv_a = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::Eigensolver { reason: "singular Cholesky factor".into(), residual: f64::NAN })?;
    let c = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or_else(|| Error::Eigensolver { reason: "singular Cholesky factor".into(), residual: f64::NAN })?;
    let c = symmetrize(c);
    let eig = nalgebra::SymmetricEigen::try_new(c, f64::EPSILON, 0).ok_or_else(|| Error::Eigensolver {
        reason: "symmetric QR iteration did not converge".into(),
        residual: f64::NAN,
    })?;
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let y = DMatrix::from_fn(eig.eigenvectors.nrows(), idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
    let lt = l.transpose();
    let mut x = lt
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::Eigensolver { reason: "singular Cholesky factor".into(), residual: f64::NAN })?;
    for mut col in x.column_iter_mut() {
        let mut v: Vec<f64> = col.iter().copied().collect();
        fix_sign(&mut v);
        col.copy_from_slice(&v);
    }
    Ok(PencilEigen { values: idx.iter().map(|&i| eig.eigenvalues[i]).collect(), vectors: x })
}
