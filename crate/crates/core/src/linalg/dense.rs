//! Dense complex kernels: non-Hermitian eigendecomposition, extremal
//! singular values and Hermitian extremal eigenvalues.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Eigendecomposition `M = V diag(values) V⁻¹` together with the 2-norm
/// condition number of `V`.
#[derive(Clone, Debug)]
pub struct ComplexEigen {
    pub values: DVector<Complex64>,
    pub vectors: DMatrix<Complex64>,
    pub condition: f64,
}

/// Eigenpairs from a complex Schur form `M = Q T Q*`; eigenvectors of the
/// triangular factor come from back substitution.
pub fn complex_eigen(m: &DMatrix<Complex64>) -> Option<ComplexEigen> {
    let n = m.nrows();
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 0)?;
    let (q, t) = schur.unpack();
    let scale = t.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * scale;
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        let tkk = t[(k, k)];
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * y[(j, k)];
            }
            let mut d = t[(i, i)] - tkk;
            if d.norm() < small {
                d = Complex64::new(small, 0.0);
            }
            y[(i, k)] = -s / d;
        }
    }
    let mut v = q * y;
    for mut col in v.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= Complex64::new(nrm, 0.0);
        }
    }
    let sv = v.clone().singular_values();
    let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    let smin = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let values = DVector::from_fn(n, |i, _| t[(i, i)]);
    Some(ComplexEigen { values, vectors: v, condition })
}

/// Smallest and largest singular values.
pub fn min_singular_value(m: &DMatrix<Complex64>) -> (f64, f64) {
    let sv = m.clone().singular_values();
    let smin = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    (smin, smax)
}

/// Largest eigenvalue of the Hermitian part `(M + M*)/2`, i.e. the
/// numerical abscissa of `M`.
pub fn hermitian_max_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    nalgebra::SymmetricEigen::new(h).eigenvalues.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
}
