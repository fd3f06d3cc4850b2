//! Mass-orthonormal eigenbasis of the discrete Laplace–Beltrami operator,
//! spectral Sobolev norms and the hyperbolic/elliptic frequency split.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::damping::DampingProfile;
use crate::error::{Error, Result};
use crate::geometry::{damping_matrix, Boundary, DiscreteOperator};
use crate::linalg::pencil::{residual, PencilEigen};
use crate::linalg::{CsrMatrix, SymmetricPencil};

/// Pairs `(λ_k², e_k)` with `K e_k = λ_k² M e_k` and `Eᵀ M E = I`.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    /// `λ_k²`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is `e_k` on the free dofs.
    pub vectors: DMatrix<f64>,
    op: Arc<DiscreteOperator>,
}

/// Coefficients `u_k = ⟨f, e_k⟩` of a (complex) function.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCoefficients {
    pub values: Vec<Complex64>,
}

impl SpectralCoefficients {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self { values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn unit(n: usize, k: usize) -> Self {
        let mut c = Self::zeros(n);
        c.values[k] = Complex64::new(1.0, 0.0);
        c
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn to_vector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.values)
    }
}

impl std::ops::Add for &SpectralCoefficients {
    type Output = SpectralCoefficients;

    fn add(self, rhs: Self) -> SpectralCoefficients {
        assert_eq!(self.len(), rhs.len());
        SpectralCoefficients { values: self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect() }
    }
}

const DENSE_LIMIT: usize = 300;

fn solve_pencil(k: &CsrMatrix, m: &CsrMatrix, count: usize) -> Result<PencilEigen> {
    let pencil = SymmetricPencil::new(k, m);
    let n = pencil.dim();
    if n <= DENSE_LIMIT || 2 * count > n {
        pencil.dense_eigen(count)
    } else {
        pencil.band_eigen(count)
    }
}

/// Lowest `count` eigenpairs of `(K, M)`.
///
/// One-dimensional problems use the band solver (dense Cholesky reduction
/// for small or nearly full requests); rectangles combine the two axis bases
/// by tensor products, which is exact for Kronecker-sum matrices.
pub fn eigendecompose(op: &DiscreteOperator, count: usize) -> Result<SpectralBasis> {
    let n_free = op.n_free();
    if count == 0 || count > n_free {
        return Err(Error::Eigensolver {
            reason: format!("requested {count} eigenpairs but only {n_free} free dofs exist"),
            residual: f64::NAN,
        });
    }
    let zero_mode = op.boundary().has_zero_mode();
    let (values, vectors) = if op.dimension() == 1 {
        let mut e = solve_pencil(op.stiffness(), op.mass(), count)?;
        if zero_mode {
            set_constant_mode(&mut e, op.mass());
        }
        (e.values, e.vectors)
    } else {
        let axes: Vec<PencilEigen> = op
            .axes()
            .iter()
            .map(|ax| {
                let k = ax.stiffness.restrict(&ax.free);
                let m = ax.mass.restrict(&ax.free);
                let mut e = solve_pencil(&k, &m, count.min(ax.free.len()))?;
                if zero_mode {
                    set_constant_mode(&mut e, &m);
                }
                Ok(e)
            })
            .collect::<Result<_>>()?;
        let (ex, ey) = (&axes[0], &axes[1]);
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(ex.values.len() * ey.values.len());
        for (i, &lx) in ex.values.iter().enumerate() {
            for (j, &ly) in ey.values.iter().enumerate() {
                pairs.push((lx + ly, i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        pairs.truncate(count);
        let mut vecs = DMatrix::zeros(n_free, count);
        for (c, &(_, i, j)) in pairs.iter().enumerate() {
            let col = ey.vectors.column(j).kronecker(&ex.vectors.column(i));
            vecs.set_column(c, &col);
        }
        (pairs.iter().map(|p| p.0).collect(), vecs)
    };
    let basis = SpectralBasis { eigenvalues: values, vectors, op: Arc::new(op.clone()) };
    let res = basis.max_residual();
    let orth = basis.orthonormality_error();
    if !(res <= 1e-8) || !(orth <= 1e-8) {
        return Err(Error::Eigensolver {
            reason: format!("eigenbasis check failed (orthonormality error {orth:e})"),
            residual: res,
        });
    }
    Ok(basis)
}

/// Replaces the lowest pair with the exact constant kernel vector.
fn set_constant_mode(e: &mut PencilEigen, mass: &CsrMatrix) {
    let n = mass.nrows();
    let ones = vec![1.0; n];
    let c = 1.0 / mass.quad_form(&ones).sqrt();
    e.values[0] = 0.0;
    e.vectors.set_column(0, &DVector::from_element(n, c));
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn op(&self) -> &DiscreteOperator {
        &self.op
    }

    pub fn op_arc(&self) -> Arc<DiscreteOperator> {
        Arc::clone(&self.op)
    }

    pub fn boundary(&self) -> Boundary {
        self.op.boundary()
    }

    /// `λ_k = √(λ_k²)`.
    pub fn frequencies(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect()
    }

    /// Leading `n` modes.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::Mismatch(format!("cannot keep {n} of {} modes", self.len())));
        }
        Ok(Self {
            eigenvalues: self.eigenvalues[..n].to_vec(),
            vectors: self.vectors.columns(0, n).into_owned(),
            op: Arc::clone(&self.op),
        })
    }

    /// Largest relative residual over the columns.
    pub fn max_residual(&self) -> f64 {
        (0..self.len())
            .map(|k| {
                let col: Vec<f64> = self.vectors.column(k).iter().copied().collect();
                residual(self.op.stiffness(), self.op.mass(), &col, self.eigenvalues[k])
            })
            .fold(0.0, f64::max)
    }

    /// `max |Eᵀ M E − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.gram(self.op.mass());
        (g - DMatrix::identity(self.len(), self.len())).amax()
    }

    /// `Eᵀ A E` for a free-dof matrix `A`.
    pub fn gram(&self, a: &CsrMatrix) -> DMatrix<f64> {
        let g = self.vectors.transpose() * a.mul_dense(&self.vectors);
        (&g + g.transpose()) * 0.5
    }

    /// Damping coupling `Eᵀ D E` in spectral coordinates.
    pub fn coupling(&self, profile: &DampingProfile) -> Result<DMatrix<f64>> {
        let d = damping_matrix(&self.op, profile)?;
        Ok(self.gram(&d))
    }

    /// Coefficients `⟨f, e_k⟩_M` of a real free-dof vector.
    pub fn project(&self, free: &[f64]) -> SpectralCoefficients {
        let mf = self.op.mass().mul_vec(free);
        let c = self.vectors.transpose() * DVector::from_vec(mf);
        SpectralCoefficients::from_real(c.as_slice())
    }

    /// Coefficients of a real function sampled at every mesh node.
    pub fn project_nodal(&self, nodal: &[f64]) -> SpectralCoefficients {
        self.project(&self.op.to_free(nodal))
    }

    /// Free-dof values `Σ_k u_k e_k`.
    pub fn synthesize(&self, coeffs: &SpectralCoefficients) -> Vec<Complex64> {
        assert_eq!(coeffs.len(), self.len());
        (0..self.vectors.nrows())
            .map(|i| {
                coeffs
                    .values
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| c * self.vectors[(i, k)])
                    .sum()
            })
            .collect()
    }

    /// Whether two bases were built on the same mesh.
    pub fn same_mesh(&self, op: &DiscreteOperator) -> bool {
        self.op.domain == op.domain && self.op.n_nodes() == op.n_nodes()
    }
}

/// `(Σ_k (1 + λ_k²)^s |u_k|²)^{1/2}`; intended for `s ∈ [−2, 2]`.
pub fn sobolev_norm(basis: &SpectralBasis, coeffs: &SpectralCoefficients, s: f64) -> f64 {
    coeffs
        .values
        .iter()
        .zip(&basis.eigenvalues)
        .map(|(u, &l)| (1.0 + l.max(0.0)).powf(s) * u.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterMode {
    /// Modes with `|τ² − λ_k²| ≤ half_width`.
    Hyperbolic,
    /// The complement.
    Elliptic,
}

/// Hyperbolic/elliptic split with the default band half-width 1.
pub fn frequency_filter(basis: &SpectralBasis, coeffs: &SpectralCoefficients, tau: f64, mode: FilterMode) -> SpectralCoefficients {
    frequency_filter_with(basis, coeffs, tau, mode, 1.0)
}

pub fn frequency_filter_with(
    basis: &SpectralBasis,
    coeffs: &SpectralCoefficients,
    tau: f64,
    mode: FilterMode,
    half_width: f64,
) -> SpectralCoefficients {
    let zero = Complex64::new(0.0, 0.0);
    let values = coeffs
        .values
        .iter()
        .zip(&basis.eigenvalues)
        .map(|(&u, &l)| {
            let hyperbolic = (tau * tau - l).abs() <= half_width;
            match (mode, hyperbolic) {
                (FilterMode::Hyperbolic, true) | (FilterMode::Elliptic, false) => u,
                _ => zero,
            }
        })
        .collect();
    SpectralCoefficients { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{assemble, DomainSpec, MetricSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn unit(n: usize, bc: Boundary) -> DiscreteOperator {
        assemble(&DomainSpec::unit_interval(n, bc), &MetricSpec::unit()).unwrap()
    }

    #[test]
    fn single_dof_eigenvalue() {
        let b = eigendecompose(&unit(2, Boundary::Dirichlet), 1).unwrap();
        assert!((b.eigenvalues[0] - 12.0).abs() < 1e-12);
    }

    #[test]
    fn first_dirichlet_frequency_is_pi() {
        let b = eigendecompose(&unit(1024, Boundary::Dirichlet), 10).unwrap();
        assert!((b.frequencies()[0] - PI).abs() / PI < 1e-3);
        for k in 0..10 {
            let exact = ((k + 1) as f64 * PI).powi(2);
            assert!((b.eigenvalues[k] - exact).abs() / exact < 0.01);
        }
    }

    #[test]
    fn circle_has_zero_mode_and_double_eigenvalues() {
        let op = assemble(&DomainSpec::circle(2.0 * PI, 400), &MetricSpec::unit()).unwrap();
        let b = eigendecompose(&op, 9).unwrap();
        assert_eq!(b.eigenvalues[0], 0.0);
        let c = b.vectors[(0, 0)];
        assert!(b.vectors.column(0).iter().all(|&v| v == c));
        for k in 1..=4 {
            let (l1, l2) = (b.eigenvalues[2 * k - 1], b.eigenvalues[2 * k]);
            assert!((l1 - l2).abs() < 1e-9 * l1, "k={k}: {l1} vs {l2}");
            assert!((l1 - (k * k) as f64).abs() / (k * k) as f64 <= 1e-3);
        }
    }

    #[test]
    fn parseval_for_full_basis() {
        let metric = MetricSpec::PiecewiseLinear { nodes: vec![(0.0, 1.0), (0.5, 3.0), (1.0, 1.5)] };
        let op = assemble(&DomainSpec::unit_interval(40, Boundary::Neumann), &metric).unwrap();
        let b = eigendecompose(&op, op.n_free()).unwrap();
        let f: Vec<f64> = (0..op.n_free()).map(|i| (i as f64 * 0.37).sin() + 0.2).collect();
        let c = b.project(&f);
        let lhs: f64 = c.values.iter().map(|z| z.norm_sqr()).sum();
        let rhs = op.mass().quad_form(&f);
        assert!((lhs - rhs).abs() <= 1e-8 * rhs);
    }

    #[test]
    fn band_route_matches_dense_route_on_rough_metric() {
        let metric = MetricSpec::PiecewiseLinear { nodes: vec![(0.0, 0.5), (0.2, 2.0), (0.7, 0.8), (1.0, 1.2)] };
        let op = assemble(&DomainSpec::unit_interval(600, Boundary::Neumann), &metric).unwrap();
        let band = eigendecompose(&op, 20).unwrap();
        let dense = SymmetricPencil::new(op.stiffness(), op.mass()).dense_eigen(20).unwrap();
        for k in 1..20 {
            assert!((band.eigenvalues[k] - dense.values[k]).abs() < 1e-9 * dense.values[k]);
        }
    }

    #[test]
    fn rectangle_basis_is_tensor_product() {
        let op = assemble(&DomainSpec::rectangle(1.0, 1.0, 16, Boundary::Dirichlet), &MetricSpec::unit()).unwrap();
        let b = eigendecompose(&op, 6).unwrap();
        assert!(b.max_residual() < 1e-10);
        // (1,1), (1,2), (2,1): λ² ≈ 2π², 5π², 5π².
        assert!((b.eigenvalues[0] / (2.0 * PI * PI) - 1.0).abs() < 0.01);
        assert!((b.eigenvalues[1] - b.eigenvalues[2]).abs() < 1e-9 * b.eigenvalues[1]);
    }

    #[test]
    fn metric_scaling_scales_eigenvalues() {
        let spec = DomainSpec::unit_interval(64, Boundary::Dirichlet);
        let a = eigendecompose(&assemble(&spec, &MetricSpec::unit()).unwrap(), 8).unwrap();
        let b = eigendecompose(&assemble(&spec, &MetricSpec::Constant { g0: 3.0 }).unwrap(), 8).unwrap();
        for k in 0..8 {
            assert!((b.eigenvalues[k] - a.eigenvalues[k] / 3.0).abs() < 1e-10 * a.eigenvalues[k]);
        }
    }

    #[test]
    fn too_many_modes_is_an_error() {
        assert!(eigendecompose(&unit(4, Boundary::Dirichlet), 4).is_err());
    }

    #[test]
    fn sobolev_norm_examples() {
        let b = eigendecompose(&unit(512, Boundary::Dirichlet), 4).unwrap();
        let e0 = SpectralCoefficients::unit(4, 0);
        for s in [-2.0, -0.5, 1.0, 2.0] {
            let expected = (1.0 + b.eigenvalues[0]).powf(s / 2.0);
            assert!((sobolev_norm(&b, &e0, s) - expected).abs() < 1e-12 * expected);
        }
        let c = SpectralCoefficients::from_real(&[0.3, -1.0, 2.0, 0.5]);
        assert!((sobolev_norm(&b, &c, 0.0) - c.l2_norm()).abs() < 1e-14);
        // e_1 + e_2 (first two modes), continuum eigenvalues as oracle.
        let f = SpectralCoefficients::from_real(&[1.0, 1.0, 0.0, 0.0]);
        let oracle = (1.0 + PI * PI) + (1.0 + 4.0 * PI * PI);
        let got = sobolev_norm(&b, &f, 1.0).powi(2);
        assert!((got - oracle).abs() / oracle < 1e-4);
    }

    #[test]
    fn filter_examples() {
        let b = eigendecompose(&unit(512, Boundary::Dirichlet), 6).unwrap();
        let c = SpectralCoefficients::from_real(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let h0 = frequency_filter(&b, &c, 0.0, FilterMode::Hyperbolic);
        assert!(h0.values.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        let h = frequency_filter(&b, &c, PI, FilterMode::Hyperbolic);
        let kept: Vec<usize> = (0..6).filter(|&k| h.values[k] != Complex64::new(0.0, 0.0)).collect();
        assert_eq!(kept, vec![0]);
    }

    proptest! {
        #[test]
        fn filters_partition_the_input(tau in -40.0f64..40.0, seed in 0u64..1000) {
            let b = eigendecompose(&unit(64, Boundary::Neumann), 20).unwrap();
            let vals: Vec<Complex64> = (0..20)
                .map(|k| Complex64::new(((k as u64 * 31 + seed) % 17) as f64 - 8.0, ((k as u64 + seed) % 5) as f64))
                .collect();
            let c = SpectralCoefficients::new(vals);
            let h = frequency_filter(&b, &c, tau, FilterMode::Hyperbolic);
            let e = frequency_filter(&b, &c, tau, FilterMode::Elliptic);
            prop_assert_eq!(&(&h + &e), &c);
            // Complementary supports, so the pieces are M-orthogonal.
            for k in 0..20 {
                prop_assert!(h.values[k].norm() == 0.0 || e.values[k].norm() == 0.0);
            }
        }

        #[test]
        fn sobolev_norm_is_monotone_in_s(s1 in -2.0f64..2.0, ds in 0.0f64..1.0, seed in 0u64..100) {
            let b = eigendecompose(&unit(32, Boundary::Dirichlet), 8).unwrap();
            let c = SpectralCoefficients::from_real(
                &(0..8).map(|k| (((k as u64 + 3) * (seed + 1)) % 7) as f64 - 3.0).collect::<Vec<_>>()
            );
            prop_assert!(sobolev_norm(&b, &c, s1) <= sobolev_norm(&b, &c, s1 + ds) * (1.0 + 1e-14));
        }
    }
}
