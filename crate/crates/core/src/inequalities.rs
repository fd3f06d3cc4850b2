//! Observability constants of low-frequency spectral subspaces, the
//! Poincaré-type constant of the damped energy, and unique-continuation
//! diagnostics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::damping::{fat_cantor, DampingProfile, Region};
use crate::error::{Error, Result};
use crate::geometry::{damping_matrix, DiscreteOperator};
use crate::linalg::pencil::residual;
use crate::linalg::{CsrMatrix, SymmetricPencil};
use crate::resolvent::affine_upper_envelope;
use crate::spectral::SpectralBasis;

/// κ above this is flagged as effectively non-observable.
pub const KAPPA_FLAG: f64 = 1e8;

/// Observation region as it appears in a run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservationSpec {
    Whole,
    IntervalUnion { intervals: Vec<(f64, f64)> },
    FatCantor { level: u32, measure: f64 },
    /// The set `F = {a ≥ α}` of the damping.
    DampingSet,
}

/// A positive-measure set `ω` given by covered fractions of the x-elements
/// (stripes `ω × [0, L_y]` in 2-D).
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    pub fractions: Vec<f64>,
    /// Nodal indicator.
    pub mask: Vec<bool>,
    pub measure: f64,
    whole: bool,
}

impl ObservationSet {
    pub fn whole(op: &DiscreteOperator) -> Self {
        let ne = op.x_axis().elements.len();
        Self { fractions: vec![1.0; ne], mask: vec![true; op.n_nodes()], measure: op.volume(), whole: true }
    }

    pub fn from_region(op: &DiscreteOperator, region: &Region) -> Self {
        let axis = op.x_axis();
        let fractions = region.element_fractions(axis);
        let nx = axis.n_nodes();
        let mask = (0..op.n_nodes()).map(|i| region.contains(axis.coords[i % nx])).collect();
        let whole = fractions.iter().all(|&f| f == 1.0);
        Self { measure: op.measure(&fractions), fractions, mask, whole }
    }

    /// `F = {a ≥ α}` of a damping profile.
    pub fn from_damping(op: &DiscreteOperator, profile: &DampingProfile) -> Self {
        let fractions = profile.f_fractions.clone();
        let whole = fractions.iter().all(|&f| f == 1.0);
        Self { measure: op.measure(&fractions), fractions, mask: profile.f_mask.clone(), whole }
    }

    pub fn from_spec(op: &DiscreteOperator, spec: &ObservationSpec, profile: Option<&DampingProfile>) -> Result<Self> {
        let length = op.x_axis().length;
        let set = match spec {
            ObservationSpec::Whole => Self::whole(op),
            ObservationSpec::IntervalUnion { intervals } => {
                if intervals.iter().any(|&(a, b)| !(a < b) || a < 0.0 || b > length) {
                    return Err(Error::Config(format!("observation intervals must lie in [0, {length}]")));
                }
                Self::from_region(op, &Region::new(intervals.clone()))
            }
            ObservationSpec::FatCantor { level, measure } => Self::from_region(op, &fat_cantor(length, *level, *measure)?),
            ObservationSpec::DampingSet => {
                let p = profile.ok_or_else(|| Error::Config("observation.damping_set needs a damping".into()))?;
                Self::from_damping(op, p)
            }
        };
        if !(set.measure > 0.0) {
            return Err(Error::HypothesisFailed("observation set has zero measure".into()));
        }
        Ok(set)
    }

    /// `ω = M` (up to the discrete resolution).
    pub fn is_whole(&self) -> bool {
        self.whole
    }

    /// Restricted Gram matrix `∫_ω e_j e_k √g` over the basis.
    pub fn gram(&self, basis: &SpectralBasis) -> DMatrix<f64> {
        basis.gram(&self.mass(basis.op()))
    }

    pub fn mass(&self, op: &DiscreteOperator) -> CsrMatrix {
        op.weighted_mass(&self.fractions)
    }

    /// `B` with `BᵀB` equal to the restricted Gram matrix, assembled from
    /// element-wise Cholesky factors of the mass matrix.
    pub fn factor(&self, basis: &SpectralBasis) -> DMatrix<f64> {
        let op = basis.op();
        let n = basis.len();
        let mut pos = vec![usize::MAX; op.n_nodes()];
        for (i, &f) in op.free_dofs().iter().enumerate() {
            pos[f] = i;
        }
        let value = |node: usize, k: usize| if pos[node] == usize::MAX { 0.0 } else { basis.vectors[(pos[node], k)] };
        // Cholesky factor of [[2, 1], [1, 2]] / 6.
        let r = [[2f64.sqrt(), 0.5f64.sqrt()], [0.0, 1.5f64.sqrt()]].map(|row| row.map(|x| x / 6f64.sqrt()));
        let x_els: Vec<(usize, f64)> = op
            .x_axis()
            .elements
            .iter()
            .zip(&self.fractions)
            .enumerate()
            .filter(|(_, (_, &f))| f > 0.0)
            .map(|(e, (el, &f))| (e, (f * el.sqrt_g * el.length()).sqrt()))
            .collect();
        let nx = op.x_axis().n_nodes();
        // 1-D: a single y "element" with unit weight.
        let y_els: Vec<([usize; 2], f64)> = match op.axes().get(1) {
            Some(ay) => ay.elements.iter().map(|el| (el.nodes, (el.sqrt_g * el.length()).sqrt())).collect(),
            None => vec![([0, 0], 1.0)],
        };
        let two_d = op.dimension() == 2;
        let ry: Vec<[f64; 2]> = if two_d { r.to_vec() } else { vec![[1.0, 0.0]] };
        let mut rows = Vec::new();
        for &(e, wx) in &x_els {
            let xn = op.x_axis().elements[e].nodes;
            for &(yn, wy) in &y_els {
                for ry_row in &ry {
                    for rx_row in &r {
                        let w = wx * wy;
                        let row: Vec<f64> = (0..n)
                            .map(|k| {
                                let mut s = 0.0;
                                for (b, &cy) in ry_row.iter().enumerate() {
                                    for (a, &cx) in rx_row.iter().enumerate() {
                                        if cy * cx != 0.0 {
                                            s += cy * cx * value(yn[b] * nx + xn[a], k);
                                        }
                                    }
                                }
                                w * s
                            })
                            .collect();
                        rows.push(row);
                    }
                }
            }
        }
        DMatrix::from_fn(rows.len(), n, |i, k| rows[i][k])
    }

    /// Triangular factor for κ evaluations over nested subspaces.
    pub fn observability(&self, basis: &SpectralBasis) -> Observability {
        if self.whole {
            return Observability { r: DMatrix::identity(basis.len(), basis.len()), whole: true };
        }
        let b = self.factor(basis);
        let n = basis.len();
        let mut r = DMatrix::zeros(n, n);
        if b.nrows() > 0 {
            let qr = b.qr().r();
            let k = qr.nrows().min(n);
            r.view_mut((0, 0), (k, n)).copy_from(&qr.rows(0, k));
        }
        Observability { r, whole: false }
    }
}

/// `R` with `RᵀR = Eᵀ M_ω E`, upper triangular, so the Gram matrix of the
/// leading `m` modes is `R[..m, ..m]ᵀ R[..m, ..m]`.
#[derive(Clone, Debug)]
pub struct Observability {
    r: DMatrix<f64>,
    whole: bool,
}

impl Observability {
    /// `1/σ_min(R[..m, ..m])`.
    pub fn kappa(&self, m: usize) -> f64 {
        if self.whole {
            // ω = M gives ‖φ 1_ω‖ = ‖φ‖ identically.
            return 1.0;
        }
        let sv = self.r.view((0, 0), (m, m)).into_owned().singular_values();
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if smin > 0.0 {
            1.0 / smin
        } else {
            f64::INFINITY
        }
    }

    fn point(&self, lambda: f64, m: usize) -> ConstantPoint {
        let kappa = self.kappa(m);
        ConstantPoint { lambda, kappa, flagged: !(kappa <= KAPPA_FLAG), modes: m }
    }
}

/// κ(Λ, ω) with its flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantPoint {
    pub lambda: f64,
    pub kappa: f64,
    pub flagged: bool,
    /// `dim V_Λ`.
    pub modes: usize,
}

/// Number of modes with `λ_k ≤ Λ`.
fn subspace_dim(basis: &SpectralBasis, lambda: f64) -> usize {
    basis.frequencies().iter().take_while(|&&l| l <= lambda * (1.0 + 1e-12) + 1e-300).count()
}

/// `κ(Λ, ω) = max_{φ ∈ V_Λ} ‖φ‖ / ‖φ 1_ω‖`.
pub fn spectral_constant(basis: &SpectralBasis, omega: &ObservationSet, lambda: f64) -> Result<ConstantPoint> {
    let m = subspace_dim(basis, lambda);
    if m == 0 {
        return Err(Error::EmptyWindow(format!("no eigenvalue with lambda_k <= {lambda}")));
    }
    if m == basis.len() && basis.len() < basis.op().n_free() {
        log::warn!("cutoff {lambda} reaches the last computed mode; V_Lambda may be truncated");
    }
    Ok(omega.observability(basis).point(lambda, m))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantCurve {
    pub lambdas: Vec<f64>,
    pub kappas: Vec<f64>,
    pub flagged: Vec<bool>,
    pub modes: Vec<usize>,
    pub omega_mask: Vec<bool>,
    /// `(C, D)` with `κ(Λ) ≤ C e^{DΛ}` on the unflagged points.
    pub fit: Option<(f64, f64)>,
}

/// κ over an ascending grid of cutoffs (cutoffs below `λ_0` are skipped).
pub fn constant_curve(basis: &SpectralBasis, omega: &ObservationSet, lambdas: &[f64]) -> Result<ConstantCurve> {
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("Lambda grid must be strictly increasing".into()));
    }
    let obs = omega.observability(basis);
    let pts: Vec<ConstantPoint> = lambdas
        .par_iter()
        .filter_map(|&l| {
            let m = subspace_dim(basis, l);
            (m > 0).then(|| obs.point(l, m))
        })
        .collect();
    if pts.is_empty() {
        return Err(Error::EmptyWindow("every cutoff lies below the first eigenvalue".into()));
    }
    let mut curve = ConstantCurve {
        lambdas: pts.iter().map(|p| p.lambda).collect(),
        kappas: pts.iter().map(|p| p.kappa).collect(),
        flagged: pts.iter().map(|p| p.flagged).collect(),
        modes: pts.iter().map(|p| p.modes).collect(),
        omega_mask: omega.mask.clone(),
        fit: None,
    };
    curve.fit = fit_spectral_constants(&curve).ok();
    Ok(curve)
}

/// Smallest affine envelope of `(Λ, log κ)` with slope `D ≥ 0`, over the
/// unflagged points; returns `(C, D)`.
pub fn fit_spectral_constants(curve: &ConstantCurve) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = curve
        .lambdas
        .iter()
        .zip(&curve.kappas)
        .zip(&curve.flagged)
        .filter(|(_, &f)| !f)
        .map(|((&l, &k), _)| (l, k.ln()))
        .collect();
    let skipped = curve.flagged.iter().filter(|&&f| f).count();
    if skipped > 0 {
        log::warn!("{skipped} flagged kappa values excluded from the envelope fit");
    }
    if pts.is_empty() {
        return Err(Error::EmptyWindow("no unflagged kappa values to fit".into()));
    }
    if pts.len() < 3 {
        log::warn!("envelope fit from fewer than three points");
    }
    let (b, d) = affine_upper_envelope(&pts).ok_or_else(|| Error::EmptyWindow("non-finite kappa".into()))?;
    Ok((b.exp(), d))
}

/// Optimal `C_P` in `C_P (‖∇u‖² + ∫ a|u|²) ≥ ‖u‖²_{H¹}` with its extremal
/// vector (free dofs).
#[derive(Clone, Debug)]
pub struct PoincareConstant {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Largest eigenvalue of the pencil `(K + M, K + D)`, computed as the
/// reciprocal of the smallest eigenvalue of `(K + D, K + M)`.
pub fn poincare_constant(op: &DiscreteOperator, profile: &DampingProfile) -> Result<PoincareConstant> {
    let d = damping_matrix(op, profile)?;
    let k = op.stiffness();
    let kd = CsrMatrix::linear_combination(1.0, k, 1.0, &d);
    let km = CsrMatrix::linear_combination(1.0, k, 1.0, op.mass());
    let pencil = SymmetricPencil::new(&kd, &km);
    let e = if pencil.dim() <= 300 { pencil.dense_eigen(1)? } else { pencil.band_eigen(1)? };
    let nu = e.values[0];
    let scale = kd.max_abs_row_sum() / km.max_abs_row_sum();
    if !(nu > 1e-12 * scale.max(1.0)) {
        return Err(Error::HypothesisFailed(
            "K + D is singular: the damping must have positive integral".into(),
        ));
    }
    let vector: Vec<f64> = e.vectors.column(0).iter().copied().collect();
    let r = residual(&kd, &km, &vector, nu);
    if r > 1e-8 {
        return Err(Error::Eigensolver { reason: "Poincaré pencil did not converge".into(), residual: r });
    }
    Ok(PoincareConstant { value: 1.0 / nu, vector })
}

/// `(uᵀ(K+M)u) / (uᵀ(K+D)u)`.
pub fn poincare_quotient(op: &DiscreteOperator, d: &CsrMatrix, u: &[f64]) -> f64 {
    let k = op.stiffness().quad_form(u);
    (k + op.mass().quad_form(u)) / (k + d.quad_form(u))
}

/// `r_k = ‖e_k‖_{L²(ω)} / ‖e_k‖_{L²}` for `k < k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationReport {
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
    pub argmin: usize,
}

pub fn unique_continuation_check(basis: &SpectralBasis, omega: &ObservationSet, k_max: usize) -> Result<ContinuationReport> {
    let k_max = k_max.min(basis.len());
    if k_max == 0 {
        return Err(Error::EmptyWindow("k_max must be positive".into()));
    }
    let sub = basis.truncated(k_max)?;
    let full = sub.gram(sub.op().mass());
    let b = if omega.is_whole() { None } else { Some(omega.factor(&sub)) };
    let ratios: Vec<f64> = (0..k_max)
        .map(|k| match &b {
            None => 1.0,
            Some(b) => b.column(k).norm() / full[(k, k)].sqrt(),
        })
        .collect();
    let (argmin, min_ratio) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (k, r)| if r < best.1 { (k, r) } else { best });
    if min_ratio == 0.0 {
        log::warn!("eigenfunction {argmin} vanishes on the observation set");
    }
    Ok(ContinuationReport { ratios, min_ratio, argmin })
}

/// Both sides of `‖u‖ ≤ κ(|μ|+1, ω)(‖S‖ + ‖1_ω u‖) + ‖S‖` for the
/// undamped Helmholtz solution `(−Λ + μ²) u = S`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HelmholtzEstimate {
    pub mu: f64,
    pub kappa: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl HelmholtzEstimate {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12)
    }
}

pub fn helmholtz_estimate(
    basis: &SpectralBasis,
    obs: &Observability,
    gram: &DMatrix<f64>,
    mu: f64,
    source: &[Complex64],
) -> Result<HelmholtzEstimate> {
    if source.len() != basis.len() || gram.nrows() != basis.len() {
        return Err(Error::Mismatch("source and Gram must match the basis".into()));
    }
    let mut u = DVector::<Complex64>::zeros(basis.len());
    for (k, (&s, &l)) in source.iter().zip(&basis.eigenvalues).enumerate() {
        let d = mu * mu - l;
        if d == 0.0 {
            return Err(Error::SpectrumOnAxis { taus: vec![mu] });
        }
        u[k] = s / d;
    }
    let s_norm = source.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let gc = gram.map(|x| Complex64::new(x, 0.0));
    let u_omega = (u.adjoint() * &gc * &u)[(0, 0)].re.max(0.0).sqrt();
    let m = subspace_dim(basis, mu.abs() + 1.0);
    // No hyperbolic modes: the elliptic bound alone applies.
    let kappa = if m == 0 { 1.0 } else { obs.kappa(m) };
    Ok(HelmholtzEstimate { mu, kappa, lhs: u.norm(), rhs: kappa * (s_norm + u_omega) + s_norm })
}
